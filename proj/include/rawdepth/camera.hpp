#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "rawdepth/errors.hpp"

namespace rawdepth {

using Matrix23d = Eigen::Matrix<double, 2, 3>;

enum class DistanceKind {
  PlanarDepth,        // z-coordinate of the point
  EuclideanDistance,  // norm of the point
};

struct PinholeIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  /// Throws InvalidParameter naming the first violated field.
  void validate() const;
};

/// Radial (k1, k2, k3) plus tangential (p1, p2) distortion on normalized
/// coordinates, followed by the pinhole intrinsics.
struct BrownConradyParams {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  PinholeIntrinsics intrinsics;

  bool distortion_free() const noexcept {
    return k1 == 0.0 && k2 == 0.0 && k3 == 0.0 && p1 == 0.0 && p2 == 0.0;
  }
};

// Radial functions r(theta), radius in pixels.
struct PolynomialRadial {
  std::array<double, 4> a{1.0, 0.0, 0.0, 0.0};  // a1 theta + a2 theta^2 + a3 theta^3 + a4 theta^4
};
struct UcmRadial {
  double f = 1.0;
  double xi = 0.0;
};
struct EucmRadial {
  double f = 1.0;
  double alpha = 0.0;
  double beta = 1.0;
};
struct RectilinearRadial {
  double f = 1.0;
};
struct StereographicRadial {
  double f = 1.0;
};
struct DoubleSphereRadial {
  double f = 1.0;
  double xi = 0.0;
  double alpha = 0.0;
};

using RadialKind = std::variant<PolynomialRadial, UcmRadial, EucmRadial, RectilinearRadial,
                                StereographicRadial, DoubleSphereRadial>;

/// Monotone radius -> incident angle table, linearly interpolated.
class InverseLut {
 public:
  InverseLut(std::vector<double> radii, std::vector<double> thetas);

  /// Interpolated theta for radius r; OutOfValidDomain outside [0, r_max].
  double lookup(double r) const;
  double r_max() const noexcept { return radii_.back(); }
  double theta_max() const noexcept { return thetas_.back(); }
  size_t resolution() const noexcept { return radii_.size(); }
  const std::vector<double>& radii() const noexcept { return radii_; }
  const std::vector<double>& thetas() const noexcept { return thetas_; }

 private:
  std::vector<double> radii_;
  std::vector<double> thetas_;
};

inline constexpr int kDefaultLutResolution = 4096;
inline constexpr int kMonotoneCheckSamples = 10000;

double default_theta_max(const RadialKind& kind);
std::string radial_kind_name(const RadialKind& kind);

class FisheyeModel {
 public:
  /// Validates parameters and checks r(theta) is strictly increasing on
  /// [0, theta_max] over kMonotoneCheckSamples samples. A non-positive
  /// theta_max selects default_theta_max(kind). Polynomial models get an
  /// inverse LUT of kDefaultLutResolution samples.
  FisheyeModel(RadialKind kind, double cx, double cy, int width, int height,
               double theta_max = 0.0);

  const RadialKind& kind() const noexcept { return kind_; }
  double cx() const noexcept { return cx_; }
  double cy() const noexcept { return cy_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  double theta_max() const noexcept { return theta_max_; }
  /// r(theta_max).
  double r_max() const noexcept { return r_max_; }
  /// Built-in LUT (polynomial models only), else nullptr.
  const InverseLut* lut() const noexcept { return lut_.get(); }
  /// Focal-like scale of the model: f, or a1 for polynomials.
  double focal() const noexcept;

 private:
  RadialKind kind_;
  double cx_;
  double cy_;
  int width_;
  int height_;
  double theta_max_;
  double r_max_;
  std::shared_ptr<const InverseLut> lut_;
};

class CameraModel {
 public:
  explicit CameraModel(BrownConradyParams params, DistanceKind kind = DistanceKind::PlanarDepth);
  explicit CameraModel(FisheyeModel model, DistanceKind kind = DistanceKind::EuclideanDistance);

  int width() const noexcept;
  int height() const noexcept;
  DistanceKind distance_kind() const noexcept { return distance_kind_; }
  bool is_fisheye() const noexcept { return std::holds_alternative<FisheyeModel>(model_); }
  const BrownConradyParams* brown_conrady() const noexcept { return std::get_if<BrownConradyParams>(&model_); }
  const FisheyeModel* fisheye() const noexcept { return std::get_if<FisheyeModel>(&model_); }
  /// "brown_conrady" or one of the fisheye radial names.
  std::string model_name() const;
  /// Largest undistorted normalized radius of the Brown-Conrady domain
  /// (infinity when the distortion map is monotone everywhere).
  double brown_conrady_r_max() const noexcept { return bc_r_max_; }
  /// Principal point / distortion centre.
  Eigen::Vector2d center() const noexcept;

 private:
  std::variant<BrownConradyParams, FisheyeModel> model_;
  DistanceKind distance_kind_;
  double bc_r_max_ = 0.0;
};

/// Largest r such that the Brown-Conrady radial map r -> r * (1 + k1 r^2 +
/// k2 r^4 + k3 r^6) has positive factor and derivative on [0, r].
double brown_conrady_monotone_limit(const BrownConradyParams& params);

// -- Projection --------------------------------------------------------------

/// Brown-Conrady forward map. Throws NonPositiveDepth / OutOfValidDomain.
Eigen::Vector2d project_brown_conrady(const BrownConradyParams& params, const Eigen::Vector3d& X);

double radial(const FisheyeModel& model, double theta);
/// dr/dtheta.
double radial_derivative(const FisheyeModel& model, double theta);

struct InverseRadialResult {
  double theta = 0.0;
  int iterations = 0;  // Newton iterations (0 for closed forms)
};

/// Incident angle for radius r. Closed form for every model except the
/// polynomial, which uses Newton seeded by the LUT (or r / a1 without one).
double inverse_radial(const FisheyeModel& model, double r, const InverseLut* lut = nullptr);
InverseRadialResult inverse_radial_detailed(const FisheyeModel& model, double r,
                                            const InverseLut* lut = nullptr);

InverseLut build_inverse_lut(const FisheyeModel& model, int resolution = kDefaultLutResolution);

Eigen::Vector2d project_fisheye(const FisheyeModel& model, const Eigen::Vector3d& X);

Eigen::Vector2d project(const CameraModel& cam, const Eigen::Vector3d& X);

/// Non-throwing projection. Returns nullopt outside the projection domain.
/// Fills the 2x3 Jacobian when requested.
std::optional<Eigen::Vector2d> try_project(const CameraModel& cam, const Eigen::Vector3d& X,
                                           Matrix23d* jacobian = nullptr) noexcept;

Matrix23d jacobian_project(const CameraModel& cam, const Eigen::Vector3d& X);

// -- Unprojection -------------------------------------------------------------

/// Ray v such that unproject(p, range) = range * v for the given distance
/// kind: unit norm for EuclideanDistance, unit z for PlanarDepth.
std::optional<Eigen::Vector3d> try_ray(const CameraModel& cam, const Eigen::Vector2d& p,
                                       DistanceKind kind, const InverseLut* lut = nullptr) noexcept;

Eigen::Vector3d unproject(const CameraModel& cam, const Eigen::Vector2d& p, double range,
                          DistanceKind kind, const InverseLut* lut = nullptr);

/// Fixed-point undistortion of normalized Brown-Conrady coordinates.
Eigen::Vector2d undistort_normalized(const BrownConradyParams& params, const Eigen::Vector2d& distorted);

}  // namespace rawdepth
