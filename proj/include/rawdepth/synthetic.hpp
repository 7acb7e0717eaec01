#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "rawdepth/camera.hpp"
#include "rawdepth/image.hpp"
#include "rawdepth/se3.hpp"

namespace rawdepth {

/// Procedural texture evaluated on surface coordinates (u, v) in meters.
/// Noise is smooth value noise (two octaves) on a lattice of `period`
/// meters; the lattice values come from a hash of (seed, cell) so renders
/// are reproducible.
struct Texture {
  enum class Kind { Checker, Noise, Sinusoid };
  Kind kind = Kind::Noise;
  double period = 0.5;
  double low = 0.1;
  double high = 0.9;
  std::uint64_t seed = 1;

  /// Intensity for channel c (channels > 0 perturb the seed / phase).
  double value(double u, double v, int c = 0) const;
};

struct Primitive {
  enum class Kind { Plane, Sphere };
  Kind kind = Kind::Plane;
  /// Primitive -> world. Planes lie in the local z = 0 plane.
  Se3Transform pose;
  /// Plane extent along local x and y in meters; non-positive means unbounded.
  Eigen::Vector2d size{0.0, 0.0};
  double radius = 1.0;
  Texture texture;
};

struct SyntheticScene {
  std::vector<Primitive> primitives;
  double background = 0.0;
  int channels = 1;

  void validate() const;
};

struct RenderResult {
  ImageBuffer image;
  DepthMap depth;  // cam.distance_kind(); 0 where nothing was hit
  Mask hit;
};

/// Ray casts one ray per pixel centre. camera_to_world places the camera in
/// the scene; relative poses between two renders are
/// inverse(camera_to_world_b) * camera_to_world_a.
RenderResult render(const SyntheticScene& scene, const CameraModel& cam, const Se3Transform& camera_to_world);

/// Relative pose mapping points of camera a into camera b.
Se3Transform relative_pose(const Se3Transform& camera_to_world_a, const Se3Transform& camera_to_world_b);

/// Seeded smooth noise image in [0, 1] (period in pixels).
ImageBuffer noise_image(int width, int height, int channels, double period_px, std::uint64_t seed);

// -- Rectification analysis -------------------------------------------------------

/// For every dst pixel the src pixel it samples (identity rotation). Pixels
/// whose ray leaves the src projection domain or image are invalid.
CoordinateMap rectification_maps(const CameraModel& src, const PinholeIntrinsics& dst);

struct CropRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;  // inclusive
  int y1 = -1;
  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  long long area() const { return static_cast<long long>(width()) * height(); }
};

/// Largest axis-aligned rectangle of valid pixels containing (px, py).
/// Empty (area 0) when (px, py) itself is invalid.
CropRect largest_valid_rectangle(const Mask& valid, int px, int py);

/// Rectified pinhole canvas for src. With a target horizontal FOV the canvas
/// keeps the raw size and centre with f = (W / 2) / tan(hfov / 2). Without one
/// (Brown-Conrady only) the canvas keeps the focal lengths and is the
/// bounding box of all undistorted raw pixels.
PinholeIntrinsics rectified_canvas(const CameraModel& src, std::optional<double> target_hfov_rad);

struct RectificationReport {
  int raw_width = 0;
  int raw_height = 0;
  int canvas_width = 0;
  int canvas_height = 0;
  CropRect crop;
  long long valid_raw_pixels = 0;
  long long retained_raw_pixels = 0;
  /// 1 - retained / valid raw pixels.
  double info_loss_fraction = 0.0;
  /// 1 - crop area / valid rectified pixels.
  double rectified_area_loss_fraction = 0.0;
  double resampling_psnr = std::numeric_limits<double>::infinity();
  double resampling_ssim = 1.0;
};

/// Rectifies src onto its canvas, crops the largest valid rectangle holding
/// the principal point and counts the raw pixels that survive. The resampling
/// figures come from a round trip of a seeded noise image.
RectificationReport fov_loss(const CameraModel& src, std::optional<double> target_hfov_rad = std::nullopt,
                             std::uint64_t seed = 1);

struct ResamplingReport {
  double psnr = std::numeric_limits<double>::infinity();  // +inf when lossless
  double ssim = 1.0;
  double psnr_center = std::numeric_limits<double>::infinity();
  double psnr_periphery = std::numeric_limits<double>::infinity();
  long long pixels = 0;
};

/// Warps img (raw src view) to the dst pinhole and back, comparing with the
/// original over pixels valid in both directions. The centre region is the
/// set of pixels within half of the largest valid radius from the src centre.
ResamplingReport resampling_distortion(const ImageBuffer& img, const CameraModel& src, const PinholeIntrinsics& dst);

/// Rectifies raw (src view) onto dst and compares it with reference, an
/// ideal render of the same scene through dst. The centre region is within
/// half of the largest valid radius from the dst principal point.
ResamplingReport rectification_fidelity(const ImageBuffer& raw, const CameraModel& src, const PinholeIntrinsics& dst,
                                        const ImageBuffer& reference);

double psnr(double mse);

}  // namespace rawdepth
