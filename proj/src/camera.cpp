#include "rawdepth/camera.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rawdepth {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kUndistortTol = 1e-10;
constexpr int kUndistortMaxIter = 50;
constexpr int kNewtonMaxIter = 20;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// r(theta) without domain checks.
double radial_raw(const RadialKind& kind, double t) {
  return std::visit(
      Overloaded{
          [t](const PolynomialRadial& m) {
            return t * (m.a[0] + t * (m.a[1] + t * (m.a[2] + t * m.a[3])));
          },
          [t](const UcmRadial& m) { return m.f * std::sin(t) / (std::cos(t) + m.xi); },
          [t](const EucmRadial& m) {
            const double s = std::sin(t), c = std::cos(t);
            return m.f * s / (c + m.alpha * (std::sqrt(m.beta * s * s + c * c) - c));
          },
          [t](const RectilinearRadial& m) { return m.f * std::tan(t); },
          [t](const StereographicRadial& m) { return 2.0 * m.f * std::tan(0.5 * t); },
          [t](const DoubleSphereRadial& m) {
            const double s = std::sin(t), c = std::cos(t);
            const double d = std::sqrt(s * s + (m.xi + c) * (m.xi + c));
            return m.f * s / (m.alpha * d + (1.0 - m.alpha) * (m.xi + c));
          },
      },
      kind);
}

double radial_derivative_raw(const RadialKind& kind, double t) {
  return std::visit(
      Overloaded{
          [t](const PolynomialRadial& m) {
            return m.a[0] + t * (2.0 * m.a[1] + t * (3.0 * m.a[2] + t * 4.0 * m.a[3]));
          },
          [t](const UcmRadial& m) {
            const double c = std::cos(t);
            const double g = c + m.xi;
            return m.f * (1.0 + m.xi * c) / (g * g);
          },
          [t](const EucmRadial& m) {
            const double s = std::sin(t), c = std::cos(t);
            const double q = std::sqrt(m.beta * s * s + c * c);
            const double g = c + m.alpha * (q - c);
            const double dq = s * c * (m.beta - 1.0) / q;
            const double dg = -s + m.alpha * (dq + s);
            return m.f * (c * g - s * dg) / (g * g);
          },
          [t](const RectilinearRadial& m) {
            const double c = std::cos(t);
            return m.f / (c * c);
          },
          [t](const StereographicRadial& m) {
            const double c = std::cos(0.5 * t);
            return m.f / (c * c);
          },
          [t](const DoubleSphereRadial& m) {
            const double s = std::sin(t), c = std::cos(t);
            const double d = std::sqrt(s * s + (m.xi + c) * (m.xi + c));
            const double g = m.alpha * d + (1.0 - m.alpha) * (m.xi + c);
            const double dd = -m.xi * s / d;
            const double dg = m.alpha * dd - (1.0 - m.alpha) * s;
            return m.f * (c * g - s * dg) / (g * g);
          },
      },
      kind);
}

void require_positive(double v, const char* key) {
  if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidParameter, key);
}

void validate_kind(const RadialKind& kind) {
  std::visit(Overloaded{
                 [](const PolynomialRadial& m) {
                   for (double a : m.a) {
                     if (!std::isfinite(a)) throw Error(ErrorCode::InvalidParameter, "a1");
                   }
                   require_positive(m.a[0], "a1");
                 },
                 [](const UcmRadial& m) {
                   require_positive(m.f, "f");
                   if (!(m.xi >= 0.0) || !std::isfinite(m.xi)) throw Error(ErrorCode::InvalidParameter, "xi");
                 },
                 [](const EucmRadial& m) {
                   require_positive(m.f, "f");
                   if (!(m.alpha >= 0.0 && m.alpha <= 1.0)) throw Error(ErrorCode::InvalidParameter, "alpha");
                   require_positive(m.beta, "beta");
                 },
                 [](const RectilinearRadial& m) { require_positive(m.f, "f"); },
                 [](const StereographicRadial& m) { require_positive(m.f, "f"); },
                 [](const DoubleSphereRadial& m) {
                   require_positive(m.f, "f");
                   if (!std::isfinite(m.xi) || m.xi < -1.0 || m.xi > 1.0) {
                     throw Error(ErrorCode::InvalidParameter, "xi");
                   }
                   if (!(m.alpha >= 0.0 && m.alpha <= 1.0)) throw Error(ErrorCode::InvalidParameter, "alpha");
                 },
             },
             kind);
}

// Strictly increasing r(theta) on [0, theta_max], sampled.
bool radial_is_monotone(const RadialKind& kind, double theta_max, int samples) {
  double prev = radial_raw(kind, 0.0);
  if (prev != 0.0) return false;
  for (int k = 1; k <= samples; ++k) {
    const double t = theta_max * k / samples;
    const double r = radial_raw(kind, t);
    if (!std::isfinite(r) || !(r > prev)) return false;
    prev = r;
  }
  return true;
}

double bc_radial_factor(const BrownConradyParams& m, double r2) {
  return 1.0 + r2 * (m.k1 + r2 * (m.k2 + r2 * m.k3));
}

Eigen::Vector2d bc_distort(const BrownConradyParams& m, double x, double y) {
  const double r2 = x * x + y * y;
  const double radial = bc_radial_factor(m, r2);
  return {x * radial + 2.0 * m.p1 * x * y + m.p2 * (r2 + 2.0 * x * x),
          y * radial + m.p1 * (r2 + 2.0 * y * y) + 2.0 * m.p2 * x * y};
}

// d(x', y') / d(x, y).
Eigen::Matrix2d bc_distort_jacobian(const BrownConradyParams& m, double x, double y) {
  const double r2 = x * x + y * y;
  const double radial = bc_radial_factor(m, r2);
  const double dradial = m.k1 + r2 * (2.0 * m.k2 + 3.0 * m.k3 * r2);  // d radial / d(r2)
  Eigen::Matrix2d J;
  J(0, 0) = radial + 2.0 * x * x * dradial + 2.0 * m.p1 * y + 6.0 * m.p2 * x;
  J(0, 1) = 2.0 * x * y * dradial + 2.0 * m.p1 * x + 2.0 * m.p2 * y;
  J(1, 0) = 2.0 * x * y * dradial + 2.0 * m.p1 * x + 2.0 * m.p2 * y;
  J(1, 1) = radial + 2.0 * y * y * dradial + 6.0 * m.p1 * y + 2.0 * m.p2 * x;
  return J;
}

std::optional<Eigen::Vector2d> try_undistort(const BrownConradyParams& m, const Eigen::Vector2d& d) {
  double x = d.x(), y = d.y();
  for (int it = 0; it < kUndistortMaxIter; ++it) {
    const double r2 = x * x + y * y;
    const double radial = bc_radial_factor(m, r2);
    if (!(radial > 0.0)) return std::nullopt;
    const double tx = 2.0 * m.p1 * x * y + m.p2 * (r2 + 2.0 * x * x);
    const double ty = m.p1 * (r2 + 2.0 * y * y) + 2.0 * m.p2 * x * y;
    const double nx = (d.x() - tx) / radial;
    const double ny = (d.y() - ty) / radial;
    if (!std::isfinite(nx) || !std::isfinite(ny)) return std::nullopt;
    const double change = std::max(std::abs(nx - x), std::abs(ny - y));
    x = nx;
    y = ny;
    if (change <= kUndistortTol) return Eigen::Vector2d(x, y);
  }
  return std::nullopt;
}

// Incident-angle closed forms; returns nullopt outside the model's range.
std::optional<double> closed_form_theta(const RadialKind& kind, double r) {
  return std::visit(
      Overloaded{
          [](const PolynomialRadial&) -> std::optional<double> { return std::nullopt; },
          [r](const UcmRadial& m) -> std::optional<double> {
            const double mr = r / m.f;
            const double m2 = mr * mr;
            const double disc = 1.0 + m2 * (1.0 - m.xi * m.xi);
            if (disc < 0.0) return std::nullopt;
            const double c = (-m2 * m.xi + std::sqrt(disc)) / (1.0 + m2);
            return std::atan2(mr * (c + m.xi), c);
          },
          [r](const EucmRadial& m) -> std::optional<double> {
            const double mr = r / m.f;
            const double m2 = mr * mr;
            const double disc = 1.0 - (2.0 * m.alpha - 1.0) * m.beta * m2;
            if (disc < 0.0) return std::nullopt;
            const double mz = (1.0 - m.beta * m.alpha * m.alpha * m2) /
                              (m.alpha * std::sqrt(disc) + 1.0 - m.alpha);
            return std::atan2(mr, mz);
          },
          [r](const RectilinearRadial& m) -> std::optional<double> { return std::atan(r / m.f); },
          [r](const StereographicRadial& m) -> std::optional<double> {
            return 2.0 * std::atan(r / (2.0 * m.f));
          },
          [r](const DoubleSphereRadial& m) -> std::optional<double> {
            const double mr = r / m.f;
            const double m2 = mr * mr;
            const double disc = 1.0 - (2.0 * m.alpha - 1.0) * m2;
            if (disc < 0.0) return std::nullopt;
            const double mz = (1.0 - m.alpha * m.alpha * m2) / (m.alpha * std::sqrt(disc) + 1.0 - m.alpha);
            const double disc2 = mz * mz + (1.0 - m.xi * m.xi) * m2;
            if (disc2 < 0.0) return std::nullopt;
            const double k = (mz * m.xi + std::sqrt(disc2)) / (mz * mz + m2);
            return std::atan2(k * mr, k * mz - m.xi);
          },
      },
      kind);
}

std::optional<InverseRadialResult> try_inverse_radial(const FisheyeModel& model, double r,
                                                      const InverseLut* lut) {
  if (!(r >= 0.0) || r > model.r_max()) return std::nullopt;
  if (r == 0.0) return InverseRadialResult{0.0, 0};
  const auto* poly = std::get_if<PolynomialRadial>(&model.kind());
  if (!poly) {
    const auto theta = closed_form_theta(model.kind(), r);
    if (!theta || !std::isfinite(*theta)) return std::nullopt;
    return InverseRadialResult{std::min(*theta, model.theta_max()), 0};
  }
  const double tmax = model.theta_max();
  double theta = 0.0;
  if (lut && r <= lut->r_max()) {
    theta = lut->lookup(r);
  } else {
    theta = std::min(r / poly->a[0], tmax);
  }
  const double scale = std::max(1.0, r);
  const double tight = 1e-12 * scale;
  int iterations = 0;
  double residual = radial_raw(model.kind(), theta) - r;
  while (std::abs(residual) > tight && iterations < kNewtonMaxIter) {
    const double slope = radial_derivative_raw(model.kind(), theta);
    if (!(slope > 0.0)) return std::nullopt;
    theta = std::clamp(theta - residual / slope, 0.0, tmax);
    residual = radial_raw(model.kind(), theta) - r;
    ++iterations;
  }
  if (!(std::abs(residual) <= 1e-9 * scale)) return std::nullopt;
  return InverseRadialResult{theta, iterations};
}

std::optional<Eigen::Vector2d> try_project_fisheye(const FisheyeModel& m, const Eigen::Vector3d& X,
                                                   Matrix23d* jac) {
  const double rho = std::hypot(X.x(), X.y());
  const double n2 = rho * rho + X.z() * X.z();
  if (!(n2 > 0.0)) return std::nullopt;
  const double theta = std::atan2(rho, X.z());
  if (theta > m.theta_max()) return std::nullopt;
  const double r = radial_raw(m.kind(), theta);
  if (rho == 0.0) {
    if (jac) {
      const double slope = radial_derivative_raw(m.kind(), 0.0) / X.z();
      *jac << slope, 0.0, 0.0, 0.0, slope, 0.0;
    }
    return Eigen::Vector2d(m.cx(), m.cy());
  }
  const double ux = X.x() / rho, uy = X.y() / rho;
  if (jac) {
    const double dr = radial_derivative_raw(m.kind(), theta);
    const Eigen::Vector3d dtheta(X.z() * X.x() / (rho * n2), X.z() * X.y() / (rho * n2), -rho / n2);
    const double k = r / rho;
    jac->row(0) = dr * ux * dtheta.transpose();
    jac->row(1) = dr * uy * dtheta.transpose();
    (*jac)(0, 0) += k * (1.0 - ux * ux);
    (*jac)(0, 1) += -k * ux * uy;
    (*jac)(1, 0) += -k * ux * uy;
    (*jac)(1, 1) += k * (1.0 - uy * uy);
  }
  return Eigen::Vector2d(m.cx() + r * ux, m.cy() + r * uy);
}

std::optional<Eigen::Vector2d> try_project_bc(const BrownConradyParams& m, double r_max,
                                              const Eigen::Vector3d& X, Matrix23d* jac) {
  if (!(X.z() > 0.0)) return std::nullopt;
  const double x = X.x() / X.z(), y = X.y() / X.z();
  if (std::hypot(x, y) > r_max) return std::nullopt;
  const Eigen::Vector2d d = bc_distort(m, x, y);
  const auto& K = m.intrinsics;
  if (jac) {
    Matrix23d dnorm;
    dnorm << 1.0 / X.z(), 0.0, -x / X.z(), 0.0, 1.0 / X.z(), -y / X.z();
    Eigen::Matrix2d F = Eigen::Matrix2d::Zero();
    F(0, 0) = K.fx;
    F(1, 1) = K.fy;
    *jac = F * bc_distort_jacobian(m, x, y) * dnorm;
  }
  return Eigen::Vector2d(K.fx * d.x() + K.cx, K.fy * d.y() + K.cy);
}

}  // namespace

// -- Intrinsics -----------------------------------------------------------------

void PinholeIntrinsics::validate() const {
  if (width < 1) throw Error(ErrorCode::InvalidParameter, "width");
  if (height < 1) throw Error(ErrorCode::InvalidParameter, "height");
  require_positive(fx, "fx");
  require_positive(fy, "fy");
  if (!(cx >= 0.0 && cx < width)) throw Error(ErrorCode::InvalidParameter, "cx");
  if (!(cy >= 0.0 && cy < height)) throw Error(ErrorCode::InvalidParameter, "cy");
}

// -- LUT ----------------------------------------------------------------------

InverseLut::InverseLut(std::vector<double> radii, std::vector<double> thetas)
    : radii_(std::move(radii)), thetas_(std::move(thetas)) {
  if (radii_.size() != thetas_.size() || radii_.size() < 2) {
    throw Error(ErrorCode::InvalidParameter, "lut size");
  }
  for (size_t i = 1; i < radii_.size(); ++i) {
    if (!(radii_[i] > radii_[i - 1]) || !(thetas_[i] > thetas_[i - 1])) {
      throw Error(ErrorCode::NonMonotoneRadial, "lut sample " + std::to_string(i));
    }
  }
}

double InverseLut::lookup(double r) const {
  if (!(r >= radii_.front()) || r > radii_.back()) {
    throw Error(ErrorCode::OutOfValidDomain, "radius outside lookup table");
  }
  auto it = std::upper_bound(radii_.begin(), radii_.end(), r);
  if (it == radii_.end()) return thetas_.back();
  const size_t hi = static_cast<size_t>(it - radii_.begin());
  const size_t lo = hi - 1;
  const double w = (r - radii_[lo]) / (radii_[hi] - radii_[lo]);
  return thetas_[lo] + w * (thetas_[hi] - thetas_[lo]);
}

InverseLut build_inverse_lut(const FisheyeModel& model, int resolution) {
  if (resolution < 64) throw Error(ErrorCode::InvalidParameter, "resolution");
  std::vector<double> radii(resolution), thetas(resolution);
  for (int k = 0; k < resolution; ++k) {
    const double t = model.theta_max() * k / (resolution - 1);
    thetas[k] = t;
    radii[k] = radial_raw(model.kind(), t);
    if (k > 0 && !(radii[k] > radii[k - 1])) {
      throw Error(ErrorCode::NonMonotoneRadial, "r(theta) not increasing at theta=" + std::to_string(t));
    }
  }
  return InverseLut(std::move(radii), std::move(thetas));
}

// -- Fisheye model -----------------------------------------------------------

double default_theta_max(const RadialKind& kind) {
  if (std::holds_alternative<RectilinearRadial>(kind)) return 89.0 * kPi / 180.0;
  return 100.0 * kPi / 180.0;
}

std::string radial_kind_name(const RadialKind& kind) {
  return std::visit(Overloaded{
                        [](const PolynomialRadial&) { return std::string("polynomial"); },
                        [](const UcmRadial&) { return std::string("ucm"); },
                        [](const EucmRadial&) { return std::string("eucm"); },
                        [](const RectilinearRadial&) { return std::string("rectilinear"); },
                        [](const StereographicRadial&) { return std::string("stereographic"); },
                        [](const DoubleSphereRadial&) { return std::string("double_sphere"); },
                    },
                    kind);
}

FisheyeModel::FisheyeModel(RadialKind kind, double cx, double cy, int width, int height, double theta_max)
    : kind_(kind), cx_(cx), cy_(cy), width_(width), height_(height),
      theta_max_(theta_max > 0.0 ? theta_max : default_theta_max(kind)) {
  if (width < 1) throw Error(ErrorCode::InvalidParameter, "width");
  if (height < 1) throw Error(ErrorCode::InvalidParameter, "height");
  if (!(cx >= 0.0 && cx < width)) throw Error(ErrorCode::InvalidParameter, "cx");
  if (!(cy >= 0.0 && cy < height)) throw Error(ErrorCode::InvalidParameter, "cy");
  validate_kind(kind_);
  if (!std::isfinite(theta_max_) || theta_max_ >= kPi) throw Error(ErrorCode::InvalidParameter, "theta_max");
  if (std::holds_alternative<RectilinearRadial>(kind_) && theta_max_ >= 0.5 * kPi) {
    throw Error(ErrorCode::InvalidParameter, "theta_max");
  }
  if (!radial_is_monotone(kind_, theta_max_, kMonotoneCheckSamples)) {
    throw Error(ErrorCode::NonMonotoneRadial, radial_kind_name(kind_) + " r(theta) not strictly increasing");
  }
  r_max_ = radial_raw(kind_, theta_max_);
  if (std::holds_alternative<PolynomialRadial>(kind_)) {
    lut_ = std::make_shared<const InverseLut>(build_inverse_lut(*this, kDefaultLutResolution));
  }
}

double FisheyeModel::focal() const noexcept {
  return std::visit(Overloaded{
                        [](const PolynomialRadial& m) { return m.a[0]; },
                        [](const auto& m) { return m.f; },
                    },
                    kind_);
}

double radial(const FisheyeModel& model, double theta) {
  if (!(theta >= 0.0) || theta > model.theta_max()) {
    throw Error(ErrorCode::OutOfValidDomain, "theta=" + std::to_string(theta));
  }
  return radial_raw(model.kind(), theta);
}

double radial_derivative(const FisheyeModel& model, double theta) {
  if (!(theta >= 0.0) || theta > model.theta_max()) {
    throw Error(ErrorCode::OutOfValidDomain, "theta=" + std::to_string(theta));
  }
  return radial_derivative_raw(model.kind(), theta);
}

InverseRadialResult inverse_radial_detailed(const FisheyeModel& model, double r, const InverseLut* lut) {
  if (!(r >= 0.0) || r > model.r_max()) {
    throw Error(ErrorCode::OutOfValidDomain, "r=" + std::to_string(r));
  }
  if (lut && r > lut->r_max()) throw Error(ErrorCode::OutOfValidDomain, "r beyond lookup table");
  auto result = try_inverse_radial(model, r, lut);
  if (!result) {
    if (std::holds_alternative<PolynomialRadial>(model.kind())) {
      throw Error(ErrorCode::NoConvergence, "polynomial inverse at r=" + std::to_string(r));
    }
    throw Error(ErrorCode::OutOfValidDomain, "r=" + std::to_string(r));
  }
  return *result;
}

double inverse_radial(const FisheyeModel& model, double r, const InverseLut* lut) {
  return inverse_radial_detailed(model, r, lut).theta;
}

Eigen::Vector2d project_fisheye(const FisheyeModel& model, const Eigen::Vector3d& X) {
  if (X.squaredNorm() == 0.0) throw Error(ErrorCode::ZeroVector, "projection of the origin");
  auto p = try_project_fisheye(model, X, nullptr);
  if (!p) throw Error(ErrorCode::OutOfValidDomain, "incident angle beyond theta_max");
  return *p;
}

// -- Brown-Conrady -------------------------------------------------------------

double brown_conrady_monotone_limit(const BrownConradyParams& m) {
  // Smallest positive root of either the radial factor or the derivative of
  // r * factor(r^2), both cubics in s = r^2. Log-spaced scan plus bisection.
  auto factor = [&](double s) { return 1.0 + s * (m.k1 + s * (m.k2 + s * m.k3)); };
  auto slope = [&](double s) { return 1.0 + s * (3.0 * m.k1 + s * (5.0 * m.k2 + s * 7.0 * m.k3)); };
  auto bad = [&](double s) { return std::min(factor(s), slope(s)); };
  constexpr int kSamples = 200000;
  const double lo_exp = -8.0, hi_exp = 8.0;
  double prev_s = 0.0;
  for (int i = 0; i <= kSamples; ++i) {
    const double s = std::pow(10.0, lo_exp + (hi_exp - lo_exp) * i / kSamples);
    if (bad(s) <= 0.0) {
      double a = prev_s, b = s;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        if (bad(mid) <= 0.0) b = mid; else a = mid;
      }
      return std::sqrt(a);
    }
    prev_s = s;
  }
  return std::numeric_limits<double>::infinity();
}

Eigen::Vector2d project_brown_conrady(const BrownConradyParams& params, const Eigen::Vector3d& X) {
  if (!(X.z() > 0.0)) throw Error(ErrorCode::NonPositiveDepth, "z=" + std::to_string(X.z()));
  const double r = std::hypot(X.x() / X.z(), X.y() / X.z());
  const double r_max = brown_conrady_monotone_limit(params);
  if (r > r_max) throw Error(ErrorCode::OutOfValidDomain, "r=" + std::to_string(r));
  return *try_project_bc(params, r_max, X, nullptr);
}

Eigen::Vector2d undistort_normalized(const BrownConradyParams& params, const Eigen::Vector2d& distorted) {
  auto u = try_undistort(params, distorted);
  if (!u) throw Error(ErrorCode::NoConvergence, "Brown-Conrady undistortion");
  return *u;
}

// -- CameraModel ---------------------------------------------------------------

CameraModel::CameraModel(BrownConradyParams params, DistanceKind kind)
    : model_(params), distance_kind_(kind) {
  params.intrinsics.validate();
  for (double v : {params.k1, params.k2, params.k3, params.p1, params.p2}) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidParameter, "k1");
  }
  bc_r_max_ = brown_conrady_monotone_limit(params);
  // The distortion domain must cover the image: every corner must undistort.
  const auto& K = params.intrinsics;
  const double xs[2] = {-0.5, K.width - 0.5};
  const double ys[2] = {-0.5, K.height - 0.5};
  for (double px : xs) {
    for (double py : ys) {
      const Eigen::Vector2d d((px - K.cx) / K.fx, (py - K.cy) / K.fy);
      auto u = try_undistort(params, d);
      if (!u || u->norm() > bc_r_max_) {
        throw Error(ErrorCode::InvalidParameter, "k1");
      }
    }
  }
}

CameraModel::CameraModel(FisheyeModel model, DistanceKind kind)
    : model_(std::move(model)), distance_kind_(kind) {}

int CameraModel::width() const noexcept {
  if (auto* bc = brown_conrady()) return bc->intrinsics.width;
  return fisheye()->width();
}

int CameraModel::height() const noexcept {
  if (auto* bc = brown_conrady()) return bc->intrinsics.height;
  return fisheye()->height();
}

std::string CameraModel::model_name() const {
  if (brown_conrady()) return "brown_conrady";
  return radial_kind_name(fisheye()->kind());
}

Eigen::Vector2d CameraModel::center() const noexcept {
  if (auto* bc = brown_conrady()) return {bc->intrinsics.cx, bc->intrinsics.cy};
  return {fisheye()->cx(), fisheye()->cy()};
}

// -- Generic projection / unprojection ---------------------------------------

std::optional<Eigen::Vector2d> try_project(const CameraModel& cam, const Eigen::Vector3d& X,
                                           Matrix23d* jacobian) noexcept {
  if (!X.allFinite()) return std::nullopt;
  if (auto* bc = cam.brown_conrady()) return try_project_bc(*bc, cam.brown_conrady_r_max(), X, jacobian);
  return try_project_fisheye(*cam.fisheye(), X, jacobian);
}

Eigen::Vector2d project(const CameraModel& cam, const Eigen::Vector3d& X) {
  if (auto* bc = cam.brown_conrady()) {
    if (!(X.z() > 0.0)) throw Error(ErrorCode::NonPositiveDepth, "z=" + std::to_string(X.z()));
    auto p = try_project_bc(*bc, cam.brown_conrady_r_max(), X, nullptr);
    if (!p) throw Error(ErrorCode::OutOfValidDomain, "beyond distortion domain");
    return *p;
  }
  return project_fisheye(*cam.fisheye(), X);
}

Matrix23d jacobian_project(const CameraModel& cam, const Eigen::Vector3d& X) {
  Matrix23d J;
  if (!try_project(cam, X, &J)) throw Error(ErrorCode::OutOfValidDomain, "jacobian outside domain");
  return J;
}

std::optional<Eigen::Vector3d> try_ray(const CameraModel& cam, const Eigen::Vector2d& p, DistanceKind kind,
                                       const InverseLut* lut) noexcept {
  if (!p.allFinite()) return std::nullopt;
  if (auto* bc = cam.brown_conrady()) {
    const auto& K = bc->intrinsics;
    const Eigen::Vector2d d((p.x() - K.cx) / K.fx, (p.y() - K.cy) / K.fy);
    auto u = try_undistort(*bc, d);
    if (!u || u->norm() > cam.brown_conrady_r_max()) return std::nullopt;
    Eigen::Vector3d v(u->x(), u->y(), 1.0);
    if (kind == DistanceKind::EuclideanDistance) v.normalize();
    return v;
  }
  const FisheyeModel& m = *cam.fisheye();
  const Eigen::Vector2d offset(p.x() - m.cx(), p.y() - m.cy());
  const double r = offset.norm();
  const auto inv = try_inverse_radial(m, r, lut ? lut : m.lut());
  if (!inv) return std::nullopt;
  const double theta = inv->theta;
  Eigen::Vector3d s(0.0, 0.0, 1.0);
  if (r > 0.0) {
    const double st = std::sin(theta);
    s = Eigen::Vector3d(st * offset.x() / r, st * offset.y() / r, std::cos(theta));
  }
  if (kind == DistanceKind::PlanarDepth) {
    if (!(s.z() > 0.0)) return std::nullopt;
    return Eigen::Vector3d(s / s.z());
  }
  return s;
}

Eigen::Vector3d unproject(const CameraModel& cam, const Eigen::Vector2d& p, double range, DistanceKind kind,
                          const InverseLut* lut) {
  if (!(range > 0.0) || !std::isfinite(range)) {
    throw Error(ErrorCode::NonPositiveDepth, "range=" + std::to_string(range));
  }
  if (auto* bc = cam.brown_conrady()) {
    const auto& K = bc->intrinsics;
    const Eigen::Vector2d d((p.x() - K.cx) / K.fx, (p.y() - K.cy) / K.fy);
    const Eigen::Vector2d u = undistort_normalized(*bc, d);
    if (u.norm() > cam.brown_conrady_r_max()) throw Error(ErrorCode::OutOfValidDomain, "beyond distortion domain");
    Eigen::Vector3d v(u.x(), u.y(), 1.0);
    if (kind == DistanceKind::EuclideanDistance) v.normalize();
    return range * v;
  }
  const FisheyeModel& m = *cam.fisheye();
  const double r = Eigen::Vector2d(p.x() - m.cx(), p.y() - m.cy()).norm();
  const double theta = inverse_radial(m, r, lut ? lut : m.lut());
  if (kind == DistanceKind::PlanarDepth && theta >= 0.5 * kPi) {
    throw Error(ErrorCode::OutOfValidDomain, "planar depth needs theta < 90 deg");
  }
  auto v = try_ray(cam, p, kind, lut);
  if (!v) throw Error(ErrorCode::OutOfValidDomain, "no valid ray");
  return range * *v;
}

}  // namespace rawdepth
