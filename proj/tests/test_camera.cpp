#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "common.hpp"
#include "rawdepth/camera.hpp"
#include "rawdepth/io.hpp"

using namespace rawdepth;
using namespace rawdepth::test;

namespace {

constexpr double kPi = std::numbers::pi;

FisheyeModel fisheye(RadialKind kind, double theta_max = 0.0) { return FisheyeModel(kind, 319.5, 239.5, 640, 480, theta_max); }

BrownConradyParams bc_unit(double k1, double p1) {
  BrownConradyParams b;
  b.k1 = k1;
  b.p1 = p1;
  b.intrinsics = {1.0, 1.0, 0.0, 0.0, 10, 10};
  return b;
}

std::vector<std::pair<std::string, CameraModel>> all_models() {
  std::vector<std::pair<std::string, CameraModel>> out;
  out.emplace_back("kitti", load_calibration(data_path("calib/kitti_raw_cam02.json")));
  out.emplace_back("polynomial", load_calibration(data_path("calib/fisheye_190.json")));
  out.emplace_back("ucm", CameraModel(fisheye(UcmRadial{300.0, 0.8})));
  out.emplace_back("eucm", CameraModel(fisheye(EucmRadial{280.0, 0.6, 1.1})));
  out.emplace_back("rectilinear", CameraModel(fisheye(RectilinearRadial{250.0})));
  out.emplace_back("stereographic", CameraModel(fisheye(StereographicRadial{160.0})));
  out.emplace_back("double_sphere", CameraModel(fisheye(DoubleSphereRadial{190.0, -0.2, 0.6})));
  return out;
}

}  // namespace

TEST(BrownConrady, PinholeReduction) {
  BrownConradyParams b;
  b.intrinsics = {100, 100, 50, 50, 101, 101};
  const Eigen::Vector2d p = project_brown_conrady(b, {1, 0, 2});
  EXPECT_DOUBLE_EQ(p.x(), 100.0);
  EXPECT_DOUBLE_EQ(p.y(), 50.0);
}

TEST(BrownConrady, RadialHandValue) {
  const Eigen::Vector2d p = project_brown_conrady(bc_unit(0.1, 0.0), {1, 1, 1});
  EXPECT_NEAR(p.x(), 1.2, 1e-15);
  EXPECT_NEAR(p.y(), 1.2, 1e-15);
}

TEST(BrownConrady, TangentialHandValue) {
  const Eigen::Vector2d p = project_brown_conrady(bc_unit(0.0, 0.1), {1, 1, 1});
  EXPECT_NEAR(p.x(), 1.2, 1e-15);
  EXPECT_NEAR(p.y(), 1.4, 1e-15);
}

TEST(BrownConrady, Errors) {
  BrownConradyParams b;
  b.intrinsics = {100, 100, 50, 50, 101, 101};
  expect_error(ErrorCode::NonPositiveDepth, [&] { project_brown_conrady(b, {1, 0, 0}); });
  expect_error(ErrorCode::NonPositiveDepth, [&] { project_brown_conrady(b, {1, 0, -2}); });
  // strong barrel distortion: the monotone domain ends inside the image
  BrownConradyParams strong = b;
  strong.k1 = -0.5;
  strong.intrinsics = {20, 20, 50, 50, 101, 101};
  expect_invalid("k1", [&] { CameraModel cam(strong); });
  strong.intrinsics = {200, 200, 50, 50, 101, 101};
  const CameraModel ok(strong);
  expect_error(ErrorCode::OutOfValidDomain, [&] { project_brown_conrady(strong, {3, 0, 1}); });
}

TEST(BrownConrady, UnprojectInvertsPinhole) {
  BrownConradyParams b;
  b.intrinsics = {100, 100, 50, 50, 101, 101};
  const CameraModel cam(b);
  const Eigen::Vector3d X = unproject(cam, {100, 50}, 2.0, DistanceKind::PlanarDepth);
  EXPECT_NEAR((X - Eigen::Vector3d(1, 0, 2)).norm(), 0.0, 1e-15);
}

TEST(BrownConrady, UndistortInvertsDistortion) {
  const CameraModel cam = load_calibration(data_path("calib/kitti_raw_cam02.json"));
  const auto& b = *cam.brown_conrady();
  for (double x : {-0.6, -0.2, 0.0, 0.3, 0.7}) {
    for (double y : {-0.2, 0.0, 0.25}) {
      const Eigen::Vector2d p = project_brown_conrady(b, {x, y, 1.0});
      const Eigen::Vector2d d((p.x() - b.intrinsics.cx) / b.intrinsics.fx, (p.y() - b.intrinsics.cy) / b.intrinsics.fy);
      const Eigen::Vector2d u = undistort_normalized(b, d);
      EXPECT_NEAR(u.x(), x, 1e-9);
      EXPECT_NEAR(u.y(), y, 1e-9);
    }
  }
}

TEST(Radial, ZeroAtZeroForEveryModel) {
  for (const auto& kind : std::vector<RadialKind>{PolynomialRadial{{340, 1.1, -5.6, 0.4}}, UcmRadial{300, 0.8},
                                                  EucmRadial{280, 0.6, 1.1}, RectilinearRadial{250},
                                                  StereographicRadial{160}, DoubleSphereRadial{190, -0.2, 0.6}}) {
    EXPECT_EQ(radial(fisheye(kind), 0.0), 0.0) << radial_kind_name(kind);
  }
}

TEST(Radial, HandValues) {
  EXPECT_NEAR(radial(fisheye(RectilinearRadial{1.0}), kPi / 4), 1.0, 1e-15);
  EXPECT_NEAR(radial(fisheye(UcmRadial{1.0, 1.0}), kPi / 2), 1.0, 1e-15);
  EXPECT_NEAR(radial(fisheye(StereographicRadial{1.0}), kPi / 2), 2.0, 1e-15);
}

TEST(Radial, OutsideDomainThrows) {
  const FisheyeModel m = fisheye(StereographicRadial{1.0});
  expect_error(ErrorCode::OutOfValidDomain, [&] { radial(m, m.theta_max() + 1e-6); });
  expect_error(ErrorCode::OutOfValidDomain, [&] { radial(m, -1e-6); });
}

TEST(Radial, ConstructionRejectsBadParameters) {
  expect_invalid("a1", [] { fisheye(PolynomialRadial{{-1.0, 0, 0, 0}}); });
  expect_invalid("f", [] { fisheye(UcmRadial{0.0, 0.5}); });
  expect_invalid("alpha", [] { fisheye(EucmRadial{100, 1.5, 1.0}); });
  expect_invalid("theta_max", [] { fisheye(RectilinearRadial{100}, 1.6); });
  // r(theta) turns over before theta_max
  expect_error(ErrorCode::NonMonotoneRadial, [] { fisheye(PolynomialRadial{{1.0, 0, -1.0, 0}}); });
  expect_error(ErrorCode::NonMonotoneRadial, [] { fisheye(UcmRadial{100, 0.0}, 1.7); });
}

TEST(Radial, MonotoneOnWholeDomain) {
  for (const auto& [name, cam] : all_models()) {
    const FisheyeModel* m = cam.fisheye();
    if (!m) continue;
    double prev = -1.0;
    for (int k = 0; k <= 10000; ++k) {
      const double r = radial(*m, m->theta_max() * k / 10000.0);
      ASSERT_GT(r, prev) << name << " k=" << k;
      prev = r;
    }
  }
}

TEST(InverseRadial, HandValues) {
  EXPECT_EQ(inverse_radial(fisheye(RectilinearRadial{1.0}), 0.0), 0.0);
  EXPECT_NEAR(inverse_radial(fisheye(RectilinearRadial{1.0}), 1.0), kPi / 4, 1e-15);
  const FisheyeModel poly = FisheyeModel(PolynomialRadial{{1.0, 0.01, 0.001, 0.0}}, 0.0, 0.0, 10, 10);
  EXPECT_NEAR(inverse_radial(poly, radial(poly, 0.8)), 0.8, 1e-9);
  EXPECT_NEAR(inverse_radial(poly, radial(poly, 0.8), poly.lut()), 0.8, 1e-9);
}

TEST(InverseRadial, ResidualBound) {
  for (const auto& [name, cam] : all_models()) {
    const FisheyeModel* m = cam.fisheye();
    if (!m) continue;
    for (int k = 0; k <= 500; ++k) {
      const double r = m->r_max() * k / 500.0;
      const double t = inverse_radial(*m, r, m->lut());
      EXPECT_LE(std::abs(radial(*m, t) - r), 1e-9 * std::max(1.0, r)) << name << " r=" << r;
    }
    expect_error(ErrorCode::OutOfValidDomain, [&] { inverse_radial(*m, m->r_max() * 1.001); });
  }
}

TEST(InverseLut, RectilinearAccuracy) {
  const FisheyeModel m = FisheyeModel(RectilinearRadial{1.0}, 0.0, 0.0, 10, 10, 1.45);
  const InverseLut lut = build_inverse_lut(m, 1024);
  EXPECT_EQ(lut.lookup(0.0), 0.0);
  double worst = 0.0;
  for (int k = 0; k <= 2000; ++k) {
    const double t = 1.4 * k / 2000.0;
    worst = std::max(worst, std::abs(lut.lookup(std::tan(t)) - t));
  }
  EXPECT_LT(worst, 1e-3);
  expect_invalid("resolution", [&] { build_inverse_lut(m, 32); });
}

TEST(InverseLut, NewtonConvergesFastFromLutSeed) {
  const FisheyeModel m = FisheyeModel(PolynomialRadial{{340, 1.1, -5.6, 0.4}}, 639.5, 482.5, 1280, 966);
  ASSERT_NE(m.lut(), nullptr);
  EXPECT_EQ(m.lut()->resolution(), static_cast<size_t>(kDefaultLutResolution));
  int worst = 0;
  for (int k = 0; k <= 5000; ++k) {
    const double r = m.r_max() * k / 5000.0;
    worst = std::max(worst, inverse_radial_detailed(m, r, m.lut()).iterations);
  }
  EXPECT_LE(worst, 5);
}

TEST(ProjectFisheye, OnAxisAndHandValue) {
  for (const auto& [name, cam] : all_models()) {
    const Eigen::Vector2d p = project(cam, {0, 0, 5});
    EXPECT_NEAR((p - cam.center()).norm(), 0.0, 1e-12) << name;
  }
  const FisheyeModel poly(PolynomialRadial{{1, 0, 0, 0}}, 0.0, 0.0, 10, 10);
  const Eigen::Vector2d p = project_fisheye(poly, {1, 0, 1});
  EXPECT_NEAR(p.x(), kPi / 4, 1e-15);
  EXPECT_NEAR(p.y(), 0.0, 1e-15);
}

TEST(ProjectFisheye, AxisSwapSymmetry) {
  const FisheyeModel m(DoubleSphereRadial{190, -0.2, 0.6}, 0.0, 0.0, 10, 10);
  const Eigen::Vector2d a = project_fisheye(m, {1, 0, 1});
  const Eigen::Vector2d b = project_fisheye(m, {0, 1, 1});
  EXPECT_NEAR(a.x(), b.y(), 1e-12);
  EXPECT_NEAR(a.y(), b.x(), 1e-12);
}

TEST(ProjectFisheye, Errors) {
  const FisheyeModel m = fisheye(EucmRadial{280, 0.6, 1.1});
  expect_error(ErrorCode::ZeroVector, [&] { project_fisheye(m, {0, 0, 0}); });
  // 100 deg default limit; a point 120 deg off axis is outside
  expect_error(ErrorCode::OutOfValidDomain,
               [&] { project_fisheye(m, {std::sin(2.1), 0.0, std::cos(2.1)}); });
}

TEST(ProjectFisheye, RotationalSymmetry) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& [name, cam] : all_models()) {
    if (!cam.fisheye()) continue;
    for (int i = 0; i < 50; ++i) {
      const Eigen::Vector3d X(u(rng), u(rng), 2.0 + u(rng));
      const double phi = kPi * u(rng);
      const Eigen::Matrix3d Rz = Eigen::AngleAxisd(phi, Eigen::Vector3d::UnitZ()).toRotationMatrix();
      const Eigen::Vector2d a = project(cam, X) - cam.center();
      const Eigen::Vector2d b = project(cam, Rz * X) - cam.center();
      const Eigen::Vector2d ra = Eigen::Rotation2Dd(phi) * a;
      EXPECT_LT((ra - b).norm(), 1e-9) << name;
    }
  }
}

TEST(Reduction, SpecialCasesMatchRectilinear) {
  const FisheyeModel rect(RectilinearRadial{300}, 0, 0, 10, 10, 1.2);
  const FisheyeModel ucm(UcmRadial{300, 0.0}, 0, 0, 10, 10, 1.2);
  const FisheyeModel eucm(EucmRadial{300, 0.0, 1.7}, 0, 0, 10, 10, 1.2);
  const FisheyeModel ds(DoubleSphereRadial{300, 0.0, 0.0}, 0, 0, 10, 10, 1.2);
  for (int k = 0; k <= 1000; ++k) {
    const double t = k / 1000.0;
    const double r = radial(rect, t);
    for (const FisheyeModel* m : {&ucm, &eucm, &ds}) {
      EXPECT_LE(std::abs(radial(*m, t) - r), 1e-12 * std::max(r, 1e-300)) << radial_kind_name(m->kind());
    }
  }
}

TEST(Unproject, OnAxisEuclidean) {
  for (const auto& [name, cam] : all_models()) {
    const Eigen::Vector3d X = unproject(cam, cam.center(), 7.0, DistanceKind::EuclideanDistance);
    EXPECT_NEAR((X - Eigen::Vector3d(0, 0, 7)).norm(), 0.0, 1e-12) << name;
  }
}

TEST(Unproject, DistanceKinds) {
  const CameraModel cam(fisheye(StereographicRadial{160}));
  const Eigen::Vector2d p(500, 100);
  EXPECT_NEAR(unproject(cam, p, 3.0, DistanceKind::EuclideanDistance).norm(), 3.0, 1e-12);
  EXPECT_NEAR(unproject(cam, p, 3.0, DistanceKind::PlanarDepth).z(), 3.0, 1e-12);
  expect_error(ErrorCode::NonPositiveDepth, [&] { unproject(cam, p, 0.0, DistanceKind::PlanarDepth); });
}

TEST(Unproject, PlanarDepthBeyondNinetyDegreesThrows) {
  const CameraModel cam(fisheye(EucmRadial{150, 0.6, 1.1}));
  // 250 px off centre is beyond 90 degrees of incidence (r(90 deg) is about 238 px)
  const Eigen::Vector2d p(569.5, 239.5);
  const auto ray = try_ray(cam, p, DistanceKind::EuclideanDistance);
  ASSERT_TRUE(ray.has_value());
  ASSERT_LT(ray->z(), 0.0);
  expect_error(ErrorCode::OutOfValidDomain, [&] { unproject(cam, p, 2.0, DistanceKind::PlanarDepth); });
}

TEST(Unproject, RandomRoundTrip) {
  std::mt19937_64 rng(17);
  for (const auto& [name, cam] : all_models()) {
    std::uniform_real_distribution<double> ux(0.0, cam.width() - 1.0), uy(0.0, cam.height() - 1.0);
    const double tol = (name == "kitti" || name == "polynomial") ? 1e-5 : 1e-6;
    int tested = 0;
    for (int i = 0; i < 500; ++i) {
      const Eigen::Vector2d p(ux(rng), uy(rng));
      const auto ray = try_ray(cam, p, cam.distance_kind());
      if (!ray) continue;
      for (double d : {0.5, 5.0, 50.0}) {
        const Eigen::Vector2d q = project(cam, d * *ray);
        EXPECT_LT((q - p).cwiseAbs().maxCoeff(), tol) << name;
      }
      ++tested;
    }
    EXPECT_GT(tested, 100) << name;
  }
}

TEST(Jacobian, HandValues) {
  const CameraModel cam = pinhole(64, 48, 40.0);
  const Matrix23d J = jacobian_project(cam, {0, 0, 1});
  EXPECT_NEAR(J(0, 0), 40.0, 1e-12);
  EXPECT_NEAR(J(0, 2), 0.0, 1e-12);
  EXPECT_NEAR(radial_derivative(fisheye(RectilinearRadial{250}), 0.0), 250.0, 1e-12);
}

TEST(Jacobian, MatchesFiniteDifferences) {
  // relative error per entry; entries below 1e-6 of the largest one are
  // compared against that scale instead (they are zero up to roundoff)
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& [name, cam] : all_models()) {
    int tested = 0;
    double worst = 0.0;
    while (tested < 100) {
      const Eigen::Vector3d X(2.0 * u(rng), 1.5 * u(rng), 0.5 + 1.5 * (u(rng) + 1.0));
      if (cam.fisheye()) {
        const double theta = std::acos(X.z() / X.norm());
        if (theta > cam.fisheye()->theta_max() - 1e-3) continue;
      }
      Matrix23d J;
      if (!try_project(cam, X, &J)) continue;
      const double h = 1e-5 * std::max(1.0, X.norm());
      Matrix23d N;
      bool ok = true;
      for (int c = 0; c < 3 && ok; ++c) {
        Eigen::Vector3d d = Eigen::Vector3d::Zero();
        d[c] = h;
        const auto a = try_project(cam, X + d), b = try_project(cam, X - d);
        if (!a || !b) ok = false;
        else N.col(c) = (*a - *b) / (2 * h);
      }
      if (!ok) continue;
      const double scale = J.cwiseAbs().maxCoeff();
      for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 3; ++c) {
          const double den = std::max({std::abs(J(r, c)), std::abs(N(r, c)), 1e-6 * scale});
          worst = std::max(worst, std::abs(J(r, c) - N(r, c)) / den);
        }
      }
      ++tested;
    }
    EXPECT_LT(worst, 1e-4) << name;
  }
}
