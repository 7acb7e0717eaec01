#include <numbers>

#include "common.hpp"
#include "rawdepth/optimizer.hpp"

using namespace rawdepth;
using namespace rawdepth::test;

namespace {

struct Stereo {
  CameraModel cam = pinhole(64, 48, 30.0);
  ImageBuffer target;
  std::vector<ImageBuffer> sources;
  std::vector<Se3Transform> poses;
  DepthMap gt;
};

Stereo stereo(double period = 1.0) {
  Stereo s;
  const SyntheticScene sc = plane_scene(5.0, period);
  const Se3Transform ct = Se3Transform::identity(), cl = translation(-0.5, 0, 0), cr = translation(0.5, 0, 0);
  const RenderResult t = render(sc, s.cam, ct);
  s.target = t.image;
  s.gt = t.depth;
  s.sources = {render(sc, s.cam, cl).image, render(sc, s.cam, cr).image};
  s.poses = {relative_pose(ct, cl), relative_pose(ct, cr)};
  return s;
}

}  // namespace

TEST(FiniteDiff, QuadraticIsExact) {
  Eigen::MatrixXd A(4, 4);
  A << 4, 1, 0, 0.5, 1, 3, 0.2, 0, 0, 0.2, 2, 0.1, 0.5, 0, 0.1, 5;
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(4, -1.0, 2.0);
  auto f = [&](const Eigen::VectorXd& x) { return 0.5 * x.dot(A * x) + b.dot(x); };
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(4, 0.3, -0.7);
  const Eigen::VectorXd g = A * x + b;
  EXPECT_LT(finite_diff_check(f, x, g, 1e-3).max_relative_error, 1e-10);
  Eigen::VectorXd wrong = g;
  wrong[2] += 0.5;
  const FiniteDiffResult r = finite_diff_check(f, x, wrong, 1e-3);
  EXPECT_EQ(r.worst_index, 2);
  EXPECT_GT(r.max_relative_error, 0.1);
  const std::vector<int> subset{0, 1};
  EXPECT_LT(finite_diff_check(f, x, wrong, 1e-3, subset).max_relative_error, 1e-10);
}

TEST(OptimizerConfig, Validation) {
  OptimizationConfig c;
  EXPECT_EQ(c.max_iters, 2000);
  EXPECT_NO_THROW(c.validate());
  OptimizationConfig bad = c;
  bad.max_iters = 0;
  expect_invalid("max_iters", [&] { bad.validate(); });
  bad = c;
  bad.step_size = 0.0;
  expect_invalid("step_size", [&] { bad.validate(); });
  bad = c;
  bad.pyramid_levels = 0;
  expect_invalid("pyramid_levels", [&] { bad.validate(); });
  bad = c;
  bad.weights.omega = -0.1;
  expect_invalid("omega", [&] { bad.validate(); });
}

TEST(DepthObjective, GradientMatchesFiniteDifferences) {
  const Stereo s = stereo();
  DepthMap d = s.gt;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (size_t i = 0; i < d.values.size(); ++i) d.values[i] += u(rng);
  Grid<double> g(64, 48, 1, 0.0);
  depth_objective(s.target, s.sources, s.poses, s.cam, OptimizationConfig::default_weights(), d, &g);
  Eigen::VectorXd p(d.values.size()), a(d.values.size());
  for (size_t i = 0; i < d.values.size(); ++i) {
    p[i] = d.values[i];
    a[i] = g[i];
  }
  std::vector<int> idx;
  for (int i = 0; i < 40; ++i) idx.push_back(static_cast<int>(rng() % d.values.size()));
  auto fn = [&](const Eigen::VectorXd& v) {
    DepthMap c = d;
    for (size_t i = 0; i < c.values.size(); ++i) c.values[i] = v[i];
    return depth_objective(s.target, s.sources, s.poses, s.cam, OptimizationConfig::default_weights(), c);
  };
  EXPECT_LT(finite_diff_check(fn, p, a, 1e-5, idx).max_relative_error, 1e-3);
}

TEST(RecoverDepth, GroundTruthIsAFixedPoint) {
  const Stereo s = stereo();
  OptimizationConfig cfg;
  cfg.pyramid_levels = 1;
  cfg.max_iters = 50;
  const DepthRecovery r = recover_depth(s.target, s.sources, s.poses, s.cam, cfg, s.gt);
  EXPECT_LE(r.trace.rows.back().total, r.trace.rows.front().total);
  double worst = 0.0;
  for (size_t i = 0; i < r.depth.values.size(); ++i) {
    worst = std::max(worst, std::abs(r.depth.values[i] - s.gt.values[i]) / s.gt.values[i]);
  }
  EXPECT_LT(worst, 0.01);
}

TEST(RecoverDepth, TraceIsMonotoneAndWritesCsv) {
  const Stereo s = stereo();
  OptimizationConfig cfg;
  cfg.max_iters = 60;
  const DepthRecovery r = recover_depth(s.target, s.sources, s.poses, s.cam, cfg);
  ASSERT_GE(r.trace.rows.size(), 2u);
  for (size_t i = 1; i < r.trace.rows.size(); ++i) {
    if (r.trace.rows[i].level != r.trace.rows[i - 1].level) continue;
    EXPECT_LE(r.trace.rows[i].total, r.trace.rows[i - 1].total);
  }
  EXPECT_LE(r.trace.rows.back().iter, 60);
  EXPECT_FALSE(r.trace.low_texture);
  const std::string csv = r.trace.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iter,L_r,L_s,L_dc,total");
}

TEST(RecoverDepth, FlagsTexturelessTarget) {
  Stereo s = stereo();
  s.target = ImageBuffer(64, 48, 1, 0.5);
  for (auto& src : s.sources) src = ImageBuffer(64, 48, 1, 0.5);
  OptimizationConfig cfg;
  cfg.max_iters = 5;
  const DepthRecovery r = recover_depth(s.target, s.sources, s.poses, s.cam, cfg);
  EXPECT_TRUE(r.trace.low_texture);
  for (size_t i = 0; i < r.depth.values.size(); ++i) EXPECT_TRUE(std::isfinite(r.depth.values[i]));
}

TEST(RecoverDepth, InputErrors) {
  const Stereo s = stereo();
  const OptimizationConfig cfg;
  expect_error(ErrorCode::EmptyInput, [&] {
    recover_depth(s.target, std::vector<ImageBuffer>{}, std::vector<Se3Transform>{}, s.cam, cfg);
  });
  expect_error(ErrorCode::DimensionMismatch, [&] {
    recover_depth(s.target, s.sources, std::vector<Se3Transform>{s.poses[0]}, s.cam, cfg);
  });
  expect_error(ErrorCode::DimensionMismatch,
               [&] { recover_depth(ImageBuffer(10, 10, 1, 0.0), s.sources, s.poses, s.cam, cfg); });
}

TEST(RecoverPose, GroundTruthStaysAndPerturbationRecovers) {
  const CameraModel cam = pinhole(128, 96, 60.0);
  SyntheticScene sc = plane_sphere_scene(1.0);
  Primitive ground;
  ground.pose.rotation = {std::numbers::pi / 2, 0, 0};
  ground.pose.translation = {0, 1.5, 0};
  ground.texture.period = 1.0;
  ground.texture.seed = 9;
  sc.primitives.push_back(ground);
  const Se3Transform ct = Se3Transform::identity(), cs = translation(0.5, 0, 0);
  const RenderResult t = render(sc, cam, ct), s = render(sc, cam, cs);
  const Se3Transform gt = relative_pose(ct, cs);
  OptimizationConfig cfg;

  const PoseRecovery same = recover_pose(t.image, s.image, t.depth, cam, cfg, gt);
  EXPECT_LT((same.pose.translation - gt.translation).norm(), 1e-3);
  EXPECT_LT(same.pose.rotation.norm(), 1e-3);

  Se3Transform init;
  init.translation = gt.translation * 0.8;
  init.rotation = {0, std::numbers::pi / 180.0, 0};
  const PoseRecovery r = recover_pose(t.image, s.image, t.depth, cam, cfg, init);
  const double cosang = r.pose.translation.normalized().dot(gt.translation.normalized());
  EXPECT_LT(std::acos(std::clamp(cosang, -1.0, 1.0)) * 180.0 / std::numbers::pi, 2.0);
  EXPECT_NEAR(r.pose.translation.norm() / gt.translation.norm(), 1.0, 0.05);

  expect_error(ErrorCode::DegenerateTranslation,
               [&] { recover_pose(t.image, s.image, t.depth, cam, cfg, Se3Transform::identity()); });
}
