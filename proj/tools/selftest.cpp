#include "selftest.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rawdepth/camera.hpp"
#include "rawdepth/losses.hpp"
#include "rawdepth/optimizer.hpp"
#include "rawdepth/synthetic.hpp"

namespace rawdepth::selftest {
namespace {

struct NamedModel {
  std::string name;
  CameraModel cam;
  bool iterative;
};

std::vector<NamedModel> models() {
  std::vector<NamedModel> out;
  BrownConradyParams bc;
  bc.k1 = -0.15;
  bc.k2 = 0.05;
  bc.p1 = 0.001;
  bc.p2 = -0.0005;
  bc.intrinsics = {600.0, 590.0, 319.5, 239.5, 640, 480};
  out.push_back({"brown_conrady", CameraModel(bc), true});
  auto fish = [&](const std::string& name, RadialKind kind, bool iterative) {
    out.push_back({name, CameraModel(FisheyeModel(kind, 319.5, 239.5, 640, 480)), iterative});
  };
  fish("polynomial", PolynomialRadial{{170.0, 0.55, -2.8, 0.2}}, true);
  fish("ucm", UcmRadial{300.0, 0.8}, false);
  fish("eucm", EucmRadial{280.0, 0.6, 1.1}, false);
  fish("rectilinear", RectilinearRadial{250.0}, false);
  fish("stereographic", StereographicRadial{160.0}, false);
  fish("double_sphere", DoubleSphereRadial{190.0, -0.2, 0.6}, false);
  return out;
}

Check make(std::string name, double value, double limit) {
  return {std::move(name), value, limit, std::isfinite(value) && value < limit};
}

}  // namespace

std::vector<Check> roundtrip_suite() {
  std::vector<Check> checks;
  const double ranges[3] = {0.5, 5.0, 80.0};
  for (const auto& m : models()) {
    double worst = 0.0;
    long long tested = 0;
    const int w = m.cam.width(), h = m.cam.height();
    for (const DistanceKind kind : {DistanceKind::PlanarDepth, DistanceKind::EuclideanDistance}) {
      for (int j = 0; j < 64; ++j) {
        for (int i = 0; i < 64; ++i) {
          const Eigen::Vector2d p((w - 1) * i / 63.0, (h - 1) * j / 63.0);
          const auto ray = try_ray(m.cam, p, kind);
          if (!ray) continue;
          for (double d : ranges) {
            const auto q = try_project(m.cam, d * *ray);
            if (!q) {
              worst = std::numeric_limits<double>::infinity();
              continue;
            }
            worst = std::max(worst, (*q - p).norm());
            ++tested;
          }
        }
      }
    }
    if (tested == 0) worst = std::numeric_limits<double>::infinity();
    checks.push_back(make("roundtrip_px " + m.name, worst, m.iterative ? 1e-5 : 1e-6));
  }
  return checks;
}

std::vector<Check> gradient_suite() {
  std::vector<Check> checks;
  const Eigen::Vector3d points[] = {{0.1, -0.2, 3.0}, {-1.5, 0.8, 2.0}, {0.7, 0.4, 1.2}, {2.0, -1.0, 4.0}};
  for (const auto& m : models()) {
    double worst = 0.0;
    for (const auto& X : points) {
      Matrix23d J;
      if (!try_project(m.cam, X, &J)) continue;
      for (int r = 0; r < 2; ++r) {
        auto fn = [&](const Eigen::VectorXd& v) {
          const auto q = try_project(m.cam, Eigen::Vector3d(v));
          return q ? (*q)[r] : std::numeric_limits<double>::quiet_NaN();
        };
        const Eigen::VectorXd a = J.row(r).transpose();
        worst = std::max(worst, finite_diff_check(fn, X, a, 1e-4).max_relative_error);
      }
    }
    checks.push_back(make("jacobian_rel " + m.name, worst, 1e-3));
  }

  BrownConradyParams bc;
  bc.intrinsics = {12.0, 12.0, 7.5, 5.5, 16, 12};
  const CameraModel cam(bc);
  SyntheticScene scene;
  Primitive plane;
  plane.pose.translation = {0, 0, 5};
  plane.texture.period = 0.6;
  scene.primitives.push_back(plane);
  Primitive sphere;
  sphere.kind = Primitive::Kind::Sphere;
  sphere.pose.translation = {0.8, 0.3, 3.5};
  sphere.radius = 0.7;
  sphere.texture.period = 0.6;
  sphere.texture.seed = 5;
  scene.primitives.push_back(sphere);

  Se3Transform c0, c1, c2;
  c0.translation = {-0.3, 0.02, 0.05};
  c0.rotation = {0.01, -0.02, 0.005};
  c2.translation = {0.3, -0.01, 0.1};
  c2.rotation = {-0.01, 0.015, 0.0};
  SnippetInputs in;
  in.images = {render(scene, cam, c0).image, render(scene, cam, c1).image, render(scene, cam, c2).image};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(4.0, 5.5);
  for (int k = 0; k < 3; ++k) {
    for (int s = 0; s < 4; ++s) {
      const int w = (16 + (1 << s) - 1) >> s, h = (12 + (1 << s) - 1) >> s;
      DepthMap d(w, h, 0.0, DistanceKind::PlanarDepth);
      for (size_t i = 0; i < d.values.size(); ++i) d.values[i] = uni(rng);
      in.depths[k].push_back(d);
    }
  }
  in.target_to_prev = relative_pose(c1, c0);
  in.target_to_next = relative_pose(c1, c2);
  LossWeights weights;
  weights.beta_smooth = 0.1;
  weights.gamma_dc = 0.1;
  LossGradients g;
  total_loss(in, cam, weights, &g);

  double worst_depth = 0.0;
  for (int k = 0; k < 3; ++k) {
    for (int s = 0; s < 4; ++s) {
      const auto& grid = in.depths[k][s].values;
      Eigen::VectorXd p(grid.size()), a(grid.size());
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        p[i] = grid[i];
        a[i] = g.depths[k][s][i];
      }
      auto fn = [&](const Eigen::VectorXd& v) {
        SnippetInputs c = in;
        for (Eigen::Index i = 0; i < v.size(); ++i) c.depths[k][s].values[i] = v[i];
        return total_loss(c, cam, weights).total;
      };
      worst_depth = std::max(worst_depth, finite_diff_check(fn, p, a, 1e-5).max_relative_error);
    }
  }
  checks.push_back(make("total_loss_depth_rel", worst_depth, 1e-3));

  double worst_pose = 0.0;
  for (int j = 0; j < 2; ++j) {
    const Eigen::VectorXd p = (j == 0 ? in.target_to_prev : in.target_to_next).to_vector();
    const Eigen::VectorXd a = j == 0 ? g.target_to_prev : g.target_to_next;
    auto fn = [&](const Eigen::VectorXd& v) {
      SnippetInputs c = in;
      (j == 0 ? c.target_to_prev : c.target_to_next) = Se3Transform::from_vector(v);
      return total_loss(c, cam, weights).total;
    };
    worst_pose = std::max(worst_pose, finite_diff_check(fn, p, a, 1e-6).max_relative_error);
  }
  checks.push_back(make("total_loss_pose_rel", worst_pose, 1e-3));
  return checks;
}

}  // namespace rawdepth::selftest
