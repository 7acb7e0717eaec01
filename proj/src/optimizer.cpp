#include "rawdepth/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "rawdepth/objective.hpp"
#include "rawdepth/warp.hpp"

namespace rawdepth {

void OptimizationConfig::validate() const {
  if (max_iters < 1) throw Error(ErrorCode::InvalidParameter, "max_iters");
  if (!(step_size > 0.0)) throw Error(ErrorCode::InvalidParameter, "step_size");
  if (!(convergence_tol >= 0.0)) throw Error(ErrorCode::InvalidParameter, "convergence_tol");
  if (pyramid_levels < 1) throw Error(ErrorCode::InvalidParameter, "pyramid_levels");
  weights.validate();
}

std::string LossTrace::to_csv() const {
  std::string out = "iter,L_r,L_s,L_dc,total\n";
  char buf[160];
  for (const TraceRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g\n", r.iter, r.reconstruction, r.smoothness,
                  r.consistency, r.total);
    out += buf;
  }
  return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double objective_with_rays(const ImageBuffer& target, std::span<const ImageBuffer> sources,
                           std::span<const Se3Transform> poses, const CameraModel& cam, const RayGrid& rays,
                           const LossWeights& weights, const Grid<double>& depth, Grid<double>* grad_depth,
                           std::vector<Vector6d>* grad_poses, double* reconstruction, double* smoothness) {
  std::vector<WarpSpec> specs;
  for (size_t k = 0; k < sources.size(); ++k) specs.push_back({&sources[k], {{static_cast<int>(k), false}}});
  GradientSink sink;
  sink.depth = grad_depth;
  sink.poses = grad_poses;
  const ReconstructionResult r = reconstruction_term(target, depth, rays, specs, poses, cam, weights, sink);
  double s = 0.0;
  if (weights.terms.smoothness && weights.beta_smooth > 0.0) {
    GradientSink ss;
    ss.depth = grad_depth;
    ss.scale = weights.beta_smooth;
    s = smoothness_term(depth, target, ss).loss;
  }
  if (reconstruction) *reconstruction = r.loss;
  if (smoothness) *smoothness = s;
  return r.loss + weights.beta_smooth * s;
}

void check_inputs(const ImageBuffer& target, std::span<const ImageBuffer> sources,
                  std::span<const Se3Transform> poses, const CameraModel& cam) {
  if (sources.empty()) throw Error(ErrorCode::EmptyInput, "sources");
  if (sources.size() != poses.size()) throw Error(ErrorCode::DimensionMismatch, "sources vs poses");
  if (!target.same_shape(cam.width(), cam.height())) throw Error(ErrorCode::DimensionMismatch, "target vs camera");
  for (const auto& s : sources) {
    if (!s.same_shape(target) || s.channels() != target.channels()) {
      throw Error(ErrorCode::DimensionMismatch, "source vs target");
    }
  }
}

double mean_image_gradient(const ImageBuffer& img) {
  const int w = img.width(), h = img.height(), nc = img.channels();
  double acc = 0.0;
  long long n = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < nc; ++c) {
        if (x + 1 < w) acc += std::abs(img(x + 1, y, c) - img(x, y, c)), ++n;
        if (y + 1 < h) acc += std::abs(img(x, y + 1, c) - img(x, y, c)), ++n;
      }
    }
  }
  return n > 0 ? acc / n : 0.0;
}

struct Evaluation {
  double total = kInf;
  double reconstruction = 0.0;
  double smoothness = 0.0;
  Eigen::VectorXd grad;
};

/// Backtracking descent along the infinity-normalized negative gradient.
/// Returns the number of iterations used.
int descend(Eigen::VectorXd& params, const std::function<Evaluation(const Eigen::VectorXd&)>& eval,
            const OptimizationConfig& cfg, int budget, int level, int iter0, LossTrace& trace) {
  Evaluation cur = eval(params);
  if (!std::isfinite(cur.total)) throw Error(ErrorCode::Diverged, "non-finite starting loss");
  trace.rows.push_back({iter0, level, cur.reconstruction, cur.smoothness, 0.0, cur.total, 0.0});
  double alpha = cfg.step_size;
  int quiet = 0;
  int it = 0;
  while (it < budget) {
    const double gmax = cur.grad.cwiseAbs().maxCoeff();
    if (!(gmax > 0.0) || !std::isfinite(gmax)) break;
    const Eigen::VectorXd dir = -cur.grad / gmax;
    const double slope = cur.grad.dot(dir);
    bool accepted = false;
    for (int b = 0; b < cfg.max_backtracks; ++b) {
      const Eigen::VectorXd cand = params + alpha * dir;
      Evaluation next = eval(cand);
      if (std::isfinite(next.total) && next.total <= cur.total + 1e-4 * alpha * slope) {
        const double rel = (cur.total - next.total) / std::max(cur.total, 1e-300);
        params = cand;
        cur = std::move(next);
        ++it;
        trace.rows.push_back({iter0 + it, level, cur.reconstruction, cur.smoothness, 0.0, cur.total, alpha});
        alpha *= 1.5;
        accepted = true;
        quiet = rel < cfg.convergence_tol ? quiet + 1 : 0;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted || quiet >= cfg.patience) break;
  }
  return it;
}

}  // namespace

double depth_objective(const ImageBuffer& target, std::span<const ImageBuffer> sources,
                       std::span<const Se3Transform> poses, const CameraModel& cam, const LossWeights& weights,
                       const DepthMap& depth, Grid<double>* grad_depth, std::vector<Vector6d>* grad_poses,
                       double* reconstruction, double* smoothness) {
  check_inputs(target, sources, poses, cam);
  validate_depth(depth);
  const RayGrid rays = compute_rays(cam, depth.kind);
  return objective_with_rays(target, sources, poses, cam, rays, weights, depth.values, grad_depth, grad_poses,
                             reconstruction, smoothness);
}

DepthRecovery recover_depth(const ImageBuffer& target, std::span<const ImageBuffer> sources,
                            std::span<const Se3Transform> poses, const CameraModel& cam,
                            const OptimizationConfig& cfg, std::optional<DepthMap> init) {
  cfg.validate();
  check_inputs(target, sources, poses, cam);
  const int w = cam.width(), h = cam.height();
  DepthMap depth = init ? std::move(*init) : DepthMap(w, h, 10.0, cam.distance_kind());
  if (!depth.values.same_shape(w, h)) throw Error(ErrorCode::DimensionMismatch, "initial depth");
  validate_depth(depth);
  const RayGrid rays = compute_rays(cam, depth.kind);

  DepthRecovery out;
  out.trace.low_texture = mean_image_gradient(target) < cfg.low_texture_threshold;

  int levels = cfg.pyramid_levels;
  while (levels > 1 && ((w >> (levels - 1)) < 4 || (h >> (levels - 1)) < 4)) --levels;

  int used = 0;
  for (int level = levels - 1; level >= 0; --level) {
    const int lw = (w + (1 << level) - 1) >> level, lh = (h + (1 << level) - 1) >> level;
    const Grid<double> start = resize_bilinear(depth.values, lw, lh);
    Eigen::VectorXd theta(static_cast<Eigen::Index>(start.size()));
    for (size_t i = 0; i < start.size(); ++i) theta[i] = -std::log(start[i]);

    auto eval = [&](const Eigen::VectorXd& th) {
      Evaluation e;
      Grid<double> dl(lw, lh, 1, 0.0);
      for (size_t i = 0; i < dl.size(); ++i) dl[i] = std::exp(-th[i]);
      const Grid<double> full = resize_bilinear(dl, w, h);
      Grid<double> g_full(w, h, 1, 0.0);
      try {
        e.total = objective_with_rays(target, sources, poses, cam, rays, cfg.weights, full, &g_full, nullptr,
                                      &e.reconstruction, &e.smoothness);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::NoValidPixels) throw;
        e.total = kInf;
        return e;
      }
      const Grid<double> g_l = resize_bilinear_adjoint(g_full, lw, lh);
      e.grad.resize(th.size());
      for (size_t i = 0; i < dl.size(); ++i) e.grad[i] = -dl[i] * g_l[i];
      return e;
    };

    const int remaining = cfg.max_iters - used;
    const int budget = level == 0 ? remaining : remaining / (level + 1);
    used += descend(theta, eval, cfg, budget, level, used, out.trace);

    Grid<double> dl(lw, lh, 1, 0.0);
    for (size_t i = 0; i < dl.size(); ++i) dl[i] = std::exp(-theta[i]);
    depth.values = resize_bilinear(dl, w, h);
  }
  out.depth = std::move(depth);
  return out;
}

PoseRecovery recover_pose(const ImageBuffer& target, const ImageBuffer& source, const DepthMap& depth,
                          const CameraModel& cam, const OptimizationConfig& cfg, const Se3Transform& init) {
  cfg.validate();
  const std::vector<ImageBuffer> sources{source};
  check_inputs(target, sources, std::vector<Se3Transform>{init}, cam);
  validate_depth(depth);
  if (init.translation.norm() <= kDefaultTranslationEpsilon) {
    throw Error(ErrorCode::DegenerateTranslation, "initial pose translation");
  }
  const RayGrid rays = compute_rays(cam, depth.kind);
  std::vector<double> sorted(depth.values.data().begin(), depth.values.data().end());
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double zmed = sorted[sorted.size() / 2];

  LossWeights weights = cfg.weights;
  weights.terms.smoothness = false;
  auto to_pose = [&](const Eigen::VectorXd& p) {
    Se3Transform T;
    T.rotation = p.head<3>() / zmed;
    T.translation = p.tail<3>();
    return T;
  };
  auto eval = [&](const Eigen::VectorXd& p) {
    Evaluation e;
    const std::vector<Se3Transform> poses{to_pose(p)};
    std::vector<Vector6d> g(1, Vector6d::Zero());
    try {
      e.total = objective_with_rays(target, sources, poses, cam, rays, weights, depth.values, nullptr, &g,
                                    &e.reconstruction, nullptr);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::NoValidPixels) throw;
      e.total = kInf;
      return e;
    }
    e.grad.resize(6);
    e.grad.head<3>() = g[0].head<3>() / zmed;
    e.grad.tail<3>() = g[0].tail<3>();
    return e;
  };
  Eigen::VectorXd p(6);
  p.head<3>() = init.rotation * zmed;
  p.tail<3>() = init.translation;
  PoseRecovery out;
  descend(p, eval, cfg, cfg.max_iters, 0, 0, out.trace);
  out.pose = to_pose(p);
  return out;
}

FiniteDiffResult finite_diff_check(const std::function<double(const Eigen::VectorXd&)>& fn,
                                   const Eigen::VectorXd& params, const Eigen::VectorXd& analytic, double step,
                                   std::span<const int> indices) {
  if (params.size() != analytic.size()) throw Error(ErrorCode::DimensionMismatch, "analytic gradient");
  std::vector<int> idx(indices.begin(), indices.end());
  if (idx.empty()) {
    for (int i = 0; i < params.size(); ++i) idx.push_back(i);
  }
  FiniteDiffResult out;
  out.numeric = Eigen::VectorXd::Zero(params.size());
  const double floor = 1e-8 * analytic.cwiseAbs().maxCoeff();
  for (int i : idx) {
    Eigen::VectorXd p = params;
    p[i] = params[i] + step;
    const double fp = fn(p);
    p[i] = params[i] - step;
    const double fm = fn(p);
    const double n = (fp - fm) / (2.0 * step);
    out.numeric[i] = n;
    const double denom = std::max({std::abs(analytic[i]), std::abs(n), floor});
    const double err = denom > 0.0 ? std::abs(analytic[i] - n) / denom : 0.0;
    if (err > out.max_relative_error || out.worst_index < 0) {
      out.max_relative_error = std::max(out.max_relative_error, err);
      out.worst_index = i;
    }
  }
  return out;
}

}  // namespace rawdepth
