#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rawdepth/camera.hpp"
#include "rawdepth/image.hpp"
#include "rawdepth/losses.hpp"
#include "rawdepth/se3.hpp"

namespace rawdepth {

struct OptimizationConfig {
  int max_iters = 2000;
  /// Initial step: largest per-parameter change of the first trial move
  /// (log-inverse-depth units for depth, scaled pose units for pose).
  double step_size = 0.1;
  /// Stop a level once the relative loss decrease stays below this for
  /// `patience` accepted steps.
  double convergence_tol = 1e-7;
  int patience = 10;
  int max_backtracks = 40;
  /// Coarse-to-fine depth levels; level k optimizes a grid 2^k times coarser.
  int pyramid_levels = 4;
  /// Mean image gradient below which the target is flagged LowTexture.
  double low_texture_threshold = 1e-4;
  LossWeights weights = default_weights();

  void validate() const;
  static LossWeights default_weights() {
    LossWeights w;
    w.terms.static_mask = false;
    w.terms.consistency = false;
    w.num_scales = 1;
    // the clip adjoint lands on one pixel and swamps the normalized step
    w.clip_percentile = 1.0;
    return w;
  }
};

struct TraceRow {
  int iter = 0;
  int level = 0;
  double reconstruction = 0.0;
  double smoothness = 0.0;
  double consistency = 0.0;
  double total = 0.0;
  double step = 0.0;
};

struct LossTrace {
  std::vector<TraceRow> rows;
  bool low_texture = false;

  /// iter,L_r,L_s,L_dc,total with 9 significant digits.
  std::string to_csv() const;
};

struct DepthRecovery {
  DepthMap depth;
  LossTrace trace;
};

/// Gradient descent with backtracking on per-pixel log inverse depth,
/// minimizing the forward reconstruction loss over all sources plus beta
/// times smoothness. poses[k] maps target points into source k. The initial
/// depth defaults to a constant 10 m map. Throws Diverged on a non-finite
/// starting loss.
DepthRecovery recover_depth(const ImageBuffer& target, std::span<const ImageBuffer> sources,
                            std::span<const Se3Transform> poses, const CameraModel& cam,
                            const OptimizationConfig& cfg, std::optional<DepthMap> init = std::nullopt);

struct PoseRecovery {
  Se3Transform pose;
  LossTrace trace;
};

/// Minimizes the reconstruction loss of target from source over the six pose
/// parameters. Rotations are scaled by the median depth so both blocks move
/// pixels by similar amounts.
PoseRecovery recover_pose(const ImageBuffer& target, const ImageBuffer& source, const DepthMap& depth,
                          const CameraModel& cam, const OptimizationConfig& cfg, const Se3Transform& init);

/// Reconstruction + smoothness objective of recover_depth with its gradient
/// w.r.t. the depth values.
double depth_objective(const ImageBuffer& target, std::span<const ImageBuffer> sources,
                       std::span<const Se3Transform> poses, const CameraModel& cam, const LossWeights& weights,
                       const DepthMap& depth, Grid<double>* grad_depth = nullptr,
                       std::vector<Vector6d>* grad_poses = nullptr, double* reconstruction = nullptr,
                       double* smoothness = nullptr);

struct FiniteDiffResult {
  double max_relative_error = 0.0;
  int worst_index = -1;
  Eigen::VectorXd numeric;
};

/// Central differences of fn at params (step h) compared against analytic,
/// restricted to `indices` when non-empty. The relative error of entry i is
/// |a - n| / max(|a|, |n|, 1e-8 * max_j |a_j|).
FiniteDiffResult finite_diff_check(const std::function<double(const Eigen::VectorXd&)>& fn,
                                   const Eigen::VectorXd& params, const Eigen::VectorXd& analytic, double step,
                                   std::span<const int> indices = {});

}  // namespace rawdepth
