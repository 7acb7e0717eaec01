#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "rawdepth/camera.hpp"
#include "rawdepth/image.hpp"
#include "rawdepth/losses.hpp"
#include "rawdepth/se3.hpp"
#include "rawdepth/warp.hpp"

// Building blocks of the objective with hand-written reverse-mode gradients.
// Poses are addressed by index into a pose list so that chained warps (e.g.
// t-1 -> t -> t+1) share parameters with the single-step warps.

namespace rawdepth {

struct PoseFactor {
  int index = 0;
  bool inverted = false;
};

/// Factors applied first to last.
using PoseChain = std::vector<PoseFactor>;

Eigen::Vector3d apply_chain(std::span<const Se3Transform> poses, const PoseChain& chain, const Eigen::Vector3d& X);

/// Gradient destinations. Any pointer may be null. Depth gradients are added
/// on the full-resolution grids used for warping.
struct GradientSink {
  Grid<double>* depth = nullptr;        // the warped (target) frame
  Grid<double>* other_depth = nullptr;  // consistency: the sampled frame
  std::vector<Vector6d>* poses = nullptr;
  double scale = 1.0;
};

/// Differentiable warp of one depth map through a pose chain.
struct WarpField {
  Grid<Eigen::Vector3d> points;  // transformed points
  Grid<Eigen::Vector2d> coords;
  Grid<Matrix23d> jacobians;
  Mask valid;

  static WarpField compute(const CameraModel& cam, const RayGrid& rays, const Grid<double>& depth,
                           std::span<const Se3Transform> poses, const PoseChain& chain);

  /// Pulls dL/dcoords and dL/dpoints (either may be empty) back onto depth
  /// and the poses.
  void backward(const RayGrid& rays, const Grid<double>& depth, std::span<const Se3Transform> poses,
                const PoseChain& chain, const Grid<Eigen::Vector2d>& grad_coords,
                const Grid<Eigen::Vector3d>& grad_points, Grid<double>* grad_depth,
                std::vector<Vector6d>* grad_poses) const;
};

/// dL/dI_hat for photometric_loss given dL/d(per-pixel value).
ImageBuffer photometric_loss_backward(const ImageBuffer& target, const ImageBuffer& reconstruction,
                                      const PhotometricMap& forward, double omega, const Grid<double>& grad_values);

struct WarpSpec {
  const ImageBuffer* source = nullptr;
  PoseChain chain;
};

struct ReconstructionResult {
  double loss = 0.0;
  Grid<double> map;  // clipped per-pixel values, 0 where excluded
  Mask included;     // valid and not removed by the static mask
  Mask static_mask;  // empty when static masking is off
  std::vector<Mask> ego_masks;
  std::vector<ImageBuffer> reconstructions;
};

/// Per-pixel min over the warps, static mask, percentile clip, mean over all
/// H*W pixels. Throws NoValidPixels when nothing survives.
ReconstructionResult reconstruction_term(const ImageBuffer& target, const Grid<double>& depth, const RayGrid& rays,
                                         std::span<const WarpSpec> warps, std::span<const Se3Transform> poses,
                                         const CameraModel& cam, const LossWeights& weights,
                                         const GradientSink& sink = {});

struct ConsistencyResult {
  double loss = 0.0;  // mean over H*W of the masked |range - warped depth|
  Grid<double> map;
  Mask valid;
};

/// One direction a -> b of the depth consistency term.
ConsistencyResult consistency_term(const Grid<double>& depth_a, const Grid<double>& depth_b, const RayGrid& rays,
                                   DistanceKind kind, std::span<const Se3Transform> poses, const PoseChain& chain,
                                   const CameraModel& cam, const GradientSink& sink = {});

struct SmoothnessResult {
  double loss = 0.0;
  Grid<double> map;  // per-pixel x + y contributions
};

SmoothnessResult smoothness_term(const Grid<double>& depth, const ImageBuffer& image, const GradientSink& sink = {});

}  // namespace rawdepth
