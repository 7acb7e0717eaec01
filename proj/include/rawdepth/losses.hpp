#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rawdepth/camera.hpp"
#include "rawdepth/image.hpp"
#include "rawdepth/se3.hpp"

namespace rawdepth {

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

/// Which parts of the objective are evaluated. All on reproduces the full
/// training objective; switching terms off mirrors the ablation settings.
struct LossTerms {
  bool forward_sequence = true;
  bool backward_sequence = true;
  bool consistency = true;
  bool smoothness = true;
  bool static_mask = true;
};

struct LossWeights {
  double omega = 0.85;          // SSIM vs L1 mix
  double beta_smooth = 0.001;   // edge-aware smoothness
  double gamma_dc = 0.001;      // cross-sequence depth consistency
  double clip_percentile = 0.95;
  int num_scales = 4;
  LossTerms terms;

  /// Throws InvalidParameter naming the offending field.
  void validate() const;
};

// -- Sigmoid output -> depth ----------------------------------------------------

struct SigmoidDepthParams {
  enum class Kind { PinholeReciprocal, FisheyeAffine };
  double x = 0.0;
  double y = 0.0;
  Kind kind = Kind::PinholeReciprocal;
  double d_min = 0.1;
  double d_max = 100.0;

  /// Solves x, y so that sigma in [0, 1] maps onto [d_min, d_max]:
  /// D = 1 / (x sigma + y) for pinhole (sigma = 1 -> d_min), D = x sigma + y
  /// for fisheye (sigma = 0 -> d_min).
  static SigmoidDepthParams make(Kind kind, double d_min = 0.1, double d_max = 100.0);
};

DepthMap sigmoid_to_depth(const Grid<double>& sigma, const SigmoidDepthParams& params,
                          DistanceKind kind = DistanceKind::PlanarDepth);

// -- Photometric pieces -----------------------------------------------------------

/// SSIM over 3x3 uniform windows (reflect padding at the image border) per
/// channel. Windows touching a mask-0 pixel are excluded: their value is 0
/// and window_valid is 0. Pass an empty mask to use every pixel.
Grid<double> ssim_map(const ImageBuffer& a, const ImageBuffer& b, const Mask& mask,
                      Mask* window_valid = nullptr);

struct PhotometricMap {
  Grid<double> values;  // H x W, channel-averaged
  Mask valid;
};

/// omega * (1 - SSIM) / 2 + (1 - omega) * |I_t - I_hat|, channel-averaged,
/// zero and invalid wherever the SSIM window is not fully inside the mask.
PhotometricMap photometric_loss(const ImageBuffer& target, const ImageBuffer& reconstruction, const Mask& mask,
                                double omega);

struct MinReconstruction {
  Grid<double> values;
  Mask valid;              // 0 where every input was invalid
  Grid<int> source_index;  // argmin, -1 where invalid
};

/// Per-pixel minimum over the valid inputs. Throws EmptyInput on an empty
/// list and DimensionMismatch on unequal shapes.
MinReconstruction min_reconstruction(std::span<const PhotometricMap> maps);

struct ClippedMap {
  Grid<double> values;
  double threshold = 0.0;
  size_t threshold_pixel = 0;  // pixel index whose value is the threshold
};

/// Nearest-rank quantile clip over valid pixels: threshold is the
/// ceil(q * n)-th smallest valid value; larger values are set to it.
/// Throws NoValidPixels.
ClippedMap percentile_clip(const Grid<double>& map, const Mask& valid, double q = 0.95);

/// 1 where the best warped reconstruction explains the target strictly better
/// than the best unwarped source.
Mask static_pixel_mask(const ImageBuffer& target, std::span<const ImageBuffer> sources,
                       std::span<const ImageBuffer> reconstructions, std::span<const Mask> reconstruction_masks,
                       double omega);

/// Edge-aware smoothness of the mean-normalized inverse depth. Throws
/// DegenerateDepth when the mean inverse depth is not positive.
double smoothness_loss(const DepthMap& depth, const ImageBuffer& image);

/// Pose between frames a < b of a snippet: a_to_b maps points of frame a into
/// frame b.
struct PairPose {
  int a = 0;
  int b = 1;
  Se3Transform a_to_b;
};

/// Masked L1 between the transformed range and the bilinearly warped depth of
/// the other frame, both temporal directions, over every supplied pair.
double cross_sequence_consistency(std::span<const DepthMap> depths, std::span<const PairPose> poses,
                                  const CameraModel& cam);

// -- Full objective -----------------------------------------------------------------

/// A three-frame snippet (t-1, t, t+1). Depth pyramids hold num_scales maps
/// per frame, finest first; coarser maps are upsampled to image resolution
/// before warping.
struct SnippetInputs {
  std::array<ImageBuffer, 3> images;
  std::array<std::vector<DepthMap>, 3> depths;
  Se3Transform target_to_prev;  // T_{t -> t-1}
  Se3Transform target_to_next;  // T_{t -> t+1}
};

struct ScaleLoss {
  double reconstruction_fwd = 0.0;
  double reconstruction_bwd = 0.0;
  double smoothness = 0.0;
  double consistency = 0.0;
  double combined = 0.0;  // fwd + bwd + gamma * consistency + beta * smoothness
  double weight = 1.0;    // 1 / 2^(n-1)
};

struct LossBreakdown {
  // Scale-weighted sums; total = sum_n combined_n * weight_n.
  double reconstruction_fwd = 0.0;
  double reconstruction_bwd = 0.0;
  double smoothness = 0.0;
  double consistency = 0.0;
  double total = 0.0;
  std::vector<ScaleLoss> scales;

  // Finest-scale per-pixel maps.
  Grid<double> reconstruction_fwd_map;
  std::array<Grid<double>, 2> reconstruction_bwd_maps;
  Grid<double> consistency_map;
  Grid<double> smoothness_map;
  Mask static_mask;
  std::array<Mask, 2> ego_masks;  // target -> prev, target -> next
};

struct LossGradients {
  std::array<std::vector<Grid<double>>, 3> depths;  // same shapes as the inputs
  Vector6d target_to_prev = Vector6d::Zero();       // (rotation, translation)
  Vector6d target_to_next = Vector6d::Zero();
};

LossBreakdown total_loss(const SnippetInputs& inputs, const CameraModel& cam, const LossWeights& weights,
                         LossGradients* gradients = nullptr);

/// Flat "key=value" report with 9 significant digits.
std::string to_report(const LossBreakdown& breakdown);

}  // namespace rawdepth
