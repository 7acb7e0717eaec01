#pragma once

#include <optional>
#include <string>

#include "rawdepth/image.hpp"
#include "rawdepth/synthetic.hpp"

namespace rawdepth {

struct DepthMetrics {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  long long pixels = 0;
};

struct MetricsOptions {
  double cap = 80.0;
  double min_depth = 0.1;
  bool median_scale = false;
  /// Evaluation window; unset uses the whole map.
  std::optional<CropRect> crop;
};

/// Error statistics over pixels whose ground truth is finite and inside
/// [min_depth, cap]. Predictions are optionally median-scaled, then clamped
/// to [min_depth, cap]. delta_k counts max(p/g, g/p) < 1.25^k strictly.
/// Throws NoValidPixels and DimensionMismatch.
DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt, const MetricsOptions& options = {});

/// "abs_rel,sq_rel,rmse,rmse_log,delta1,delta2,delta3" header and row.
std::string metrics_csv_header();
std::string metrics_csv_row(const DepthMetrics& m);

}  // namespace rawdepth
