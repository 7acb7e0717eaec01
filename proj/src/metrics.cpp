#include "rawdepth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

namespace rawdepth {

namespace {

double median(std::vector<double> v) {
  const size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt, const MetricsOptions& o) {
  if (!pred.values.same_shape(gt.values)) throw Error(ErrorCode::DimensionMismatch, "pred vs gt");
  if (!(o.min_depth > 0.0 && o.cap > o.min_depth)) throw Error(ErrorCode::InvalidParameter, "cap");
  int x0 = 0, y0 = 0, x1 = gt.width() - 1, y1 = gt.height() - 1;
  if (o.crop) {
    x0 = std::max(x0, o.crop->x0);
    y0 = std::max(y0, o.crop->y0);
    x1 = std::min(x1, o.crop->x1);
    y1 = std::min(y1, o.crop->y1);
  }
  std::vector<double> p, g;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double gv = gt(x, y), pv = pred(x, y);
      if (!std::isfinite(gv) || gv < o.min_depth || gv > o.cap || !std::isfinite(pv)) continue;
      g.push_back(gv);
      p.push_back(pv);
    }
  }
  if (g.empty()) throw Error(ErrorCode::NoValidPixels, "depth_metrics");
  if (o.median_scale) {
    const double mp = median(p);
    if (!(mp > 0.0)) throw Error(ErrorCode::DegenerateDepth, "median prediction");
    const double ratio = median(g) / mp;
    for (double& v : p) v *= ratio;
  }
  DepthMetrics m;
  const double n = static_cast<double>(g.size());
  long long d1 = 0, d2 = 0, d3 = 0;
  for (size_t i = 0; i < g.size(); ++i) {
    const double pv = std::clamp(p[i], o.min_depth, o.cap), gv = g[i];
    const double e = pv - gv;
    m.abs_rel += std::abs(e) / gv;
    m.sq_rel += e * e / gv;
    m.rmse += e * e;
    const double le = std::log(pv) - std::log(gv);
    m.rmse_log += le * le;
    const double r = std::max(pv / gv, gv / pv);
    d1 += r < 1.25;
    d2 += r < 1.25 * 1.25;
    d3 += r < 1.25 * 1.25 * 1.25;
  }
  m.abs_rel /= n;
  m.sq_rel /= n;
  m.rmse = std::sqrt(m.rmse / n);
  m.rmse_log = std::sqrt(m.rmse_log / n);
  m.delta1 = d1 / n;
  m.delta2 = d2 / n;
  m.delta3 = d3 / n;
  m.pixels = static_cast<long long>(g.size());
  return m;
}

std::string metrics_csv_header() { return "abs_rel,sq_rel,rmse,rmse_log,delta1,delta2,delta3"; }

std::string metrics_csv_row(const DepthMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g", m.abs_rel, m.sq_rel, m.rmse, m.rmse_log,
                m.delta1, m.delta2, m.delta3);
  return buf;
}

}  // namespace rawdepth
