#include "rawdepth/losses.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "rawdepth/objective.hpp"
#include "rawdepth/parallel.hpp"
#include "rawdepth/warp.hpp"

namespace rawdepth {

void LossWeights::validate() const {
  if (!(omega >= 0.0 && omega <= 1.0)) throw Error(ErrorCode::InvalidParameter, "omega");
  if (!(beta_smooth >= 0.0) || !std::isfinite(beta_smooth)) throw Error(ErrorCode::InvalidParameter, "beta_smooth");
  if (!(gamma_dc >= 0.0) || !std::isfinite(gamma_dc)) throw Error(ErrorCode::InvalidParameter, "gamma_dc");
  if (!(clip_percentile > 0.0 && clip_percentile <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "clip_percentile");
  }
  if (num_scales < 1) throw Error(ErrorCode::InvalidParameter, "num_scales");
}

SigmoidDepthParams SigmoidDepthParams::make(Kind kind, double d_min, double d_max) {
  if (!(d_min > 0.0 && d_max > d_min)) throw Error(ErrorCode::InvalidParameter, "d_min");
  SigmoidDepthParams p;
  p.kind = kind;
  p.d_min = d_min;
  p.d_max = d_max;
  if (kind == Kind::PinholeReciprocal) {
    p.y = 1.0 / d_max;
    p.x = 1.0 / d_min - 1.0 / d_max;
  } else {
    p.y = d_min;
    p.x = d_max - d_min;
  }
  return p;
}

DepthMap sigmoid_to_depth(const Grid<double>& sigma, const SigmoidDepthParams& params, DistanceKind kind) {
  DepthMap out(sigma.width(), sigma.height(), 0.0, kind);
  for (size_t i = 0; i < sigma.pixel_count(); ++i) {
    const double s = std::clamp(sigma[i], 0.0, 1.0);
    const double d = params.kind == SigmoidDepthParams::Kind::PinholeReciprocal ? 1.0 / (params.x * s + params.y)
                                                                                 : params.x * s + params.y;
    out.values[i] = std::clamp(d, params.d_min, params.d_max);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

int reflect(int i, int n) {
  if (n == 1) return 0;
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}

void check_same(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
  if (!a.same_shape(b) || a.channels() != b.channels()) throw Error(ErrorCode::DimensionMismatch, what);
}

Mask window_valid_mask(const Mask& mask, int w, int h) {
  Mask out(w, h, 1, 1);
  if (mask.empty()) return out;
  if (!mask.same_shape(w, h)) throw Error(ErrorCode::DimensionMismatch, "mask");
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool ok = true;
      for (int dy = -1; dy <= 1 && ok; ++dy) {
        for (int dx = -1; dx <= 1 && ok; ++dx) ok = mask(reflect(x + dx, w), reflect(y + dy, h)) != 0;
      }
      out(x, y) = ok ? 1 : 0;
    }
  }
  return out;
}

struct WindowStats {
  double mu_a, mu_b, var_a, var_b, cov;
};

WindowStats window_stats(const ImageBuffer& a, const ImageBuffer& b, int x, int y, int c) {
  const int w = a.width(), h = a.height();
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (int dy = -1; dy <= 1; ++dy) {
    const int yy = reflect(y + dy, h);
    for (int dx = -1; dx <= 1; ++dx) {
      const int xx = reflect(x + dx, w);
      const double va = a(xx, yy, c), vb = b(xx, yy, c);
      sa += va;
      sb += vb;
      saa += va * va;
      sbb += vb * vb;
      sab += va * vb;
    }
  }
  WindowStats s;
  s.mu_a = sa / 9.0;
  s.mu_b = sb / 9.0;
  s.var_a = saa / 9.0 - s.mu_a * s.mu_a;
  s.var_b = sbb / 9.0 - s.mu_b * s.mu_b;
  s.cov = sab / 9.0 - s.mu_a * s.mu_b;
  return s;
}

double ssim_from(const WindowStats& s) {
  return ((2.0 * s.mu_a * s.mu_b + kSsimC1) * (2.0 * s.cov + kSsimC2)) /
         ((s.mu_a * s.mu_a + s.mu_b * s.mu_b + kSsimC1) * (s.var_a + s.var_b + kSsimC2));
}

}  // namespace

Grid<double> ssim_map(const ImageBuffer& a, const ImageBuffer& b, const Mask& mask, Mask* window_valid) {
  check_same(a, b, "ssim inputs");
  const int w = a.width(), h = a.height(), nc = a.channels();
  Mask valid = window_valid_mask(mask, w, h);
  Grid<double> out(w, h, nc, 0.0);
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      if (!valid(x, y)) continue;
      for (int c = 0; c < nc; ++c) out(x, y, c) = ssim_from(window_stats(a, b, x, y, c));
    }
  });
  if (window_valid) *window_valid = std::move(valid);
  return out;
}

PhotometricMap photometric_loss(const ImageBuffer& target, const ImageBuffer& reconstruction, const Mask& mask,
                                double omega) {
  check_same(target, reconstruction, "photometric inputs");
  Mask valid;
  const Grid<double> ssim = ssim_map(target, reconstruction, mask, &valid);
  const int w = target.width(), h = target.height(), nc = target.channels();
  PhotometricMap out{Grid<double>(w, h, 1, 0.0), std::move(valid)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!out.valid(x, y)) continue;
      double acc = 0.0;
      for (int c = 0; c < nc; ++c) {
        acc += omega * (1.0 - ssim(x, y, c)) / 2.0 +
               (1.0 - omega) * std::abs(target(x, y, c) - reconstruction(x, y, c));
      }
      out.values(x, y) = acc / nc;
    }
  }
  return out;
}

ImageBuffer photometric_loss_backward(const ImageBuffer& target, const ImageBuffer& reconstruction,
                                      const PhotometricMap& forward, double omega, const Grid<double>& grad_values) {
  const int w = target.width(), h = target.height(), nc = target.channels();
  ImageBuffer grad(w, h, nc, 0.0);
  // Window taps scatter into neighbouring pixels, so this runs serially.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double g = grad_values(x, y);
      if (!forward.valid(x, y) || g == 0.0) continue;
      for (int c = 0; c < nc; ++c) {
        const WindowStats s = window_stats(target, reconstruction, x, y, c);
        const double a1 = 2.0 * s.mu_a * s.mu_b + kSsimC1, a2 = 2.0 * s.cov + kSsimC2;
        const double b1 = s.mu_a * s.mu_a + s.mu_b * s.mu_b + kSsimC1, b2 = s.var_a + s.var_b + kSsimC2;
        const double ssim = a1 * a2 / (b1 * b2);
        const double k = -omega / 2.0 * g / nc * ssim;
        for (int dy = -1; dy <= 1; ++dy) {
          const int yy = reflect(y + dy, h);
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = reflect(x + dx, w);
            const double va = target(xx, yy, c), vb = reconstruction(xx, yy, c);
            const double d_a1 = 2.0 * s.mu_a / 9.0, d_a2 = 2.0 * (va - s.mu_a) / 9.0;
            const double d_b1 = 2.0 * s.mu_b / 9.0, d_b2 = 2.0 * (vb - s.mu_b) / 9.0;
            grad(xx, yy, c) += k * (d_a1 / a1 + d_a2 / a2 - d_b1 / b1 - d_b2 / b2);
          }
        }
        const double diff = reconstruction(x, y, c) - target(x, y, c);
        const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        grad(x, y, c) += (1.0 - omega) * g / nc * sgn;
      }
    }
  }
  return grad;
}

MinReconstruction min_reconstruction(std::span<const PhotometricMap> maps) {
  if (maps.empty()) throw Error(ErrorCode::EmptyInput, "min_reconstruction");
  const int w = maps[0].values.width(), h = maps[0].values.height();
  for (const auto& m : maps) {
    if (!m.values.same_shape(w, h) || !m.valid.same_shape(w, h)) {
      throw Error(ErrorCode::DimensionMismatch, "min_reconstruction");
    }
  }
  MinReconstruction out{Grid<double>(w, h, 1, 0.0), Mask(w, h, 1, 0), Grid<int>(w, h, 1, -1)};
  for (size_t i = 0; i < out.values.size(); ++i) {
    for (size_t k = 0; k < maps.size(); ++k) {
      if (!maps[k].valid[i]) continue;
      if (out.source_index[i] < 0 || maps[k].values[i] < out.values[i]) {
        out.values[i] = maps[k].values[i];
        out.source_index[i] = static_cast<int>(k);
        out.valid[i] = 1;
      }
    }
  }
  return out;
}

ClippedMap percentile_clip(const Grid<double>& map, const Mask& valid, double q) {
  if (!(q > 0.0 && q <= 1.0)) throw Error(ErrorCode::InvalidParameter, "clip_percentile");
  if (!valid.same_shape(map)) throw Error(ErrorCode::DimensionMismatch, "percentile_clip");
  std::vector<size_t> idx;
  for (size_t i = 0; i < map.size(); ++i) {
    if (valid[i]) idx.push_back(i);
  }
  if (idx.empty()) throw Error(ErrorCode::NoValidPixels, "percentile_clip");
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    return map[a] < map[b] || (map[a] == map[b] && a < b);
  });
  const size_t n = idx.size();
  size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
  rank = std::clamp<size_t>(rank, 1, n);
  ClippedMap out{map, map[idx[rank - 1]], idx[rank - 1]};
  for (size_t i : idx) out.values[i] = std::min(out.values[i], out.threshold);
  return out;
}

Mask static_pixel_mask(const ImageBuffer& target, std::span<const ImageBuffer> sources,
                       std::span<const ImageBuffer> reconstructions, std::span<const Mask> reconstruction_masks,
                       double omega) {
  if (sources.empty() || reconstructions.empty()) throw Error(ErrorCode::EmptyInput, "static_pixel_mask");
  if (reconstructions.size() != reconstruction_masks.size()) {
    throw Error(ErrorCode::DimensionMismatch, "reconstruction masks");
  }
  std::vector<PhotometricMap> rec, ident;
  for (size_t k = 0; k < reconstructions.size(); ++k) {
    rec.push_back(photometric_loss(target, reconstructions[k], reconstruction_masks[k], omega));
  }
  for (const auto& s : sources) ident.push_back(photometric_loss(target, s, Mask{}, omega));
  const MinReconstruction mr = min_reconstruction(rec);
  const MinReconstruction mi = min_reconstruction(ident);
  Mask out(target.width(), target.height(), 1, 0);
  for (size_t i = 0; i < out.size(); ++i) out[i] = (mr.valid[i] && mr.values[i] < mi.values[i]) ? 1 : 0;
  return out;
}

double smoothness_loss(const DepthMap& depth, const ImageBuffer& image) {
  return smoothness_term(depth.values, image).loss;
}

double cross_sequence_consistency(std::span<const DepthMap> depths, std::span<const PairPose> poses,
                                  const CameraModel& cam) {
  if (depths.size() < 2) throw Error(ErrorCode::EmptyInput, "consistency needs two frames");
  double total = 0.0;
  for (const auto& pp : poses) {
    if (pp.a < 0 || pp.b < 0 || pp.a >= static_cast<int>(depths.size()) || pp.b >= static_cast<int>(depths.size())) {
      throw Error(ErrorCode::InvalidParameter, "pair index");
    }
    const DepthMap& da = depths[pp.a];
    const DepthMap& db = depths[pp.b];
    const RayGrid rays = compute_rays(cam, da.kind);
    const std::vector<Se3Transform> list{pp.a_to_b};
    total += consistency_term(da.values, db.values, rays, da.kind, list, {{0, false}}, cam).loss;
    total += consistency_term(db.values, da.values, rays, db.kind, list, {{0, true}}, cam).loss;
  }
  return total;
}

// -- Full objective -------------------------------------------------------------

namespace {

void add_into(Grid<double>& dst, const Grid<double>& src) {
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

LossBreakdown total_loss(const SnippetInputs& in, const CameraModel& cam, const LossWeights& weights,
                         LossGradients* gradients) {
  weights.validate();
  const int w = cam.width(), h = cam.height();
  for (int k = 0; k < 3; ++k) {
    if (!in.images[k].same_shape(w, h)) throw Error(ErrorCode::DimensionMismatch, "snippet image vs camera");
    if (in.images[k].channels() != in.images[0].channels()) throw Error(ErrorCode::DimensionMismatch, "channels");
    if (static_cast<int>(in.depths[k].size()) < weights.num_scales) {
      throw Error(ErrorCode::InvalidParameter, "num_scales");
    }
    for (int s = 0; s < weights.num_scales; ++s) validate_depth(in.depths[k][s]);
  }
  const DistanceKind kind = in.depths[1][0].kind;
  const RayGrid rays = compute_rays(cam, kind);
  const std::vector<Se3Transform> poses{in.target_to_prev, in.target_to_next};
  const LossTerms& terms = weights.terms;

  if (gradients) {
    for (int k = 0; k < 3; ++k) {
      gradients->depths[k].clear();
      for (int s = 0; s < weights.num_scales; ++s) {
        const auto& d = in.depths[k][s].values;
        gradients->depths[k].emplace_back(d.width(), d.height(), 1, 0.0);
      }
    }
    gradients->target_to_prev.setZero();
    gradients->target_to_next.setZero();
  }
  std::vector<Vector6d> pose_grad(2, Vector6d::Zero());

  // Consistency chains between snippet frames 0 (t-1), 1 (t), 2 (t+1).
  struct Pair {
    int a, b;
    PoseChain chain;
  };
  const std::vector<Pair> pairs{
      {0, 1, {{0, true}}},           {1, 0, {{0, false}}},
      {0, 2, {{0, true}, {1, false}}}, {2, 0, {{1, true}, {0, false}}},
      {1, 2, {{1, false}}},          {2, 1, {{1, true}}},
  };

  LossBreakdown out;
  for (int s = 0; s < weights.num_scales; ++s) {
    const double scale_w = 1.0 / static_cast<double>(1 << s);
    std::array<Grid<double>, 3> up;
    std::array<Grid<double>, 3> gup;
    for (int k = 0; k < 3; ++k) {
      up[k] = resize_bilinear(in.depths[k][s].values, w, h);
      if (gradients) gup[k] = Grid<double>(w, h, 1, 0.0);
    }
    auto sink = [&](int a, double scale, int b = -1) {
      GradientSink g;
      if (!gradients) return g;
      g.depth = &gup[a];
      g.other_depth = b >= 0 ? &gup[b] : nullptr;
      g.poses = &pose_grad;
      g.scale = scale;
      return g;
    };

    ScaleLoss sl;
    sl.weight = scale_w;
    if (terms.forward_sequence) {
      const std::vector<WarpSpec> specs{{&in.images[0], {{0, false}}}, {&in.images[2], {{1, false}}}};
      ReconstructionResult r = reconstruction_term(in.images[1], up[1], rays, specs, poses, cam, weights,
                                                   sink(1, scale_w));
      sl.reconstruction_fwd = r.loss;
      if (s == 0) {
        out.reconstruction_fwd_map = std::move(r.map);
        out.static_mask = std::move(r.static_mask);
        out.ego_masks = {std::move(r.ego_masks[0]), std::move(r.ego_masks[1])};
      }
    }
    if (terms.backward_sequence) {
      for (int j = 0; j < 2; ++j) {
        const int frame = j == 0 ? 0 : 2;
        const std::vector<WarpSpec> specs{{&in.images[1], {{j, true}}}};
        ReconstructionResult r = reconstruction_term(in.images[frame], up[frame], rays, specs, poses, cam, weights,
                                                     sink(frame, 0.5 * scale_w));
        sl.reconstruction_bwd += 0.5 * r.loss;
        if (s == 0) out.reconstruction_bwd_maps[j] = std::move(r.map);
      }
    }
    if (terms.consistency) {
      Grid<double> cmap(w, h, 1, 0.0);
      for (const Pair& p : pairs) {
        ConsistencyResult c = consistency_term(up[p.a], up[p.b], rays, kind, poses, p.chain, cam,
                                               sink(p.a, weights.gamma_dc * scale_w, p.b));
        sl.consistency += c.loss;
        if (s == 0 && p.a == 1) add_into(cmap, c.map);
      }
      if (s == 0) out.consistency_map = std::move(cmap);
    }
    if (terms.smoothness) {
      SmoothnessResult sm = smoothness_term(up[1], in.images[1], sink(1, weights.beta_smooth * scale_w));
      sl.smoothness = sm.loss;
      if (s == 0) out.smoothness_map = std::move(sm.map);
    }
    sl.combined = sl.reconstruction_fwd + sl.reconstruction_bwd + weights.gamma_dc * sl.consistency +
                  weights.beta_smooth * sl.smoothness;

    out.reconstruction_fwd += scale_w * sl.reconstruction_fwd;
    out.reconstruction_bwd += scale_w * sl.reconstruction_bwd;
    out.consistency += scale_w * sl.consistency;
    out.smoothness += scale_w * sl.smoothness;
    out.total += scale_w * sl.combined;
    out.scales.push_back(sl);

    if (gradients) {
      for (int k = 0; k < 3; ++k) {
        const auto& d = in.depths[k][s].values;
        add_into(gradients->depths[k][s], resize_bilinear_adjoint(gup[k], d.width(), d.height()));
      }
    }
  }
  if (gradients) {
    gradients->target_to_prev = pose_grad[0];
    gradients->target_to_next = pose_grad[1];
  }
  return out;
}

namespace {

void put(std::ostringstream& os, const std::string& key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  os << key << '=' << buf << '\n';
}

}  // namespace

std::string to_report(const LossBreakdown& b) {
  std::ostringstream os;
  put(os, "reconstruction_fwd", b.reconstruction_fwd);
  put(os, "reconstruction_bwd", b.reconstruction_bwd);
  put(os, "consistency", b.consistency);
  put(os, "smoothness", b.smoothness);
  put(os, "total", b.total);
  os << "num_scales=" << b.scales.size() << '\n';
  for (size_t n = 0; n < b.scales.size(); ++n) {
    const std::string p = "scale" + std::to_string(n + 1) + ".";
    const ScaleLoss& s = b.scales[n];
    put(os, p + "weight", s.weight);
    put(os, p + "reconstruction_fwd", s.reconstruction_fwd);
    put(os, p + "reconstruction_bwd", s.reconstruction_bwd);
    put(os, p + "consistency", s.consistency);
    put(os, p + "smoothness", s.smoothness);
    put(os, p + "combined", s.combined);
  }
  auto density = [](const Mask& m) {
    if (m.empty()) return 0.0;
    double n = 0;
    for (size_t i = 0; i < m.size(); ++i) n += m[i];
    return n / static_cast<double>(m.size());
  };
  if (!b.static_mask.empty()) put(os, "static_mask_density", density(b.static_mask));
  for (int k = 0; k < 2; ++k) {
    if (!b.ego_masks[k].empty()) put(os, "ego_mask_density." + std::to_string(k), density(b.ego_masks[k]));
  }
  return os.str();
}

}  // namespace rawdepth
