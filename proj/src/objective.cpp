#include "rawdepth/objective.hpp"

#include <algorithm>
#include <cmath>

#include "rawdepth/parallel.hpp"

namespace rawdepth {

namespace {

struct FactorData {
  Eigen::Matrix3d R;
  Eigen::Vector3d t;
  std::array<Eigen::Matrix3d, 3> dR;
  int index;
  bool inverted;
};

constexpr size_t kMaxChain = 8;

std::vector<FactorData> prepare_chain(std::span<const Se3Transform> poses, const PoseChain& chain) {
  if (chain.empty() || chain.size() > kMaxChain) throw Error(ErrorCode::InvalidParameter, "pose chain length");
  std::vector<FactorData> out;
  for (const PoseFactor& f : chain) {
    if (f.index < 0 || f.index >= static_cast<int>(poses.size())) {
      throw Error(ErrorCode::InvalidParameter, "pose chain index");
    }
    const Se3Transform& T = poses[f.index];
    out.push_back({T.rotation_matrix(), T.translation, rotation_jacobians(T.rotation), f.index, f.inverted});
  }
  return out;
}

Eigen::Vector3d step(const FactorData& f, const Eigen::Vector3d& Z) {
  return f.inverted ? Eigen::Vector3d(f.R.transpose() * (Z - f.t)) : Eigen::Vector3d(f.R * Z + f.t);
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

bool wants_gradient(const GradientSink& s) { return s.depth || s.other_depth || s.poses; }

}  // namespace

Eigen::Vector3d apply_chain(std::span<const Se3Transform> poses, const PoseChain& chain, const Eigen::Vector3d& X) {
  Eigen::Vector3d Z = X;
  for (const FactorData& f : prepare_chain(poses, chain)) Z = step(f, Z);
  return Z;
}

WarpField WarpField::compute(const CameraModel& cam, const RayGrid& rays, const Grid<double>& depth,
                             std::span<const Se3Transform> poses, const PoseChain& chain) {
  const int w = depth.width(), h = depth.height();
  if (!rays.rays.same_shape(w, h)) throw Error(ErrorCode::DimensionMismatch, "rays vs depth");
  const auto factors = prepare_chain(poses, chain);
  WarpField wf{Grid<Eigen::Vector3d>(w, h, 1, Eigen::Vector3d::Zero()),
               Grid<Eigen::Vector2d>(w, h, 1, Eigen::Vector2d::Zero()), Grid<Matrix23d>(w, h, 1, Matrix23d::Zero()),
               Mask(w, h, 1, 0)};
  const int sw = cam.width(), sh = cam.height();
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const double d = depth(x, y);
      if (!rays.valid(x, y) || !(d > 0.0) || !std::isfinite(d)) continue;
      Eigen::Vector3d Z = d * rays.rays(x, y);
      for (const FactorData& f : factors) Z = step(f, Z);
      wf.points(x, y) = Z;
      Matrix23d J;
      const auto proj = try_project(cam, Z, &J);
      if (!proj) continue;
      const Eigen::Vector2d q = snap_to_grid(*proj);
      if (!inside_sampling_domain(q, sw, sh)) continue;
      wf.coords(x, y) = q;
      wf.jacobians(x, y) = J;
      wf.valid(x, y) = 1;
    }
  });
  return wf;
}

void WarpField::backward(const RayGrid& rays, const Grid<double>& depth, std::span<const Se3Transform> poses,
                         const PoseChain& chain, const Grid<Eigen::Vector2d>& grad_coords,
                         const Grid<Eigen::Vector3d>& grad_points, Grid<double>* grad_depth,
                         std::vector<Vector6d>* grad_poses) const {
  const int w = depth.width(), h = depth.height();
  const auto factors = prepare_chain(poses, chain);
  const size_t np = poses.size();
  // Per-row pose partials, reduced in row order for deterministic sums.
  std::vector<Vector6d> row_partials(grad_poses ? static_cast<size_t>(h) * np : 0, Vector6d::Zero());
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      if (!valid(x, y)) continue;
      Eigen::Vector3d g = Eigen::Vector3d::Zero();
      if (!grad_coords.empty()) g += jacobians(x, y).transpose() * grad_coords(x, y);
      if (!grad_points.empty()) g += grad_points(x, y);
      if (g.isZero(0.0)) continue;
      std::array<Eigen::Vector3d, kMaxChain + 1> Z;
      Z[0] = depth(x, y) * rays.rays(x, y);
      for (size_t k = 0; k < factors.size(); ++k) Z[k + 1] = step(factors[k], Z[k]);
      for (size_t k = factors.size(); k-- > 0;) {
        const FactorData& f = factors[k];
        Vector6d* part = grad_poses ? &row_partials[static_cast<size_t>(y) * np + f.index] : nullptr;
        if (!f.inverted) {
          if (part) {
            for (int i = 0; i < 3; ++i) (*part)(i) += g.dot(f.dR[i] * Z[k]);
            part->tail<3>() += g;
          }
          g = f.R.transpose() * g;
        } else {
          const Eigen::Vector3d dz = Z[k] - f.t;
          if (part) {
            for (int i = 0; i < 3; ++i) (*part)(i) += g.dot(f.dR[i].transpose() * dz);
            part->tail<3>() -= f.R * g;
          }
          g = f.R * g;
        }
      }
      if (grad_depth) (*grad_depth)(x, y) += rays.rays(x, y).dot(g);
    }
  });
  if (grad_poses) {
    for (int y = 0; y < h; ++y) {
      for (size_t i = 0; i < np; ++i) (*grad_poses)[i] += row_partials[static_cast<size_t>(y) * np + i];
    }
  }
}

ReconstructionResult reconstruction_term(const ImageBuffer& target, const Grid<double>& depth, const RayGrid& rays,
                                         std::span<const WarpSpec> warps, std::span<const Se3Transform> poses,
                                         const CameraModel& cam, const LossWeights& weights,
                                         const GradientSink& sink) {
  if (warps.empty()) throw Error(ErrorCode::EmptyInput, "reconstruction warps");
  const int w = target.width(), h = target.height(), nc = target.channels();
  if (!depth.same_shape(w, h)) throw Error(ErrorCode::DimensionMismatch, "depth vs target");
  ReconstructionResult out;
  std::vector<WarpField> fields;
  std::vector<PhotometricMap> photo;
  for (const WarpSpec& spec : warps) {
    if (!spec.source || spec.source->channels() != nc) throw Error(ErrorCode::DimensionMismatch, "source image");
    fields.push_back(WarpField::compute(cam, rays, depth, poses, spec.chain));
    const WarpField& wf = fields.back();
    ImageBuffer rec(w, h, nc, 0.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!wf.valid(x, y)) continue;
        for (int c = 0; c < nc; ++c) rec(x, y, c) = bilinear_value(*spec.source, c, wf.coords(x, y));
      }
    }
    photo.push_back(photometric_loss(target, rec, wf.valid, weights.omega));
    out.ego_masks.push_back(wf.valid);
    out.reconstructions.push_back(std::move(rec));
  }
  const MinReconstruction mr = min_reconstruction(photo);

  out.included = mr.valid;
  if (weights.terms.static_mask) {
    std::vector<PhotometricMap> ident;
    for (const WarpSpec& spec : warps) {
      if (!spec.source->same_shape(target)) throw Error(ErrorCode::DimensionMismatch, "static mask source");
      ident.push_back(photometric_loss(target, *spec.source, Mask{}, weights.omega));
    }
    const MinReconstruction mi = min_reconstruction(ident);
    out.static_mask = Mask(w, h, 1, 0);
    for (size_t i = 0; i < out.included.size(); ++i) {
      out.static_mask[i] = (mr.valid[i] && mr.values[i] < mi.values[i]) ? 1 : 0;
      out.included[i] = out.static_mask[i];
    }
  }

  out.map = Grid<double>(w, h, 1, 0.0);
  bool any_valid = false, any_included = false;
  for (size_t i = 0; i < mr.valid.size(); ++i) {
    any_valid = any_valid || mr.valid[i];
    any_included = any_included || out.included[i];
  }
  if (!any_valid) throw Error(ErrorCode::NoValidPixels, "reconstruction");
  if (!any_included) return out;

  const ClippedMap clipped = percentile_clip(mr.values, out.included, weights.clip_percentile);
  const double n = static_cast<double>(w) * h;
  double sum = 0.0;
  for (size_t i = 0; i < out.map.size(); ++i) {
    if (!out.included[i]) continue;
    out.map[i] = clipped.values[i];
    sum += clipped.values[i];
  }
  out.loss = sum / n;
  if (!wants_gradient(sink)) return out;

  // Route each included pixel's gradient to the pixel that determines its
  // clipped value, then to the warp that won the per-pixel minimum there.
  std::vector<Grid<double>> grad_values(warps.size(), Grid<double>(w, h, 1, 0.0));
  const double g = sink.scale / n;
  for (size_t i = 0; i < out.map.size(); ++i) {
    if (!out.included[i]) continue;
    const size_t dest = (i == clipped.threshold_pixel || mr.values[i] < clipped.threshold) ? i : clipped.threshold_pixel;
    grad_values[mr.source_index[dest]][dest] += g;
  }
  for (size_t k = 0; k < warps.size(); ++k) {
    const ImageBuffer grad_rec =
        photometric_loss_backward(target, out.reconstructions[k], photo[k], weights.omega, grad_values[k]);
    const WarpField& wf = fields[k];
    Grid<Eigen::Vector2d> grad_coords(w, h, 1, Eigen::Vector2d::Zero());
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!wf.valid(x, y)) continue;
        Eigen::Vector2d gq = Eigen::Vector2d::Zero();
        for (int c = 0; c < nc; ++c) {
          const double gr = grad_rec(x, y, c);
          if (gr != 0.0) gq += gr * bilinear_gradient(*warps[k].source, c, wf.coords(x, y));
        }
        grad_coords(x, y) = gq;
      }
    }
    wf.backward(rays, depth, poses, warps[k].chain, grad_coords, {}, sink.depth, sink.poses);
  }
  return out;
}

ConsistencyResult consistency_term(const Grid<double>& depth_a, const Grid<double>& depth_b, const RayGrid& rays,
                                   DistanceKind kind, std::span<const Se3Transform> poses, const PoseChain& chain,
                                   const CameraModel& cam, const GradientSink& sink) {
  const int w = depth_a.width(), h = depth_a.height();
  if (!depth_b.same_shape(cam.width(), cam.height())) throw Error(ErrorCode::DimensionMismatch, "consistency depth");
  const WarpField wf = WarpField::compute(cam, rays, depth_a, poses, chain);
  ConsistencyResult out{0.0, Grid<double>(w, h, 1, 0.0), wf.valid};
  Grid<double> diff(w, h, 1, 0.0);
  double sum = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!wf.valid(x, y)) continue;
      const Eigen::Vector3d& Y = wf.points(x, y);
      const double range = kind == DistanceKind::PlanarDepth ? Y.z() : Y.norm();
      diff(x, y) = range - bilinear_value(depth_b, 0, wf.coords(x, y));
      out.map(x, y) = std::abs(diff(x, y));
      sum += out.map(x, y);
    }
  }
  const double n = static_cast<double>(w) * h;
  out.loss = sum / n;
  if (!wants_gradient(sink)) return out;

  Grid<Eigen::Vector2d> grad_coords(w, h, 1, Eigen::Vector2d::Zero());
  Grid<Eigen::Vector3d> grad_points(w, h, 1, Eigen::Vector3d::Zero());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!wf.valid(x, y)) continue;
      const double s = sign(diff(x, y)) * sink.scale / n;
      if (s == 0.0) continue;
      const Eigen::Vector3d& Y = wf.points(x, y);
      grad_points(x, y) = kind == DistanceKind::PlanarDepth ? Eigen::Vector3d(0.0, 0.0, s) : Eigen::Vector3d(s * Y / Y.norm());
      const Eigen::Vector2d& q = wf.coords(x, y);
      grad_coords(x, y) = -s * bilinear_gradient(depth_b, 0, q);
      if (sink.other_depth) {
        const auto st = bilinear_stencil(q, depth_b.width(), depth_b.height());
        Grid<double>& gb = *sink.other_depth;
        gb(st.x0, st.y0) -= s * (1.0 - st.fx) * (1.0 - st.fy);
        gb(st.x0 + 1, st.y0) -= s * st.fx * (1.0 - st.fy);
        gb(st.x0, st.y0 + 1) -= s * (1.0 - st.fx) * st.fy;
        gb(st.x0 + 1, st.y0 + 1) -= s * st.fx * st.fy;
      }
    }
  }
  wf.backward(rays, depth_a, poses, chain, grad_coords, grad_points, sink.depth, sink.poses);
  return out;
}

SmoothnessResult smoothness_term(const Grid<double>& depth, const ImageBuffer& image, const GradientSink& sink) {
  const int w = depth.width(), h = depth.height(), nc = image.channels();
  if (!image.same_shape(w, h)) throw Error(ErrorCode::DimensionMismatch, "smoothness image vs depth");
  const size_t n = depth.size();
  double mean = 0.0;
  for (size_t i = 0; i < n; ++i) mean += 1.0 / depth[i];
  mean /= static_cast<double>(n);
  if (!(mean > 0.0) || !std::isfinite(mean)) throw Error(ErrorCode::DegenerateDepth, "mean inverse depth");
  Grid<double> dn(w, h, 1, 0.0);
  for (size_t i = 0; i < n; ++i) dn[i] = (1.0 / depth[i]) / mean;

  auto edge = [&](int x0, int y0, int x1, int y1) {
    double g = 0.0;
    for (int c = 0; c < nc; ++c) g += std::abs(image(x1, y1, c) - image(x0, y0, c));
    return std::exp(-g / nc);
  };
  const double nx = static_cast<double>(w - 1) * h, ny = static_cast<double>(h - 1) * w;
  SmoothnessResult out{0.0, Grid<double>(w, h, 1, 0.0)};
  Grid<double> gdn;
  const bool grad = wants_gradient(sink) && sink.depth;
  if (grad) gdn = Grid<double>(w, h, 1, 0.0);
  double lx = 0.0, ly = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) {
        const double d = dn(x + 1, y) - dn(x, y), e = edge(x, y, x + 1, y);
        lx += std::abs(d) * e;
        out.map(x, y) += std::abs(d) * e / nx;
        if (grad) {
          gdn(x + 1, y) += sign(d) * e / nx;
          gdn(x, y) -= sign(d) * e / nx;
        }
      }
      if (y + 1 < h) {
        const double d = dn(x, y + 1) - dn(x, y), e = edge(x, y, x, y + 1);
        ly += std::abs(d) * e;
        out.map(x, y) += std::abs(d) * e / ny;
        if (grad) {
          gdn(x, y + 1) += sign(d) * e / ny;
          gdn(x, y) -= sign(d) * e / ny;
        }
      }
    }
  }
  out.loss = (w > 1 ? lx / nx : 0.0) + (h > 1 ? ly / ny : 0.0);
  if (!grad) return out;
  // dn_i = z_i / mean(z), z = 1 / D.
  double dot = 0.0;
  for (size_t i = 0; i < n; ++i) dot += gdn[i] * dn[i];
  for (size_t i = 0; i < n; ++i) {
    const double dz = (gdn[i] - dot / static_cast<double>(n)) / mean;
    (*sink.depth)[i] += sink.scale * dz * (-1.0 / (depth[i] * depth[i]));
  }
  return out;
}

}  // namespace rawdepth
