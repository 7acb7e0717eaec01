#include "rawdepth/warp.hpp"

#include <cmath>

#include "rawdepth/parallel.hpp"

namespace rawdepth {

RayGrid compute_rays(const CameraModel& cam, DistanceKind kind) {
  const int w = cam.width(), h = cam.height();
  RayGrid out{Grid<Eigen::Vector3d>(w, h, 1, Eigen::Vector3d::Zero()), Mask(w, h, 1, 0)};
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      if (auto v = try_ray(cam, Eigen::Vector2d(x, y), kind)) {
        out.rays(x, y) = *v;
        out.valid(x, y) = 1;
      }
    }
  });
  return out;
}

PointCloud unproject_map(const CameraModel& cam, const DepthMap& depth) {
  if (!depth.values.same_shape(cam.width(), cam.height())) {
    throw Error(ErrorCode::DimensionMismatch, "depth map vs camera");
  }
  const RayGrid rays = compute_rays(cam, depth.kind);
  const int w = cam.width(), h = cam.height();
  PointCloud cloud{Grid<Eigen::Vector3d>(w, h, 1, Eigen::Vector3d::Zero()), Mask(w, h, 1, 0), depth.kind};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d = depth(x, y);
      if (rays.valid(x, y) && d > 0.0 && std::isfinite(d)) {
        cloud.points(x, y) = d * rays.rays(x, y);
        cloud.valid(x, y) = 1;
      }
    }
  }
  return cloud;
}

Reprojection reproject(const PointCloud& cloud, const Se3Transform& T, const CameraModel& cam) {
  const int w = cloud.points.width(), h = cloud.points.height();
  if (!cloud.valid.same_shape(w, h)) throw Error(ErrorCode::DimensionMismatch, "point cloud mask");
  Reprojection out{CoordinateMap(w, h), EgoMask(w, h, 1, 0), DepthMap(w, h, 0.0, cloud.kind)};
  const Eigen::Matrix3d R = T.rotation_matrix();
  const int sw = cam.width(), sh = cam.height();
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      if (!cloud.valid(x, y)) continue;
      const Eigen::Vector3d Y = R * cloud.points(x, y) + T.translation;
      out.transformed_range(x, y) = cloud.kind == DistanceKind::PlanarDepth ? Y.z() : Y.norm();
      const auto proj = try_project(cam, Y);
      if (!proj) continue;
      const Eigen::Vector2d q = snap_to_grid(*proj);
      out.coords.coords(x, y) = q;
      const bool inside = inside_sampling_domain(q, sw, sh);
      out.coords.valid(x, y) = inside ? 1 : 0;
      out.mask(x, y) = inside ? 1 : 0;
    }
  });
  return out;
}

double bilinear_value(const Grid<double>& src, int channel, const Eigen::Vector2d& q) {
  const auto s = bilinear_stencil(q, src.width(), src.height());
  const double v00 = src(s.x0, s.y0, channel), v10 = src(s.x0 + 1, s.y0, channel);
  const double v01 = src(s.x0, s.y0 + 1, channel), v11 = src(s.x0 + 1, s.y0 + 1, channel);
  return (1.0 - s.fy) * ((1.0 - s.fx) * v00 + s.fx * v10) + s.fy * ((1.0 - s.fx) * v01 + s.fx * v11);
}

Eigen::Vector2d bilinear_gradient(const Grid<double>& src, int channel, const Eigen::Vector2d& q) {
  const auto s = bilinear_stencil(q, src.width(), src.height());
  const double v00 = src(s.x0, s.y0, channel), v10 = src(s.x0 + 1, s.y0, channel);
  const double v01 = src(s.x0, s.y0 + 1, channel), v11 = src(s.x0 + 1, s.y0 + 1, channel);
  return {(1.0 - s.fy) * (v10 - v00) + s.fy * (v11 - v01), (1.0 - s.fx) * (v01 - v00) + s.fx * (v11 - v10)};
}

SampledImage bilinear_sample(const ImageBuffer& src, const CoordinateMap& coords) {
  const int w = coords.width(), h = coords.height(), c = src.channels();
  SampledImage out{ImageBuffer(w, h, c, 0.0), EgoMask(w, h, 1, 0)};
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      if (!coords.valid(x, y)) continue;
      const Eigen::Vector2d& q = coords.coords(x, y);
      if (!inside_sampling_domain(q, src.width(), src.height())) continue;
      for (int ch = 0; ch < c; ++ch) out.image(x, y, ch) = bilinear_value(src, ch, q);
      out.mask(x, y) = 1;
    }
  });
  return out;
}

SynthesizedView synthesize_view(const ImageBuffer& src, const DepthMap& target_depth, const Se3Transform& T,
                                const CameraModel& cam_target, const CameraModel& cam_src) {
  if (!src.same_shape(cam_src.width(), cam_src.height())) {
    throw Error(ErrorCode::DimensionMismatch, "source image vs source camera");
  }
  const PointCloud cloud = unproject_map(cam_target, target_depth);
  Reprojection rep = reproject(cloud, T, cam_src);
  SampledImage sampled = bilinear_sample(src, rep.coords);
  SynthesizedView out{std::move(sampled.image), std::move(sampled.mask), std::move(rep)};
  for (size_t i = 0; i < out.mask.size(); ++i) out.mask[i] = out.mask[i] & out.reprojection.mask[i];
  return out;
}

}  // namespace rawdepth
