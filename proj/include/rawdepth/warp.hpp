#pragma once

#include <Eigen/Core>

#include "rawdepth/camera.hpp"
#include "rawdepth/image.hpp"
#include "rawdepth/se3.hpp"

namespace rawdepth {

/// Per-pixel 3D points in the camera frame.
struct PointCloud {
  Grid<Eigen::Vector3d> points;
  Mask valid;
  DistanceKind kind = DistanceKind::PlanarDepth;
};

/// Per-pixel rays v with unproject(p, d) = d * v.
struct RayGrid {
  Grid<Eigen::Vector3d> rays;
  Mask valid;
};

RayGrid compute_rays(const CameraModel& cam, DistanceKind kind);

/// Unprojects every pixel with its own range. Pixels outside the camera's
/// unprojection domain are flagged invalid instead of failing the map.
PointCloud unproject_map(const CameraModel& cam, const DepthMap& depth);

struct Reprojection {
  CoordinateMap coords;
  EgoMask mask;
  /// Range of each transformed point in the point cloud's distance kind:
  /// z for PlanarDepth, norm for EuclideanDistance.
  DepthMap transformed_range;
};

/// Moves the cloud by T and projects it into cam. The mask is 0 where the
/// point is outside the projection domain or lands outside [0, W-1] x [0, H-1].
Reprojection reproject(const PointCloud& cloud, const Se3Transform& T, const CameraModel& cam);

struct SampledImage {
  ImageBuffer image;
  EgoMask mask;
};

/// Bilinear backward sampling. Samples whose four neighbours are not all
/// inside the source are 0 with mask 0.
SampledImage bilinear_sample(const ImageBuffer& src, const CoordinateMap& coords);

/// Spatial gradient d value / d(x, y) of the bilinear interpolant of one
/// channel at q (q must be inside the sampling domain).
Eigen::Vector2d bilinear_gradient(const Grid<double>& src, int channel, const Eigen::Vector2d& q);
double bilinear_value(const Grid<double>& src, int channel, const Eigen::Vector2d& q);

struct SynthesizedView {
  ImageBuffer image;
  EgoMask mask;
  Reprojection reprojection;
};

/// Reconstructs the target view by sampling src at the reprojection of the
/// target depth through T (target -> source frame).
SynthesizedView synthesize_view(const ImageBuffer& src, const DepthMap& target_depth, const Se3Transform& T,
                                const CameraModel& cam_target, const CameraModel& cam_src);

}  // namespace rawdepth
