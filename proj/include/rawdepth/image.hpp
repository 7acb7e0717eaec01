#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rawdepth/camera.hpp"
#include "rawdepth/errors.hpp"

namespace rawdepth {

/// Row-major H x W x C grid. Element (x, y, c) lives at ((y * W) + x) * C + c.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, int channels = 1, T fill = T{})
      : width_(width), height_(height), channels_(channels),
        data_(static_cast<size_t>(width) * height * channels, fill) {
    if (width < 0 || height < 0 || channels < 1) {
      throw Error(ErrorCode::InvalidParameter, "grid dimensions");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  size_t pixel_count() const noexcept { return static_cast<size_t>(width_) * height_; }
  size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  const T& operator()(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }
  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  size_t index(int x, int y, int c = 0) const noexcept {
    return (static_cast<size_t>(y) * width_ + x) * channels_ + c;
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  bool same_shape(int width, int height) const noexcept {
    return width_ == width && height_ == height;
  }
  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Grid& other) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

/// Intensities in [0, 1]; C is 1 or 3.
using ImageBuffer = Grid<double>;
/// Binary per-pixel validity (0 or 1).
using Mask = Grid<std::uint8_t>;
using EgoMask = Mask;

struct DepthMap {
  Grid<double> values;
  DistanceKind kind = DistanceKind::PlanarDepth;

  DepthMap() = default;
  DepthMap(int width, int height, double fill, DistanceKind k)
      : values(width, height, 1, fill), kind(k) {}
  DepthMap(Grid<double> v, DistanceKind k) : values(std::move(v)), kind(k) {}

  int width() const noexcept { return values.width(); }
  int height() const noexcept { return values.height(); }
  double& operator()(int x, int y) { return values(x, y); }
  double operator()(int x, int y) const { return values(x, y); }
};

/// Continuous source-pixel coordinates per target pixel, plus validity.
struct CoordinateMap {
  Grid<Eigen::Vector2d> coords;
  Mask valid;

  CoordinateMap() = default;
  CoordinateMap(int width, int height)
      : coords(width, height, 1, Eigen::Vector2d::Zero()), valid(width, height, 1, 0) {}
  int width() const noexcept { return coords.width(); }
  int height() const noexcept { return coords.height(); }
};

/// Checks that every value is finite and strictly positive.
void validate_depth(const DepthMap& depth);

/// Rounds coordinates lying within 1e-9 px of an integer onto it, so that
/// projections of pixel centres land exactly on the grid.
inline Eigen::Vector2d snap_to_grid(const Eigen::Vector2d& q) {
  Eigen::Vector2d out = q;
  for (int i = 0; i < 2; ++i) {
    const double r = std::round(q[i]);
    if (std::abs(q[i] - r) < 1e-9) out[i] = r;
  }
  return out;
}

/// True iff the continuous coordinate can be bilinearly sampled with all four
/// neighbours inside a width x height image.
inline bool inside_sampling_domain(const Eigen::Vector2d& q, int width, int height) {
  return q.x() >= 0.0 && q.y() >= 0.0 && q.x() <= width - 1 && q.y() <= height - 1 &&
         width >= 2 && height >= 2;
}

/// Bilinear sampling stencil: the top-left neighbour and fractional offsets.
/// The neighbour index is clamped to W-2 so coordinates exactly on the last
/// row/column still have four in-bounds neighbours.
struct BilinearStencil {
  int x0 = 0;
  int y0 = 0;
  double fx = 0.0;
  double fy = 0.0;
};
BilinearStencil bilinear_stencil(const Eigen::Vector2d& q, int width, int height);

/// Resizes a single-channel grid with half-pixel-centre bilinear
/// interpolation (output pixel x samples input at (x + 0.5) * w_in / w_out - 0.5).
Grid<double> resize_bilinear(const Grid<double>& src, int width, int height);
/// Adjoint of resize_bilinear: maps a gradient on the output grid back to the
/// input grid of size (src_width, src_height).
Grid<double> resize_bilinear_adjoint(const Grid<double>& grad_out, int src_width, int src_height);

/// Box-filter downsampling by an integer factor (partial blocks averaged).
Grid<double> downsample_area(const Grid<double>& src, int factor);

}  // namespace rawdepth
