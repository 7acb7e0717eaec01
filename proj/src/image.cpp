#include "rawdepth/image.hpp"

#include <algorithm>
#include <cmath>

namespace rawdepth {

void validate_depth(const DepthMap& depth) {
  for (double v : depth.values.data()) {
    if (!std::isfinite(v) || !(v > 0.0)) {
      throw Error(ErrorCode::InvalidParameter, "depth values must be finite and positive");
    }
  }
}

BilinearStencil bilinear_stencil(const Eigen::Vector2d& q, int width, int height) {
  BilinearStencil s;
  s.x0 = std::clamp(static_cast<int>(std::floor(q.x())), 0, width - 2);
  s.y0 = std::clamp(static_cast<int>(std::floor(q.y())), 0, height - 2);
  s.fx = q.x() - s.x0;
  s.fy = q.y() - s.y0;
  return s;
}

namespace {

struct Tap {
  int i0;
  int i1;
  double w;  // weight of i1
};

// Half-pixel-centre source taps along one axis.
std::vector<Tap> resize_taps(int src_len, int dst_len) {
  std::vector<Tap> taps(dst_len);
  const double scale = static_cast<double>(src_len) / dst_len;
  for (int i = 0; i < dst_len; ++i) {
    const double s = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(src_len - 1));
    const int i0 = std::min(static_cast<int>(std::floor(s)), src_len - 1);
    const int i1 = std::min(i0 + 1, src_len - 1);
    taps[i] = {i0, i1, s - i0};
  }
  return taps;
}

}  // namespace

Grid<double> resize_bilinear(const Grid<double>& src, int width, int height) {
  if (src.width() == width && src.height() == height) return src;
  const auto tx = resize_taps(src.width(), width);
  const auto ty = resize_taps(src.height(), height);
  Grid<double> out(width, height, src.channels());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < src.channels(); ++c) {
        const double top = (1.0 - tx[x].w) * src(tx[x].i0, ty[y].i0, c) + tx[x].w * src(tx[x].i1, ty[y].i0, c);
        const double bot = (1.0 - tx[x].w) * src(tx[x].i0, ty[y].i1, c) + tx[x].w * src(tx[x].i1, ty[y].i1, c);
        out(x, y, c) = (1.0 - ty[y].w) * top + ty[y].w * bot;
      }
    }
  }
  return out;
}

Grid<double> resize_bilinear_adjoint(const Grid<double>& grad_out, int src_width, int src_height) {
  if (grad_out.width() == src_width && grad_out.height() == src_height) return grad_out;
  const auto tx = resize_taps(src_width, grad_out.width());
  const auto ty = resize_taps(src_height, grad_out.height());
  Grid<double> out(src_width, src_height, grad_out.channels(), 0.0);
  for (int y = 0; y < grad_out.height(); ++y) {
    for (int x = 0; x < grad_out.width(); ++x) {
      for (int c = 0; c < grad_out.channels(); ++c) {
        const double g = grad_out(x, y, c);
        const double wy1 = ty[y].w, wy0 = 1.0 - wy1;
        const double wx1 = tx[x].w, wx0 = 1.0 - wx1;
        out(tx[x].i0, ty[y].i0, c) += g * wx0 * wy0;
        out(tx[x].i1, ty[y].i0, c) += g * wx1 * wy0;
        out(tx[x].i0, ty[y].i1, c) += g * wx0 * wy1;
        out(tx[x].i1, ty[y].i1, c) += g * wx1 * wy1;
      }
    }
  }
  return out;
}

Grid<double> downsample_area(const Grid<double>& src, int factor) {
  if (factor <= 1) return src;
  const int w = std::max(1, src.width() / factor);
  const int h = std::max(1, src.height() / factor);
  Grid<double> out(w, h, src.channels(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int x1 = (x == w - 1) ? src.width() : (x + 1) * factor;
      const int y1 = (y == h - 1) ? src.height() : (y + 1) * factor;
      for (int c = 0; c < src.channels(); ++c) {
        double sum = 0.0;
        int n = 0;
        for (int yy = y * factor; yy < y1; ++yy) {
          for (int xx = x * factor; xx < x1; ++xx) {
            sum += src(xx, yy, c);
            ++n;
          }
        }
        out(x, y, c) = sum / n;
      }
    }
  }
  return out;
}

}  // namespace rawdepth
