#include "rawdepth/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rawdepth/losses.hpp"
#include "rawdepth/parallel.hpp"
#include "rawdepth/warp.hpp"

namespace rawdepth {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice(std::uint64_t seed, long long i, long long j) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ static_cast<std::uint64_t>(i));
  h = splitmix(h ^ static_cast<std::uint64_t>(j));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double value_noise(std::uint64_t seed, double u, double v) {
  const double fu = std::floor(u), fv = std::floor(v);
  const long long i = static_cast<long long>(fu), j = static_cast<long long>(fv);
  const double su = fade(u - fu), sv = fade(v - fv);
  const double a = lattice(seed, i, j), b = lattice(seed, i + 1, j);
  const double c = lattice(seed, i, j + 1), d = lattice(seed, i + 1, j + 1);
  return (1.0 - sv) * ((1.0 - su) * a + su * b) + sv * ((1.0 - su) * c + su * d);
}

}  // namespace

double Texture::value(double u, double v, int c) const {
  double n = 0.0;
  switch (kind) {
    case Kind::Checker: {
      const long long k = static_cast<long long>(std::floor(u / period)) + static_cast<long long>(std::floor(v / period));
      n = (k % 2 == 0) ? 1.0 : 0.0;
      break;
    }
    case Kind::Noise: {
      const std::uint64_t s = seed + 7919ULL * static_cast<std::uint64_t>(c);
      n = (2.0 * value_noise(s, u / period, v / period) + value_noise(s ^ 0x5bd1e995ULL, 2.0 * u / period + 17.3, 2.0 * v / period - 4.1)) / 3.0;
      break;
    }
    case Kind::Sinusoid: {
      const double two_pi = 2.0 * std::numbers::pi;
      const double phase = 0.9 * c + 0.1 * static_cast<double>(seed % 97);
      n = 0.5 + 0.25 * std::sin(two_pi * u / period + phase) +
          0.25 * std::sin(two_pi * (0.6 * u + 0.8 * v) / (1.37 * period) + 2.0 * phase);
      break;
    }
  }
  return low + (high - low) * n;
}

void SyntheticScene::validate() const {
  if (primitives.empty()) throw Error(ErrorCode::EmptyInput, "scene primitives");
  if (channels != 1 && channels != 3) throw Error(ErrorCode::InvalidParameter, "channels");
  for (const auto& p : primitives) {
    if (!(p.texture.period > 0.0)) throw Error(ErrorCode::InvalidParameter, "period");
    if (p.kind == Primitive::Kind::Sphere && !(p.radius > 0.0)) throw Error(ErrorCode::InvalidParameter, "radius");
  }
}

Se3Transform relative_pose(const Se3Transform& camera_to_world_a, const Se3Transform& camera_to_world_b) {
  return compose(inverse(camera_to_world_b), camera_to_world_a);
}

RenderResult render(const SyntheticScene& scene, const CameraModel& cam, const Se3Transform& camera_to_world) {
  scene.validate();
  const int w = cam.width(), h = cam.height(), nc = scene.channels;
  const RayGrid rays = compute_rays(cam, DistanceKind::EuclideanDistance);
  const Eigen::Matrix3d Rc = camera_to_world.rotation_matrix();
  const Eigen::Vector3d origin = camera_to_world.translation;
  struct Prepared {
    Eigen::Matrix3d R;
    Eigen::Vector3d c;
  };
  std::vector<Prepared> prep;
  for (const auto& p : scene.primitives) prep.push_back({p.pose.rotation_matrix(), p.pose.translation});

  RenderResult out{ImageBuffer(w, h, nc, scene.background), DepthMap(w, h, 0.0, cam.distance_kind()),
                   Mask(w, h, 1, 0)};
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      if (!rays.valid(x, y)) continue;
      const Eigen::Vector3d v = rays.rays(x, y);
      const Eigen::Vector3d d = Rc * v;
      double best = std::numeric_limits<double>::infinity();
      int best_k = -1;
      Eigen::Vector2d best_uv;
      for (size_t k = 0; k < scene.primitives.size(); ++k) {
        const Primitive& p = scene.primitives[k];
        const Prepared& pp = prep[k];
        if (p.kind == Primitive::Kind::Plane) {
          const Eigen::Vector3d n = pp.R.col(2);
          const double denom = n.dot(d);
          if (std::abs(denom) < 1e-12) continue;
          const double t = n.dot(pp.c - origin) / denom;
          if (!(t > 1e-9) || t >= best) continue;
          const Eigen::Vector3d local = pp.R.transpose() * (origin + t * d - pp.c);
          if (p.size.x() > 0.0 && std::abs(local.x()) > 0.5 * p.size.x()) continue;
          if (p.size.y() > 0.0 && std::abs(local.y()) > 0.5 * p.size.y()) continue;
          best = t;
          best_k = static_cast<int>(k);
          best_uv = local.head<2>();
        } else {
          const Eigen::Vector3d oc = origin - pp.c;
          const double b = oc.dot(d), c = oc.squaredNorm() - p.radius * p.radius;
          const double disc = b * b - c;
          if (disc < 0.0) continue;
          const double sq = std::sqrt(disc);
          double t = -b - sq;
          if (!(t > 1e-9)) t = -b + sq;
          if (!(t > 1e-9) || t >= best) continue;
          const Eigen::Vector3d l = pp.R.transpose() * (origin + t * d - pp.c) / p.radius;
          best = t;
          best_k = static_cast<int>(k);
          best_uv = {p.radius * std::atan2(l.x(), l.z()), p.radius * std::asin(std::clamp(l.y(), -1.0, 1.0))};
        }
      }
      if (best_k < 0) continue;
      const Texture& tex = scene.primitives[best_k].texture;
      for (int c = 0; c < nc; ++c) out.image(x, y, c) = tex.value(best_uv.x(), best_uv.y(), c);
      out.depth(x, y) = cam.distance_kind() == DistanceKind::PlanarDepth ? best * v.z() : best;
      out.hit(x, y) = 1;
    }
  });
  return out;
}

ImageBuffer noise_image(int width, int height, int channels, double period_px, std::uint64_t seed) {
  Texture tex;
  tex.kind = Texture::Kind::Noise;
  tex.period = period_px;
  tex.low = 0.0;
  tex.high = 1.0;
  tex.seed = seed;
  ImageBuffer img(width, height, channels, 0.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) img(x, y, c) = tex.value(x, y, c);
    }
  }
  return img;
}

// -- Rectification ------------------------------------------------------------------

CoordinateMap rectification_maps(const CameraModel& src, const PinholeIntrinsics& dst) {
  dst.validate();
  CoordinateMap out(dst.width, dst.height);
  const int sw = src.width(), sh = src.height();
  parallel_rows(dst.height, [&](int y) {
    for (int x = 0; x < dst.width; ++x) {
      const Eigen::Vector3d ray((x - dst.cx) / dst.fx, (y - dst.cy) / dst.fy, 1.0);
      const auto q = try_project(src, ray);
      if (!q || !inside_sampling_domain(*q, sw, sh)) continue;
      out.coords(x, y) = snap_to_grid(*q);
      out.valid(x, y) = 1;
    }
  });
  return out;
}

CropRect largest_valid_rectangle(const Mask& valid, int px, int py) {
  const int w = valid.width(), h = valid.height();
  CropRect best;
  if (px < 0 || py < 0 || px >= w || py >= h || !valid(px, py)) return best;
  // Runs of valid pixels above / below the principal row per column.
  std::vector<int> up(w, 0), down(w, 0);
  for (int x = 0; x < w; ++x) {
    if (!valid(x, py)) continue;
    int u = 0;
    while (py - u >= 0 && valid(x, py - u)) ++u;
    int d = 0;
    while (py + d < h && valid(x, py + d)) ++d;
    up[x] = u;
    down[x] = d;
  }
  long long best_area = 0;
  int min_up_l = up[px], min_down_l = down[px];
  for (int x0 = px; x0 >= 0 && up[x0] > 0; --x0) {
    min_up_l = std::min(min_up_l, up[x0]);
    min_down_l = std::min(min_down_l, down[x0]);
    int mu = min_up_l, md = min_down_l;
    for (int x1 = px; x1 < w && up[x1] > 0; ++x1) {
      mu = std::min(mu, up[x1]);
      md = std::min(md, down[x1]);
      const long long area = static_cast<long long>(x1 - x0 + 1) * (mu + md - 1);
      if (area > best_area) {
        best_area = area;
        best = {x0, py - mu + 1, x1, py + md - 1};
      }
    }
  }
  return best;
}

PinholeIntrinsics rectified_canvas(const CameraModel& src, std::optional<double> target_hfov_rad) {
  if (!target_hfov_rad && src.is_fisheye()) target_hfov_rad = 120.0 * std::numbers::pi / 180.0;
  PinholeIntrinsics out;
  if (target_hfov_rad) {
    const double hfov = *target_hfov_rad;
    if (!(hfov > 0.0 && hfov < std::numbers::pi)) throw Error(ErrorCode::InvalidParameter, "target_fov");
    out.width = src.width();
    out.height = src.height();
    out.fx = out.fy = (0.5 * src.width()) / std::tan(0.5 * hfov);
    out.cx = src.center().x();
    out.cy = src.center().y();
    return out;
  }
  const PinholeIntrinsics& k = src.brown_conrady()->intrinsics;
  double minx = std::numeric_limits<double>::infinity(), maxx = -minx, miny = minx, maxy = -minx;
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      const auto v = try_ray(src, Eigen::Vector2d(x, y), DistanceKind::PlanarDepth);
      if (!v) continue;
      const double u = k.fx * v->x() + k.cx, w = k.fy * v->y() + k.cy;
      minx = std::min(minx, u);
      maxx = std::max(maxx, u);
      miny = std::min(miny, w);
      maxy = std::max(maxy, w);
    }
  }
  if (!std::isfinite(minx)) throw Error(ErrorCode::NoValidPixels, "rectified canvas");
  const double ox = std::floor(minx), oy = std::floor(miny);
  out.fx = k.fx;
  out.fy = k.fy;
  out.cx = k.cx - ox;
  out.cy = k.cy - oy;
  out.width = static_cast<int>(std::ceil(maxx) - ox) + 1;
  out.height = static_cast<int>(std::ceil(maxy) - oy) + 1;
  return out;
}

RectificationReport fov_loss(const CameraModel& src, std::optional<double> target_hfov_rad, std::uint64_t seed) {
  const PinholeIntrinsics canvas = rectified_canvas(src, target_hfov_rad);
  const CoordinateMap map = rectification_maps(src, canvas);
  RectificationReport rep;
  rep.raw_width = src.width();
  rep.raw_height = src.height();
  rep.canvas_width = canvas.width;
  rep.canvas_height = canvas.height;
  rep.crop = largest_valid_rectangle(map.valid, static_cast<int>(std::lround(canvas.cx)),
                                     static_cast<int>(std::lround(canvas.cy)));

  long long valid_rect = 0;
  for (size_t i = 0; i < map.valid.size(); ++i) valid_rect += map.valid[i];
  rep.rectified_area_loss_fraction =
      valid_rect > 0 ? 1.0 - static_cast<double>(rep.crop.area()) / static_cast<double>(valid_rect) : 1.0;

  const double bx0 = rep.crop.x0 - 0.5, bx1 = rep.crop.x1 + 0.5;
  const double by0 = rep.crop.y0 - 0.5, by1 = rep.crop.y1 + 0.5;
  std::vector<long long> valid_rows(src.height(), 0), kept_rows(src.height(), 0);
  parallel_rows(src.height(), [&](int y) {
    for (int x = 0; x < src.width(); ++x) {
      const auto v = try_ray(src, Eigen::Vector2d(x, y), DistanceKind::EuclideanDistance);
      if (!v) continue;
      ++valid_rows[y];
      if (!(v->z() > 1e-12) || rep.crop.area() == 0) continue;
      const double u = canvas.fx * v->x() / v->z() + canvas.cx;
      const double w = canvas.fy * v->y() / v->z() + canvas.cy;
      if (u >= bx0 && u <= bx1 && w >= by0 && w <= by1) ++kept_rows[y];
    }
  });
  for (int y = 0; y < src.height(); ++y) {
    rep.valid_raw_pixels += valid_rows[y];
    rep.retained_raw_pixels += kept_rows[y];
  }
  rep.info_loss_fraction = rep.valid_raw_pixels > 0
                               ? 1.0 - static_cast<double>(rep.retained_raw_pixels) / rep.valid_raw_pixels
                               : 1.0;

  const ImageBuffer img = noise_image(src.width(), src.height(), 1, 4.0, seed);
  const ResamplingReport rs = resampling_distortion(img, src, canvas);
  rep.resampling_psnr = rs.psnr;
  rep.resampling_ssim = rs.ssim;
  return rep;
}

double psnr(double mse) {
  if (mse <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

/// PSNR overall and per region plus mean SSIM of a against b over mask.
ResamplingReport compare_regions(const ImageBuffer& a, const ImageBuffer& b, const Mask& mask,
                                 const Eigen::Vector2d& center) {
  const int w = a.width(), h = a.height(), nc = a.channels();
  ResamplingReport rep;
  double rmax = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask(x, y)) rmax = std::max(rmax, (Eigen::Vector2d(x, y) - center).norm());
    }
  }
  double se = 0.0, se_c = 0.0, se_p = 0.0;
  long long n = 0, n_c = 0, n_p = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      double e = 0.0;
      for (int c = 0; c < nc; ++c) e += (a(x, y, c) - b(x, y, c)) * (a(x, y, c) - b(x, y, c));
      e /= nc;
      se += e;
      ++n;
      if ((Eigen::Vector2d(x, y) - center).norm() < 0.5 * rmax) {
        se_c += e;
        ++n_c;
      } else {
        se_p += e;
        ++n_p;
      }
    }
  }
  rep.pixels = n;
  if (n == 0) throw Error(ErrorCode::NoValidPixels, "region comparison");
  rep.psnr = psnr(se / n);
  if (n_c > 0) rep.psnr_center = psnr(se_c / n_c);
  if (n_p > 0) rep.psnr_periphery = psnr(se_p / n_p);

  Mask win;
  const Grid<double> s = ssim_map(a, b, mask, &win);
  double acc = 0.0;
  long long m = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!win(x, y)) continue;
      for (int c = 0; c < nc; ++c) acc += s(x, y, c);
      m += nc;
    }
  }
  rep.ssim = m > 0 ? acc / m : 1.0;
  return rep;
}

}  // namespace

ResamplingReport rectification_fidelity(const ImageBuffer& raw, const CameraModel& src, const PinholeIntrinsics& dst,
                                        const ImageBuffer& reference) {
  if (!raw.same_shape(src.width(), src.height())) throw Error(ErrorCode::DimensionMismatch, "image vs camera");
  if (!reference.same_shape(dst.width, dst.height) || reference.channels() != raw.channels()) {
    throw Error(ErrorCode::DimensionMismatch, "reference vs rectified canvas");
  }
  const SampledImage rect = bilinear_sample(raw, rectification_maps(src, dst));
  return compare_regions(rect.image, reference, rect.mask, {dst.cx, dst.cy});
}

ResamplingReport resampling_distortion(const ImageBuffer& img, const CameraModel& src, const PinholeIntrinsics& dst) {
  if (!img.same_shape(src.width(), src.height())) throw Error(ErrorCode::DimensionMismatch, "image vs camera");
  const int w = img.width(), h = img.height(), nc = img.channels();
  const CoordinateMap fwd = rectification_maps(src, dst);
  const SampledImage rect = bilinear_sample(img, fwd);

  ImageBuffer back(w, h, nc, 0.0);
  Mask both(w, h, 1, 0);
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const auto v = try_ray(src, Eigen::Vector2d(x, y), DistanceKind::EuclideanDistance);
      if (!v || !(v->z() > 1e-12)) continue;
      const Eigen::Vector2d q = snap_to_grid({dst.fx * v->x() / v->z() + dst.cx, dst.fy * v->y() / v->z() + dst.cy});
      if (!inside_sampling_domain(q, dst.width, dst.height)) continue;
      const auto s = bilinear_stencil(q, dst.width, dst.height);
      if (!rect.mask(s.x0, s.y0) || !rect.mask(s.x0 + 1, s.y0) || !rect.mask(s.x0, s.y0 + 1) ||
          !rect.mask(s.x0 + 1, s.y0 + 1)) {
        continue;
      }
      for (int c = 0; c < nc; ++c) back(x, y, c) = bilinear_value(rect.image, c, q);
      both(x, y) = 1;
    }
  });

  return compare_regions(img, back, both, src.center());
}

}  // namespace rawdepth
