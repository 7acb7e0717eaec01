#include <random>

#include "common.hpp"
#include "rawdepth/losses.hpp"
#include "rawdepth/optimizer.hpp"
#include "rawdepth/warp.hpp"

using namespace rawdepth;
using namespace rawdepth::test;

namespace {

double constant_ssim(double a, double b) { return (2 * a * b + kSsimC1) / (a * a + b * b + kSsimC1); }

ImageBuffer random_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageBuffer img(w, h);
  for (size_t i = 0; i < img.size(); ++i) img[i] = u(rng);
  return img;
}

/// Rendered 3-frame snippet with GT depth pyramids (bilinear resize per scale).
SnippetInputs rendered_snippet(const CameraModel& cam, const SyntheticScene& sc, const Se3Transform& c0,
                               const Se3Transform& c2, int scales = 4) {
  const Se3Transform c1 = Se3Transform::identity();
  const RenderResult r[3] = {render(sc, cam, c0), render(sc, cam, c1), render(sc, cam, c2)};
  SnippetInputs in;
  for (int k = 0; k < 3; ++k) {
    in.images[k] = r[k].image;
    for (int s = 0; s < scales; ++s) {
      const int w = (cam.width() + (1 << s) - 1) >> s, h = (cam.height() + (1 << s) - 1) >> s;
      in.depths[k].push_back(DepthMap(resize_bilinear(r[k].depth.values, w, h), cam.distance_kind()));
    }
  }
  in.target_to_prev = relative_pose(c1, c0);
  in.target_to_next = relative_pose(c1, c2);
  return in;
}

}  // namespace

TEST(LossWeights, DefaultsAndValidation) {
  const LossWeights w;
  EXPECT_EQ(w.omega, 0.85);
  EXPECT_EQ(w.beta_smooth, 0.001);
  EXPECT_EQ(w.gamma_dc, 0.001);
  EXPECT_EQ(w.clip_percentile, 0.95);
  EXPECT_EQ(w.num_scales, 4);
  LossWeights bad = w;
  bad.omega = 1.1;
  expect_invalid("omega", [&] { bad.validate(); });
  bad = w;
  bad.clip_percentile = 0.0;
  expect_invalid("clip_percentile", [&] { bad.validate(); });
  bad = w;
  bad.num_scales = 0;
  expect_invalid("num_scales", [&] { bad.validate(); });
  bad = w;
  bad.gamma_dc = -1;
  expect_invalid("gamma_dc", [&] { bad.validate(); });
}

TEST(SigmoidDepth, Examples) {
  const auto pin = SigmoidDepthParams::make(SigmoidDepthParams::Kind::PinholeReciprocal, 0.1, 100.0);
  EXPECT_NEAR(pin.y, 0.01, 1e-15);
  EXPECT_NEAR(pin.x, 9.99, 1e-13);
  Grid<double> s(3, 1);
  s[0] = 0.0;
  s[1] = 0.5;
  s[2] = 1.0;
  const DepthMap dp = sigmoid_to_depth(s, pin);
  EXPECT_NEAR(dp.values[0], 100.0, 1e-10);
  EXPECT_NEAR(dp.values[2], 0.1, 1e-12);
  EXPECT_GT(dp.values[0], dp.values[1]);
  EXPECT_GT(dp.values[1], dp.values[2]);

  const auto fish = SigmoidDepthParams::make(SigmoidDepthParams::Kind::FisheyeAffine, 0.1, 100.0);
  EXPECT_NEAR(fish.y, 0.1, 1e-15);
  EXPECT_NEAR(fish.x, 99.9, 1e-12);
  const DepthMap df = sigmoid_to_depth(s, fish, DistanceKind::EuclideanDistance);
  EXPECT_NEAR(df.values[1], 50.05, 1e-12);
  EXPECT_LT(df.values[0], df.values[1]);
  EXPECT_LT(df.values[1], df.values[2]);
  expect_invalid("d_min", [] { SigmoidDepthParams::make(SigmoidDepthParams::Kind::FisheyeAffine, 1.0, 0.5); });
}

TEST(Ssim, IdentityConstantAndSymmetry) {
  const ImageBuffer a = random_image(9, 7, 1), b = random_image(9, 7, 2);
  const Grid<double> same = ssim_map(a, a, Mask{});
  for (size_t i = 0; i < same.size(); ++i) EXPECT_NEAR(same[i], 1.0, 1e-12);
  const Grid<double> ab = ssim_map(a, b, Mask{}), ba = ssim_map(b, a, Mask{});
  for (size_t i = 0; i < ab.size(); ++i) {
    EXPECT_NEAR(ab[i], ba[i], 1e-15);
    EXPECT_LE(ab[i], 1.0 + 1e-12);
    EXPECT_GE(ab[i], -1.0 - 1e-12);
  }
  const ImageBuffer c5(6, 6, 1, 0.5), c6(6, 6, 1, 0.6);
  const Grid<double> cc = ssim_map(c5, c6, Mask{});
  const double expect = (2 * 0.5 * 0.6 + kSsimC1) * kSsimC2 / ((0.25 + 0.36 + kSsimC1) * kSsimC2);
  for (size_t i = 0; i < cc.size(); ++i) EXPECT_NEAR(cc[i], expect, 1e-12);
}

TEST(Ssim, WindowsTouchingMaskedPixelsAreExcluded) {
  const ImageBuffer a = random_image(8, 8, 3), b = random_image(8, 8, 4);
  Mask m(8, 8, 1, 1);
  m(4, 4) = 0;
  Mask valid;
  ssim_map(a, b, m, &valid);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      const bool near_hole = std::abs(x - 4) <= 1 && std::abs(y - 4) <= 1;
      EXPECT_EQ(valid(x, y), near_hole ? 0 : 1);
    }
  }
}

TEST(Photometric, Examples) {
  const ImageBuffer a = random_image(8, 6, 5), b = random_image(8, 6, 6);
  const PhotometricMap zero = photometric_loss(a, a, Mask(8, 6, 1, 1), 0.85);
  for (size_t i = 0; i < zero.values.size(); ++i) EXPECT_NEAR(zero.values[i], 0.0, 1e-12);

  const PhotometricMap l1 = photometric_loss(a, b, Mask(8, 6, 1, 1), 0.0);
  for (size_t i = 0; i < l1.values.size(); ++i) EXPECT_DOUBLE_EQ(l1.values[i], std::abs(a[i] - b[i]));

  const ImageBuffer c5(6, 6, 1, 0.5), c6(6, 6, 1, 0.6);
  const PhotometricMap pc = photometric_loss(c5, c6, Mask{}, 0.85);
  const double expect = 0.85 * (1 - constant_ssim(0.5, 0.6)) / 2 + 0.15 * 0.1;
  for (size_t i = 0; i < pc.values.size(); ++i) EXPECT_NEAR(pc.values[i], expect, 1e-12);

  Mask m(8, 6, 1, 1);
  m(0, 0) = 0;
  const PhotometricMap masked = photometric_loss(a, b, m, 0.85);
  EXPECT_EQ(masked.values(0, 0), 0.0);
  EXPECT_EQ(masked.valid(1, 1), 0);
  EXPECT_EQ(masked.valid(2, 2), 1);
  expect_error(ErrorCode::DimensionMismatch, [&] { photometric_loss(a, random_image(7, 6, 1), Mask{}, 0.85); });
}

TEST(MinReconstruction, Examples) {
  const ImageBuffer t = random_image(8, 6, 7);
  const PhotometricMap a = photometric_loss(t, random_image(8, 6, 8), Mask{}, 0.85);
  const PhotometricMap b = photometric_loss(t, random_image(8, 6, 9), Mask{}, 0.85);
  const std::vector<PhotometricMap> one{a};
  EXPECT_EQ(min_reconstruction(one).values, a.values);
  const std::vector<PhotometricMap> two{a, b};
  const MinReconstruction m = min_reconstruction(two);
  for (size_t i = 0; i < m.values.size(); ++i) {
    EXPECT_LE(m.values[i], a.values[i]);
    EXPECT_LE(m.values[i], b.values[i]);
  }
  PhotometricMap z{Grid<double>(8, 6, 1, 0.0), Mask(8, 6, 1, 1)};
  const std::vector<PhotometricMap> with_zero{a, z};
  const MinReconstruction mz = min_reconstruction(with_zero);
  for (size_t i = 0; i < mz.values.size(); ++i) EXPECT_EQ(mz.values[i], 0.0);
  PhotometricMap masked = a;
  masked.valid(3, 3) = 0;
  PhotometricMap masked2 = b;
  masked2.valid(3, 3) = 0;
  const std::vector<PhotometricMap> both{masked, masked2};
  EXPECT_EQ(min_reconstruction(both).valid(3, 3), 0);
  expect_error(ErrorCode::EmptyInput, [] { min_reconstruction({}); });
}

TEST(PercentileClip, NearestRankHandExample) {
  Grid<double> v(10, 10);
  std::vector<int> order(100);
  for (int i = 0; i < 100; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), std::mt19937_64(1));
  for (int i = 0; i < 100; ++i) v[order[i]] = i + 1.0;
  const ClippedMap c = percentile_clip(v, Mask(10, 10, 1, 1), 0.95);
  EXPECT_EQ(c.threshold, 95.0);
  for (size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(c.values[i], std::min(v[i], 95.0));
    EXPECT_LE(c.values[i], v[i]);
  }
  const ClippedMap flat = percentile_clip(Grid<double>(5, 5, 1, 0.3), Mask(5, 5, 1, 1));
  for (size_t i = 0; i < flat.values.size(); ++i) EXPECT_EQ(flat.values[i], 0.3);
  expect_error(ErrorCode::NoValidPixels, [&] { percentile_clip(v, Mask(10, 10, 1, 0)); });
}

TEST(PercentileClip, OnlyValidPixelsCount) {
  Grid<double> v(4, 1);
  v[0] = 1;
  v[1] = 2;
  v[2] = 100;
  v[3] = 3;
  Mask m(4, 1, 1, 1);
  m[2] = 0;
  const ClippedMap c = percentile_clip(v, m, 0.5);
  EXPECT_EQ(c.threshold, 2.0);
  EXPECT_EQ(c.values[3], 2.0);
}

TEST(StaticMask, Examples) {
  const ImageBuffer t = random_image(10, 8, 11);
  const ImageBuffer other = random_image(10, 8, 12);
  const Mask full(10, 8, 1, 1);
  const std::vector<ImageBuffer> same{t};
  const std::vector<ImageBuffer> recon{other};
  const std::vector<Mask> masks{full};
  const Mask none = static_pixel_mask(t, same, recon, masks, 0.85);
  for (size_t i = 0; i < none.size(); ++i) EXPECT_EQ(none[i], 0);

  const std::vector<ImageBuffer> differ{other};
  const std::vector<ImageBuffer> exact{t};
  const Mask all = static_pixel_mask(t, differ, exact, masks, 0.85);
  for (size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], 1);
}

TEST(StaticMask, DenseOnMovingTexturedScene) {
  const CameraModel cam = pinhole(96, 72, 75.0);
  const SnippetInputs in = rendered_snippet(cam, plane_sphere_scene(0.4), translation(-0.3, 0, 0),
                                            translation(0.3, 0, 0.2), 1);
  LossWeights w;
  w.num_scales = 1;
  const LossBreakdown b = total_loss(in, cam, w);
  double density = 0.0, valid = 0.0;
  for (size_t i = 0; i < b.static_mask.size(); ++i) {
    const bool any_ego = b.ego_masks[0][i] || b.ego_masks[1][i];
    valid += any_ego;
    density += b.static_mask[i];
  }
  EXPECT_GT(density / valid, 0.9);
}

TEST(Smoothness, Examples) {
  const ImageBuffer img = random_image(12, 9, 13);
  EXPECT_EQ(smoothness_loss(DepthMap(12, 9, 3.0, DistanceKind::PlanarDepth), img), 0.0);
  DepthMap d(12, 9, 1.0, DistanceKind::PlanarDepth);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(1.0, 8.0);
  for (size_t i = 0; i < d.values.size(); ++i) d.values[i] = u(rng);
  const double base = smoothness_loss(d, img);
  EXPECT_GT(base, 0.0);
  for (double c : {0.1, 1.0, 10.0}) {
    DepthMap s = d;
    for (size_t i = 0; i < s.values.size(); ++i) s.values[i] *= c;
    EXPECT_NEAR(smoothness_loss(s, img), base, 1e-12);
  }
  DepthMap zero = d;
  zero.values[0] = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < zero.values.size(); ++i) zero.values[i] = std::numeric_limits<double>::infinity();
  expect_error(ErrorCode::DegenerateDepth, [&] { smoothness_loss(zero, img); });
}

TEST(Smoothness, AlignedEdgesCostLess) {
  DepthMap d(16, 8, 1.0, DistanceKind::PlanarDepth);
  ImageBuffer aligned(16, 8, 1, 0.2), misaligned(16, 8, 1, 0.2);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 16; ++x) {
      if (x >= 8) {
        d(x, y) = 2.0;
        aligned(x, y) = 0.9;
      }
      if (x >= 3) misaligned(x, y) = 0.9;
    }
  }
  EXPECT_LT(smoothness_loss(d, aligned), smoothness_loss(d, misaligned));
}

TEST(Consistency, Examples) {
  const CameraModel cam = pinhole(64, 48, 40.0);
  const std::vector<DepthMap> same{DepthMap(64, 48, 3.0, DistanceKind::PlanarDepth),
                                   DepthMap(64, 48, 3.0, DistanceKind::PlanarDepth)};
  const std::vector<PairPose> ident{{0, 1, Se3Transform::identity()}};
  EXPECT_EQ(cross_sequence_consistency(same, ident, cam), 0.0);

  // plane at 5 m, second camera 1 m closer
  std::vector<DepthMap> gt{DepthMap(64, 48, 5.0, DistanceKind::PlanarDepth),
                           DepthMap(64, 48, 4.0, DistanceKind::PlanarDepth)};
  const std::vector<PairPose> fwd{{0, 1, translation(0, 0, -1.0)}};
  const double base = cross_sequence_consistency(gt, fwd, cam);
  EXPECT_LT(base, 1e-3);
  gt[1] = DepthMap(64, 48, 4.4, DistanceKind::PlanarDepth);
  EXPECT_GT(cross_sequence_consistency(gt, fwd, cam), base);
}

TEST(Consistency, FisheyeDistanceSemantics) {
  const CameraModel cam(FisheyeModel(EucmRadial{80.0, 0.6, 1.1}, 63.5, 47.5, 128, 96));
  const SyntheticScene sc = plane_scene(5.0, 0.5);
  const Se3Transform c0 = Se3Transform::identity(), c1 = translation(0.2, 0.0, 0.5);
  const std::vector<DepthMap> gt{render(sc, cam, c0).depth, render(sc, cam, c1).depth};
  const std::vector<PairPose> p{{0, 1, relative_pose(c0, c1)}};
  EXPECT_LT(cross_sequence_consistency(gt, p, cam), 1e-3);
}

TEST(TotalLoss, GroundTruthIsSmallAndFinite) {
  const CameraModel cam = pinhole(128, 96, 100.0);
  const SnippetInputs in = rendered_snippet(cam, plane_sphere_scene(0.4), translation(-0.3, 0, 0),
                                            translation(0.3, 0, 0.2));
  const LossBreakdown b = total_loss(in, cam, LossWeights{});
  EXPECT_LT(b.total, 0.01);
  for (double v : {b.reconstruction_fwd, b.reconstruction_bwd, b.consistency, b.smoothness, b.total}) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
  }
  ASSERT_EQ(b.scales.size(), 4u);
  double total = 0.0;
  for (size_t n = 0; n < 4; ++n) {
    EXPECT_EQ(b.scales[n].weight, 1.0 / (1 << n));
    total += b.scales[n].combined * b.scales[n].weight;
  }
  EXPECT_NEAR(b.total, total, 1e-15);
}

TEST(TotalLoss, ZeroAuxWeightsLeaveReconstructionOnly) {
  const CameraModel cam = pinhole(48, 36, 40.0);
  const SnippetInputs in = rendered_snippet(cam, plane_sphere_scene(0.4), translation(-0.2, 0, 0),
                                            translation(0.2, 0, 0.1));
  LossWeights w;
  w.beta_smooth = 0.0;
  w.gamma_dc = 0.0;
  const LossBreakdown b = total_loss(in, cam, w);
  EXPECT_NEAR(b.total, b.reconstruction_fwd + b.reconstruction_bwd, 1e-15);
  const LossBreakdown again = total_loss(in, cam, w);
  EXPECT_EQ(to_report(b), to_report(again));
  EXPECT_EQ(b.reconstruction_fwd_map, again.reconstruction_fwd_map);
}

TEST(TotalLoss, MaskedPixelsDoNotMatter) {
  // static mask off: the ego masks alone decide which target pixels count
  const CameraModel cam = pinhole(48, 36, 40.0);
  SnippetInputs in = rendered_snippet(cam, plane_sphere_scene(0.4), translation(0, 0, 0.8),
                                      translation(0.1, 0, 0.9), 1);
  LossWeights w;
  w.num_scales = 1;
  w.terms.static_mask = false;
  const LossBreakdown b = total_loss(in, cam, w);
  int changed = 0;
  for (size_t i = 0; i < b.ego_masks[0].size(); ++i) {
    if (b.ego_masks[0][i] || b.ego_masks[1][i]) continue;
    in.images[1][i] = 1.0 - in.images[1][i];
    ++changed;
  }
  ASSERT_GT(changed, 50);
  const LossBreakdown c = total_loss(in, cam, w);
  EXPECT_EQ(b.reconstruction_fwd, c.reconstruction_fwd);
}

TEST(TotalLoss, AllStaticSnippetHasZeroReconstruction) {
  const CameraModel cam = pinhole(16, 12, 12.0);
  SnippetInputs in;
  for (int k = 0; k < 3; ++k) {
    in.images[k] = random_image(16, 12, 21);
    in.depths[k].push_back(DepthMap(16, 12, 5.0, DistanceKind::PlanarDepth));
  }
  LossWeights w;
  w.num_scales = 1;
  const LossBreakdown b = total_loss(in, cam, w);
  EXPECT_EQ(b.reconstruction_fwd, 0.0);
  EXPECT_EQ(b.reconstruction_bwd, 0.0);
}

TEST(TotalLoss, NoValidPixelsThrows) {
  const CameraModel cam = pinhole(16, 12, 12.0);
  SnippetInputs in;
  for (int k = 0; k < 3; ++k) {
    in.images[k] = random_image(16, 12, 22 + k);
    in.depths[k].push_back(DepthMap(16, 12, 1.0, DistanceKind::PlanarDepth));
  }
  in.target_to_prev = translation(50, 0, 0);
  in.target_to_next = translation(-50, 0, 0);
  LossWeights w;
  w.num_scales = 1;
  expect_error(ErrorCode::NoValidPixels, [&] { total_loss(in, cam, w); });
}

TEST(TotalLoss, DepthGradientAtRandomPixels) {
  const CameraModel cam = pinhole(16, 12, 12.0);
  SnippetInputs in = rendered_snippet(cam, plane_sphere_scene(0.6), translation(-0.3, 0.02, 0.05),
                                      translation(0.3, -0.01, 0.1));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(4.0, 5.5);
  for (auto& frame : in.depths) {
    for (auto& d : frame) {
      for (size_t i = 0; i < d.values.size(); ++i) d.values[i] = u(rng);
    }
  }
  LossWeights w;
  LossGradients g;
  total_loss(in, cam, w, &g);
  std::vector<int> pixels(16 * 12);
  for (int i = 0; i < 16 * 12; ++i) pixels[i] = i;
  std::shuffle(pixels.begin(), pixels.end(), rng);
  pixels.resize(50);
  Eigen::VectorXd p(16 * 12), a(16 * 12);
  for (int i = 0; i < 16 * 12; ++i) {
    p[i] = in.depths[1][0].values[i];
    a[i] = g.depths[1][0][i];
  }
  auto fn = [&](const Eigen::VectorXd& v) {
    SnippetInputs c = in;
    for (int i = 0; i < v.size(); ++i) c.depths[1][0].values[i] = v[i];
    return total_loss(c, cam, w).total;
  };
  EXPECT_LT(finite_diff_check(fn, p, a, 1e-4, pixels).max_relative_error, 1e-3);
}

TEST(TotalLoss, ReportKeys) {
  const CameraModel cam = pinhole(32, 24, 25.0);
  const SnippetInputs in = rendered_snippet(cam, plane_sphere_scene(0.4), translation(-0.2, 0, 0),
                                            translation(0.2, 0, 0), 2);
  LossWeights w;
  w.num_scales = 2;
  const std::string r = to_report(total_loss(in, cam, w));
  for (const char* key : {"reconstruction_fwd=", "reconstruction_bwd=", "consistency=", "smoothness=", "total=",
                          "num_scales=2", "scale1.weight=1\n", "scale2.weight=0.5\n"}) {
    EXPECT_NE(r.find(key), std::string::npos) << key;
  }
}
