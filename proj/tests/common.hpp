#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "rawdepth/camera.hpp"
#include "rawdepth/errors.hpp"
#include "rawdepth/synthetic.hpp"

namespace rawdepth::test {

inline CameraModel pinhole(int w, int h, double f, DistanceKind kind = DistanceKind::PlanarDepth) {
  BrownConradyParams b;
  b.intrinsics = {f, f, (w - 1) / 2.0, (h - 1) / 2.0, w, h};
  return CameraModel(b, kind);
}

inline std::string data_path(const std::string& rel) { return std::string(RAWDEPTH_DATA_DIR) + "/" + rel; }

inline SyntheticScene plane_scene(double z, double period, std::uint64_t seed = 11) {
  SyntheticScene sc;
  Primitive p;
  p.pose.translation = {0, 0, z};
  p.texture.period = period;
  p.texture.seed = seed;
  sc.primitives.push_back(p);
  return sc;
}

inline SyntheticScene plane_sphere_scene(double period) {
  SyntheticScene sc = plane_scene(5.0, period, 1);
  Primitive s;
  s.kind = Primitive::Kind::Sphere;
  s.pose.translation = {0.8, 0.3, 3.5};
  s.radius = 0.7;
  s.texture.period = period;
  s.texture.seed = 5;
  sc.primitives.push_back(s);
  return sc;
}

inline Se3Transform translation(double x, double y, double z) {
  Se3Transform T;
  T.translation = {x, y, z};
  return T;
}

/// Expects fn() to throw rawdepth::Error with the given code.
inline void expect_error(ErrorCode code, const std::function<void()>& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

inline void expect_invalid(const std::string& key, const std::function<void()>& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected InvalidParameter(" << key << ")";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidParameter) << e.what();
    EXPECT_EQ(e.detail(), key);
  }
}

}  // namespace rawdepth::test
