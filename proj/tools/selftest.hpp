#pragma once

#include <string>
#include <vector>

namespace rawdepth::selftest {

struct Check {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool pass = false;
};

/// project(unproject(p, d)) against p for every model on a 64x64 grid and
/// three ranges.
std::vector<Check> roundtrip_suite();

/// Projection Jacobians of every model and total_loss gradients (depth
/// pyramid and both poses) against central differences.
std::vector<Check> gradient_suite();

}  // namespace rawdepth::selftest
