#include "rawdepth/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace rawdepth {

int num_threads() {
  if (const char* env = std::getenv("RAWDEPTH_NUM_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_rows(int rows, const std::function<void(int)>& fn) {
  const int workers = std::min(num_threads(), std::max(rows, 1));
  if (workers <= 1 || rows < 16) {
    for (int r = 0; r < rows; ++r) fn(r);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int block = (rows + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int begin = w * block;
    const int end = std::min(rows, begin + block);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] {
      for (int r = begin; r < end; ++r) fn(r);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace rawdepth
