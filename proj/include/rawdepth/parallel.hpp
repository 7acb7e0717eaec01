#pragma once

#include <functional>

namespace rawdepth {

/// Number of worker threads. Honors RAWDEPTH_NUM_THREADS, otherwise the
/// hardware concurrency.
int num_threads();

/// Runs fn(row) for every row in [0, rows). Rows are split into contiguous
/// blocks, so fn must only write state owned by its row.
void parallel_rows(int rows, const std::function<void(int)>& fn);

}  // namespace rawdepth
