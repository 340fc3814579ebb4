#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ssb {

/// Bad configuration (unknown problem name, malformed dims, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runtime numerical failure (non-finite loss, root finding breakdown, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation point. 1-D problems use y[0] only and keep y[1] == 0.
using Point = std::array<double, 2>;

/// Axis-aligned domain box.
struct Box {
  int dim = 1;
  std::array<double, 2> lo{{0.0, 0.0}};
  std::array<double, 2> hi{{0.0, 0.0}};

  bool contains(const Point& y) const {
    for (int k = 0; k < dim; ++k) {
      if (y[k] < lo[k] || y[k] > hi[k]) return false;
    }
    return true;
  }
  double extent(int axis) const { return hi[axis] - lo[axis]; }
};

/// Deterministic RNG. Uniform doubles are derived from the raw 64-bit
/// stream with an explicit formula so streams are identical across
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 gen_;
};

inline bool all_finite(const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i])) return false;
  }
  return true;
}

/// Runs body(block_index, begin, end) over fixed-size index blocks.
/// Blocks are independent; callers reduce per-block results in block
/// order afterwards, so outcomes do not depend on the thread count.
template <class Body>
void for_each_block(std::size_t n, std::size_t block_size, Body&& body) {
  const std::size_t n_blocks = (n + block_size - 1) / block_size;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (long long b = 0; b < static_cast<long long>(n_blocks); ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * block_size;
    const std::size_t end = std::min(n, begin + block_size);
    body(static_cast<std::size_t>(b), begin, end);
  }
}

inline std::size_t block_count(std::size_t n, std::size_t block_size) {
  return (n + block_size - 1) / block_size;
}

inline void set_thread_count(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace ssb
