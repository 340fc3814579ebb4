#pragma once

#include <cmath>
#include <string>

#include "ssb/common.hpp"

namespace ssb {

/// Trainable scalar squashed into an open window (lo, hi) through a
/// sigmoid, so any finite raw value maps to an admissible value. Used for
/// the self-similarity exponent and the advection parameter.
struct WindowedScalar {
  double raw = 0.0;
  double lo = 0.0;
  double hi = 1.0;

  static WindowedScalar midpoint(double lo, double hi) {
    if (!(lo < hi)) throw ConfigError("scalar window needs lo < hi");
    return WindowedScalar{0.0, lo, hi};
  }

  static WindowedScalar at_value(double v, double lo, double hi) {
    if (!(lo < hi)) throw ConfigError("scalar window needs lo < hi");
    if (!(v > lo && v < hi)) throw ConfigError("scalar init outside its window");
    const double u = (v - lo) / (hi - lo);
    return WindowedScalar{std::log(u / (1.0 - u)), lo, hi};
  }

  double value() const { return lo + (hi - lo) * sigmoid(raw); }

  /// d(value)/d(raw); strictly positive.
  double dvalue_draw() const {
    const double s = sigmoid(raw);
    return (hi - lo) * s * (1.0 - s);
  }

  static double sigmoid(double x) {
    if (x >= 0.0) {
      const double e = std::exp(-x);
      return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
  }
};

/// A named problem scalar: either trainable inside a window or held fixed.
struct ScalarSpec {
  std::string name;
  bool trainable = false;
  WindowedScalar window;  // valid when trainable
  double fixed_value = 0.0;

  double value() const { return trainable ? window.value() : fixed_value; }
};

}  // namespace ssb
