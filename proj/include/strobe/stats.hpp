#pragma once

#include <cmath>
#include <cstdint>

namespace strobe {

/// Welford accumulator; merge() is Chan's parallel update.
struct RunningStats {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }

  void merge(const RunningStats& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(n + o.n);
    const double delta = o.mean - mean;
    mean += delta * static_cast<double>(o.n) / total;
    m2 += o.m2 + delta * delta * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
  }

  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  /// Standard error of the mean; 0 when fewer than two samples.
  double stderr_mean() const { return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

}  // namespace strobe
