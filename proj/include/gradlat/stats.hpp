#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace gradlat {

struct RunningStats {
  long long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double se_iid() const {
    return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
  }
};

// Autocorrelation-aware standard error of the mean by the method of batch
// means with ~sqrt(n) batches.
inline double batch_means_se(const std::vector<double>& trace) {
  const std::size_t n = trace.size();
  if (n < 4) return 0.0;
  std::size_t nb = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  if (nb < 2) nb = 2;
  const std::size_t len = n / nb;
  RunningStats bm;
  for (std::size_t b = 0; b < nb; ++b) {
    double s = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += trace[i];
    bm.add(s / static_cast<double>(len));
  }
  return std::sqrt(bm.variance() / static_cast<double>(nb));
}

// Effective sample size implied by the batch-means SE.
inline double effective_sample_size(const std::vector<double>& trace) {
  RunningStats rs;
  for (double x : trace) rs.add(x);
  const double se = batch_means_se(trace);
  if (se == 0.0) return static_cast<double>(trace.size());
  return rs.variance() / (se * se);
}

}  // namespace gradlat
