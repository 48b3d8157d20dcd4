#pragma once

#include <cmath>
#include <cstddef>
#include <string>

namespace klsgd {

enum class Verdict { pass, fail, inconclusive };

const char* to_string(Verdict v);

// Welford accumulator for Monte-Carlo means.
class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stddev() const { return std::sqrt(variance()); }
  // Standard error of the mean.
  double se() const { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Half-width multiplier for every Monte-Carlo confidence interval.
inline constexpr double kStandardErrors = 4.0;

}  // namespace klsgd
