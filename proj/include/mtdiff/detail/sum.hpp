#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>

namespace mtdiff::detail {

// Neumaier compensated summation. Reductions that feed reported values go
// through this in a fixed order, which keeps aggregates bitwise stable no
// matter how the per-item work was scheduled.
class NeumaierSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
    ++count_;
  }

  double value() const { return sum_ + comp_; }
  std::size_t count() const { return count_; }

  std::optional<double> mean() const {
    if (count_ == 0) return std::nullopt;
    return value() / static_cast<double>(count_);
  }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
  std::size_t count_ = 0;
};

inline std::optional<double> mean_of(std::span<const double> xs) {
  NeumaierSum s;
  for (double x : xs) s.add(x);
  return s.mean();
}

}  // namespace mtdiff::detail
