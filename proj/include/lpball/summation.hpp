#ifndef LPBALL_SUMMATION_HPP
#define LPBALL_SUMMATION_HPP

#include <cmath>
#include <span>

namespace lpball {

/// Neumaier's variant of Kahan compensated summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Plain sum of a short block with four independent accumulators.
/// Blocks are meant to be small (a few hundred terms) and folded into a
/// CompensatedSum, which keeps the total error at O(block * eps).
inline double block_sum(std::span<const double> xs) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= xs.size(); i += 4) {
    a0 += xs[i];
    a1 += xs[i + 1];
    a2 += xs[i + 2];
    a3 += xs[i + 3];
  }
  for (; i < xs.size(); ++i) a0 += xs[i];
  return (a0 + a1) + (a2 + a3);
}

inline double compensated_sum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

/// (sum |x_i|^p)^{1/p} with compensated accumulation.
inline double lp_norm(std::span<const double> xs, double p) {
  CompensatedSum s;
  if (p == 2.0) {
    for (double x : xs) s.add(x * x);
    return std::sqrt(s.value());
  }
  if (p == 1.0) {
    for (double x : xs) s.add(std::abs(x));
    return s.value();
  }
  for (double x : xs) s.add(std::pow(std::abs(x), p));
  return std::pow(s.value(), 1.0 / p);
}

}  // namespace lpball

#endif  // LPBALL_SUMMATION_HPP
