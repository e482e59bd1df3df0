#ifndef LPBALL_EXT_REAL_HPP
#define LPBALL_EXT_REAL_HPP

#include <cmath>
#include <compare>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "lpball/errors.hpp"

namespace lpball {

/// A value in [-inf, +inf) extended by +inf, the codomain of rate functions.
///
/// NaN is rejected at construction so that an undefined quantity can never
/// sneak into a rate grid. Addition absorbs +inf; subtraction raises on
/// inf - inf.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  ExtReal(double v) : value_(v) {  // NOLINT(google-explicit-constructor)
    if (std::isnan(v)) throw ConsistencyError("ExtReal: NaN is not an extended real");
    if (v == -std::numeric_limits<double>::infinity())
      throw ConsistencyError("ExtReal: -inf is not representable");
  }

  static ExtReal infinity() {
    ExtReal r;
    r.value_ = std::numeric_limits<double>::infinity();
    return r;
  }

  bool is_infinite() const { return std::isinf(value_); }
  bool is_finite() const { return !is_infinite(); }

  /// The finite value; throws when +inf.
  double value() const {
    if (is_infinite()) throw DomainError("ExtReal: value() of +inf");
    return value_;
  }
  /// As a double, +inf mapped to the IEEE infinity.
  double to_double() const { return value_; }

  friend ExtReal operator+(ExtReal a, ExtReal b) {
    if (a.is_infinite() || b.is_infinite()) return infinity();
    return ExtReal(a.value_ + b.value_);
  }
  friend ExtReal operator-(ExtReal a, ExtReal b) {
    if (b.is_infinite()) throw DomainError("ExtReal: subtraction of +inf is undefined");
    if (a.is_infinite()) return infinity();
    return ExtReal(a.value_ - b.value_);
  }
  ExtReal& operator+=(ExtReal other) { return *this = *this + other; }

  /// Multiplication by a strictly positive scalar.
  ExtReal scaled(double factor) const {
    if (!(factor > 0.0)) throw DomainError("ExtReal: scale factor must be positive");
    if (is_infinite()) return infinity();
    return ExtReal(value_ * factor);
  }

  friend bool operator==(ExtReal a, ExtReal b) { return a.value_ == b.value_; }
  friend std::partial_ordering operator<=>(ExtReal a, ExtReal b) { return a.value_ <=> b.value_; }

  /// "inf" or the value at 17 significant digits.
  std::string to_string() const {
    if (is_infinite()) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value_);
    return buf;
  }

  friend std::ostream& operator<<(std::ostream& os, ExtReal x) { return os << x.to_string(); }

 private:
  double value_ = 0.0;
};

inline ExtReal min(ExtReal a, ExtReal b) { return b < a ? b : a; }
inline ExtReal max(ExtReal a, ExtReal b) { return a < b ? b : a; }

}  // namespace lpball

#endif  // LPBALL_EXT_REAL_HPP
