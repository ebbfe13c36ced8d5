#pragma once

#include <limits>
#include <stdexcept>

namespace bnpo {

/// A real value that may be +infinity. Callers must branch on
/// is_finite() before reading value(); reading an infinite value throws.
class ExtendedValue {
 public:
  static constexpr ExtendedValue finite(double v) { return ExtendedValue(v, true); }
  static constexpr ExtendedValue infinite() {
    return ExtendedValue(std::numeric_limits<double>::infinity(), false);
  }

  constexpr bool is_finite() const noexcept { return finite_; }
  constexpr bool is_infinite() const noexcept { return !finite_; }

  double value() const {
    if (!finite_) throw std::logic_error("ExtendedValue: value is +infinity");
    return value_;
  }

  /// The value, or +inf for the infinite marker.
  constexpr double or_infinity() const noexcept { return value_; }

  friend constexpr bool operator==(const ExtendedValue&, const ExtendedValue&) = default;

 private:
  constexpr ExtendedValue(double v, bool finite) : value_(v), finite_(finite) {}
  double value_;
  bool finite_;
};

}  // namespace bnpo
