#pragma once

#include <compare>
#include <limits>
#include <ostream>

namespace expcost {

/// Nonnegative cost on the extended reals. INFINITE absorbs addition and
/// scaling, and compares greater than every finite value.
class ExtendedCost {
 public:
  constexpr ExtendedCost() = default;
  constexpr explicit ExtendedCost(double value) : value_(value) {}

  static constexpr ExtendedCost infinite() {
    return ExtendedCost(std::numeric_limits<double>::infinity());
  }

  constexpr bool is_infinite() const { return value_ == std::numeric_limits<double>::infinity(); }
  constexpr bool is_finite() const { return !is_infinite(); }

  /// +inf when infinite.
  constexpr double value() const { return value_; }

  /// Multiplies by a nonnegative factor. An infinite cost stays infinite even
  /// for a zero factor.
  constexpr ExtendedCost scaled(double factor) const {
    return is_infinite() ? infinite() : ExtendedCost(value_ * factor);
  }

  friend constexpr ExtendedCost operator+(ExtendedCost a, ExtendedCost b) {
    return (a.is_infinite() || b.is_infinite()) ? infinite() : ExtendedCost(a.value_ + b.value_);
  }
  friend constexpr ExtendedCost operator+(ExtendedCost a, double b) { return a + ExtendedCost(b); }
  constexpr ExtendedCost& operator+=(ExtendedCost other) { return *this = *this + other; }

  friend constexpr auto operator<=>(const ExtendedCost&, const ExtendedCost&) = default;
  friend constexpr bool operator==(const ExtendedCost&, const ExtendedCost&) = default;

  friend std::ostream& operator<<(std::ostream& os, const ExtendedCost& c) {
    if (c.is_infinite()) return os << "inf";
    return os << c.value_;
  }

 private:
  double value_ = 0.0;
};

}  // namespace expcost
