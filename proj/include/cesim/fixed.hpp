#pragma once
// Fixed-point quantities and exact ratios.
//
// Every clock value, size, bandwidth, capacity and cost in the simulator is a
// Fixed: a signed 64-bit count of thousandths. Sums are exact, ordering is
// platform independent, and ratios built from Fixed values are exact
// boost::rational numbers.

#include <boost/rational.hpp>

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace cesim {

using Ratio = boost::rational<std::int64_t>;

class Fixed {
 public:
  static constexpr std::int64_t kScale = 1000;

  constexpr Fixed() = default;

  static constexpr Fixed from_raw(std::int64_t raw) {
    Fixed f;
    f.raw_ = raw;
    return f;
  }
  static constexpr Fixed units(std::int64_t whole) { return from_raw(whole * kScale); }
  // Rounds half away from zero to the nearest thousandth.
  static Fixed from_double(double value);
  // Parses a plain decimal ("100.0", "-2.125", "7"). More than three
  // fractional digits are rounded. Throws Error(invalid_argument).
  static Fixed parse(std::string_view text);

  constexpr std::int64_t raw() const { return raw_; }
  double to_double() const { return static_cast<double>(raw_) / kScale; }
  Ratio to_ratio() const { return Ratio(raw_, kScale); }
  // Shortest decimal rendering that round-trips through parse().
  std::string str() const;

  constexpr Fixed operator+(Fixed o) const { return from_raw(raw_ + o.raw_); }
  constexpr Fixed operator-(Fixed o) const { return from_raw(raw_ - o.raw_); }
  constexpr Fixed operator-() const { return from_raw(-raw_); }
  constexpr Fixed& operator+=(Fixed o) {
    raw_ += o.raw_;
    return *this;
  }
  constexpr Fixed& operator-=(Fixed o) {
    raw_ -= o.raw_;
    return *this;
  }
  constexpr Fixed operator*(std::int64_t k) const { return from_raw(raw_ * k); }
  // Product of two fixed values, rounded half away from zero.
  Fixed mul(Fixed o) const;

  constexpr auto operator<=>(const Fixed&) const = default;

 private:
  std::int64_t raw_ = 0;
};

using Time = Fixed;

inline double to_double(const Ratio& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

// Builds numerator/denominator from 128-bit intermediates, reducing before
// narrowing. Throws Error(internal) if the reduced value does not fit.
Ratio make_ratio(__int128 num, __int128 den);

}  // namespace cesim
