#include "cesim/fixed.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>

#include "cesim/error.hpp"

namespace cesim {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::invalid_state: return "invalid_state";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::capacity: return "capacity";
    case ErrorCode::internal: return "internal";
  }
  return "internal";
}

Fixed Fixed::from_double(double value) {
  if (!std::isfinite(value)) fail(ErrorCode::invalid_argument, "non-finite numeric value");
  return from_raw(static_cast<std::int64_t>(std::llround(value * kScale)));
}

Fixed Fixed::parse(std::string_view text) {
  auto bad = [&] { fail(ErrorCode::invalid_argument, "malformed decimal '" + std::string(text) + "'"); };
  if (text.empty()) bad();
  bool negative = false;
  std::size_t i = 0;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    i = 1;
  }
  std::int64_t whole = 0;
  std::int64_t frac = 0;
  int frac_digits = 0;
  bool round_up = false;
  bool seen_digit = false;
  bool in_frac = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c == '.') {
      if (in_frac) bad();
      in_frac = true;
      continue;
    }
    if (c < '0' || c > '9') bad();
    seen_digit = true;
    int d = c - '0';
    if (!in_frac) {
      if (whole > (INT64_MAX / kScale - 9) / 10) fail(ErrorCode::invalid_argument, "decimal out of range");
      whole = whole * 10 + d;
    } else if (frac_digits < 3) {
      frac = frac * 10 + d;
      ++frac_digits;
    } else if (frac_digits == 3) {
      round_up = d >= 5;
      ++frac_digits;
    }
  }
  if (!seen_digit) bad();
  for (int k = std::min(frac_digits, 3); k < 3; ++k) frac *= 10;
  std::int64_t raw = whole * kScale + frac + (round_up ? 1 : 0);
  return from_raw(negative ? -raw : raw);
}

std::string Fixed::str() const {
  std::int64_t a = std::llabs(raw_);
  std::string out = (raw_ < 0 ? "-" : "") + std::to_string(a / kScale);
  std::int64_t frac = a % kScale;
  if (frac != 0) {
    std::string digits = std::to_string(frac);
    digits.insert(0, 3 - digits.size(), '0');
    while (!digits.empty() && digits.back() == '0') digits.pop_back();
    out += "." + digits;
  }
  return out;
}

Fixed Fixed::mul(Fixed o) const {
  __int128 p = static_cast<__int128>(raw_) * o.raw_;
  __int128 half = kScale / 2;
  __int128 q = p >= 0 ? (p + half) / kScale : (p - half) / kScale;
  return from_raw(static_cast<std::int64_t>(q));
}

namespace {
__int128 gcd128(__int128 a, __int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}
}  // namespace

Ratio make_ratio(__int128 num, __int128 den) {
  if (den == 0) fail(ErrorCode::internal, "ratio with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  __int128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (num > INT64_MAX || num < INT64_MIN || den > INT64_MAX) fail(ErrorCode::internal, "ratio overflow");
  return Ratio(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

}  // namespace cesim
