#include "cesim/scoring.hpp"

#include <charconv>

#include "cesim/error.hpp"

namespace cesim {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::cost: return "Cost";
    case Strategy::overload: return "Overload";
    case Strategy::congestion: return "Congestion";
    case Strategy::balanced: return "Balanced";
  }
  return "Balanced";
}

Strategy strategy_from(std::string_view name) {
  for (auto s : {Strategy::cost, Strategy::overload, Strategy::congestion, Strategy::balanced})
    if (to_string(s) == name) return s;
  fail(ErrorCode::invalid_argument, "unknown strategy '" + std::string(name) + "'");
}

ScoreWeights default_weights(Strategy s) {
  switch (s) {
    case Strategy::cost: return {Fixed::units(25), Fixed::units(60)};
    case Strategy::overload: return {Fixed::units(55), Fixed::units(20)};
    case Strategy::congestion: return {Fixed::units(25), Fixed::units(12)};
    case Strategy::balanced: return {Fixed::units(35), Fixed::units(20)};
  }
  return {Fixed::units(35), Fixed::units(20)};
}

Ratio placement_score(const ScoreInputs& in, const ScoreWeights& w, Fixed region_penalty) {
  Ratio score = in.mean_user_distance;
  score += w.alpha.to_ratio() * in.utilization;
  score += w.beta.to_ratio() * in.cost.to_ratio();
  if (!in.in_dominant_region) score += region_penalty.to_ratio();
  return score;
}

Ratio parse_ratio(std::string_view text) {
  auto parse_int = [&](std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      fail(ErrorCode::invalid_argument, "malformed ratio '" + std::string(text) + "'");
    return v;
  };
  auto slash = text.find('/');
  if (slash == std::string_view::npos) return Ratio(parse_int(text));
  std::int64_t den = parse_int(text.substr(slash + 1));
  if (den == 0) fail(ErrorCode::invalid_argument, "ratio with zero denominator");
  return Ratio(parse_int(text.substr(0, slash)), den);
}

std::string format_ratio(const Ratio& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

}  // namespace cesim
