#pragma once
// Destination scoring for placement decisions (lower is better):
//
//   score(n) = d_users(n) + alpha * U(n) + beta * cost(n) + region_penalty(n)
//
// Evaluated in exact rational arithmetic so ties and hand-computed values
// compare exactly.

#include <string>
#include <string_view>

#include "cesim/fixed.hpp"

namespace cesim {

struct ScoreWeights {
  Fixed alpha;
  Fixed beta;
};

enum class Strategy { cost, overload, congestion, balanced };

std::string_view to_string(Strategy s);
Strategy strategy_from(std::string_view name);

// Default strategy-dependent weights.
ScoreWeights default_weights(Strategy s);

struct ScoreInputs {
  Ratio mean_user_distance;  // hops
  Ratio utilization;
  Fixed cost;
  bool in_dominant_region = true;
};

Ratio placement_score(const ScoreInputs& in, const ScoreWeights& w, Fixed region_penalty);

// Parses "n/d" or an integer; throws Error(invalid_argument).
Ratio parse_ratio(std::string_view text);
std::string format_ratio(const Ratio& r);

}  // namespace cesim
