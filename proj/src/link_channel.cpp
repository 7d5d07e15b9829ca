#include "cesim/link_channel.hpp"

#include <algorithm>
#include <cmath>

#include "cesim/error.hpp"

namespace cesim {

namespace {
// Residual below which a transfer counts as fully serialized; absorbs the
// rounding of completion instants up to the tick grid.
constexpr double kDoneEpsilon = 1e-6;
}  // namespace

void LinkChannel::drain(Time now, Fixed bandwidth) {
  if (now < last_) fail(ErrorCode::internal, "link channel clock moved backwards");
  if (!active_.empty() && now > last_) {
    double elapsed = (now - last_).to_double();
    double per_transfer = bandwidth.to_double() * elapsed / static_cast<double>(active_.size());
    for (auto& t : active_) t.remaining -= per_transfer;
  }
  last_ = now;
}

void LinkChannel::start(std::uint64_t id, Fixed size, Time now, Fixed bandwidth) {
  if (size.raw() <= 0) fail(ErrorCode::internal, "zero-size transfers bypass the channel");
  drain(now, bandwidth);
  active_.push_back(Transfer{id, now, size, size.to_double()});
  ++version_;
}

std::vector<LinkChannel::Transfer> LinkChannel::advance(Time now, Fixed bandwidth) {
  drain(now, bandwidth);
  std::vector<Transfer> done;
  auto split = std::stable_partition(active_.begin(), active_.end(),
                                     [](const Transfer& t) { return t.remaining > kDoneEpsilon; });
  done.assign(split, active_.end());
  active_.erase(split, active_.end());
  if (!done.empty()) ++version_;
  return done;
}

std::optional<Time> LinkChannel::next_completion(Fixed bandwidth) const {
  if (active_.empty()) return std::nullopt;
  double least = active_.front().remaining;
  for (const auto& t : active_) least = std::min(least, t.remaining);
  if (least <= kDoneEpsilon) return last_;
  double units = least * static_cast<double>(active_.size()) / bandwidth.to_double();
  auto ticks = static_cast<std::int64_t>(std::ceil(units * Fixed::kScale - 1e-6));
  return last_ + Time::from_raw(std::max<std::int64_t>(ticks, 1));
}

}  // namespace cesim
