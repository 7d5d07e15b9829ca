#pragma once
// Fluid fair-share serialization on one link: every in-flight transfer gets
// bandwidth / k while k transfers overlap. Propagation latency is applied by
// the caller after serialization finishes and does not occupy bandwidth.

#include <cstdint>
#include <optional>
#include <vector>

#include "cesim/fixed.hpp"

namespace cesim {

class LinkChannel {
 public:
  struct Transfer {
    std::uint64_t id;
    Time started;
    Fixed size;
    double remaining;  // size units
  };

  // Drains the fluid state up to `now` and adds a transfer. size must be > 0.
  void start(std::uint64_t id, Fixed size, Time now, Fixed bandwidth);
  // Drains up to `now` and removes every transfer whose serialization is
  // complete, returned in start order.
  std::vector<Transfer> advance(Time now, Fixed bandwidth);
  // Tick at which the next transfer finishes, assuming no arrivals.
  std::optional<Time> next_completion(Fixed bandwidth) const;

  std::size_t in_flight() const { return active_.size(); }
  const std::vector<Transfer>& active() const { return active_; }
  // Bumped on every state change; lets the owner discard stale wake-ups.
  std::uint64_t version() const { return version_; }

 private:
  void drain(Time now, Fixed bandwidth);

  std::vector<Transfer> active_;
  Time last_;
  std::uint64_t version_ = 0;
};

}  // namespace cesim
