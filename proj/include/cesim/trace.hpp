#pragma once
// Per-request traces recorded by the engine; the single input of every
// metric computation.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cesim/fixed.hpp"

namespace cesim {

using RequestId = std::uint64_t;
using UserId = std::uint64_t;
using DeploymentId = std::uint64_t;

struct HopRecord {
  std::string link;
  std::string from;
  std::string to;
  Fixed size;
  Time start;             // enqueue on the link
  Time serialized;        // last byte on the wire
  Time end;               // arrival at `to`
  bool crosses_region = false;
  std::string from_region;
  std::string to_region;

  Time duration() const { return end - start; }
};

struct ServiceRecord {
  DeploymentId deployment = 0;
  std::string node;
  std::string vnf;
  Time arrival;
  Time start;
  Time end;
  bool finished = false;  // start/end are placeholders until set

  Time waiting() const { return start - arrival; }
  Time processing() const { return end - start; }
};

struct RequestTrace {
  RequestId id = 0;
  std::string app;
  UserId user = 0;
  std::string origin;  // user's node at emission
  Time emitted;
  std::vector<HopRecord> hops;
  std::vector<ServiceRecord> services;
  std::optional<Time> completed;
  std::optional<Time> failed;
  std::string failure_reason;
  std::vector<std::string> path;  // traversed nodes, response leg included
  bool rerouted = false;

  bool in_flight() const { return !completed && !failed; }
  Time response_time() const { return *completed - emitted; }
  Time network_time() const;
  Time processing_time() const;
  Time waiting_time() const;
  Fixed distance_km() const { return distance; }
  Fixed distance;
};

struct PerturbationRecord {
  Time at;
  std::string process;
  std::string description;
};

struct TraceStore {
  std::vector<RequestTrace> requests;  // indexed by RequestId
  std::vector<PerturbationRecord> perturbations;

  // Tab-separated records, one per request, transfer and service, then one
  // per perturbation. Field order is fixed (see README).
  void export_lines(std::ostream& out) const;
  // SHA-256 (hex) of export_lines().
  std::string hash() const;
};

std::string sha256_hex(const std::string& data);

}  // namespace cesim
