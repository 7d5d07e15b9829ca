#pragma once
// Applications (VNF chains), users and dynamic processes, plus their JSON
// documents (services.json, users.json, placements.json, processes.json).

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cesim/fixed.hpp"

namespace cesim {

using Rng = std::mt19937_64;

// Independent, reproducible stream for one entity (a user, a process, ...).
Rng make_stream(std::uint64_t seed, std::string_view key);
// Uniform double in [0, 1) from the top 53 bits of one draw.
double unit_uniform(Rng& rng);
// Uniform index in [0, n) by rejection; n > 0.
std::size_t uniform_index(Rng& rng, std::size_t n);

struct Resources {
  Fixed cpu;
  Fixed memory_mib;
};

struct VnfSpec {
  std::string name;
  Time service_time;  // per-request processing demand
  Resources footprint;
};

inline constexpr std::string_view kUserEndpoint = "user";

struct MessageSpec {
  std::string name;
  std::string src;  // "user" or a VNF name
  std::string dst;
  Fixed size;
};

struct Application {
  std::string name;
  std::vector<VnfSpec> vnfs;
  // messages[i] feeds vnfs[i]; an extra trailing message (last VNF -> user)
  // is the backward response path.
  std::vector<MessageSpec> messages;
  Time latency_requirement;

  bool has_response_path() const { return messages.size() == vnfs.size() + 1; }
  std::optional<std::size_t> vnf_index(std::string_view vnf) const;
};

// Throws Error(invalid_argument) naming the problem ("chain inconsistency"...).
void validate_application(const Application& app);

struct Distribution {
  enum class Kind { deterministic, exponential, uniform };
  Kind kind = Kind::deterministic;
  Time period = Time::units(30);  // deterministic
  double rate = 1.0;              // exponential, events per time unit
  Time lo;                        // uniform
  Time hi;

  static Distribution deterministic(Time t) {
    Distribution d;
    d.period = t;
    return d;
  }
  static Distribution exponential(double rate) {
    Distribution d;
    d.kind = Kind::exponential;
    d.rate = rate;
    return d;
  }
  static Distribution uniform(Time lo, Time hi) {
    Distribution d;
    d.kind = Kind::uniform;
    d.lo = lo;
    d.hi = hi;
    return d;
  }

  // Strictly positive (at least one tick).
  Time sample(Rng& rng) const;
  void validate() const;
};

struct UserSpec {
  std::string app;
  std::string node;
  Distribution generation;
  std::string first_message;  // defaults to the application's first message
};

enum class ProcessKind { user_mobility_random, hotspot_users, node_failure, node_recovery, custom };

std::string_view to_string(ProcessKind kind);
ProcessKind process_kind_from(std::string_view name);

struct ProcessSpec {
  std::string name;
  ProcessKind kind = ProcessKind::custom;
  bool enabled = true;
  Distribution distribution;
  nlohmann::json params = nlohmann::json::object();
};

struct PlacementEntry {
  std::string app;
  std::string vnf;
  std::string node;
  std::optional<std::int64_t> instance;
};

// Hotspot timeline parsed from ProcessSpec::params.
struct HotspotStep {
  enum class Action { add, relocate, remove };
  Time at;
  Action action = Action::add;
  std::int64_t count = 0;   // add
  std::string node;         // add / relocate target
  double fraction = 0.0;    // remove
};
struct HotspotParams {
  std::string app;
  Distribution user_distribution;
  std::vector<HotspotStep> steps;  // strictly increasing in time
};
HotspotParams parse_hotspot(const nlohmann::json& params);

struct MobilityParams {
  std::string app;
  std::vector<std::string> nodes;
  double create_probability = 0.0;
  double move_probability = 0.0;
  std::optional<Distribution> user_distribution;  // falls back to the process cadence
};
MobilityParams parse_mobility(const nlohmann::json& params);

Distribution load_distribution(const nlohmann::json& doc, const std::string& path);
nlohmann::json distribution_to_json(const Distribution& d);

std::vector<Application> load_applications(const nlohmann::json& doc);
nlohmann::json application_to_json(const Application& app);
nlohmann::json applications_to_json(const std::vector<Application>& apps);

std::vector<UserSpec> load_users(const nlohmann::json& doc);
nlohmann::json user_to_json(const UserSpec& u);

std::vector<PlacementEntry> load_placements(const nlohmann::json& doc);

ProcessSpec load_process(const nlohmann::json& doc, const std::string& path = "$");
std::vector<ProcessSpec> load_processes(const nlohmann::json& doc);
nlohmann::json process_to_json(const ProcessSpec& p);

}  // namespace cesim
