#pragma once
// Three-way placement comparison: a CDC/EDC/MEC topology with three
// service chains and a hotspot perturbation, run under the random, greedy
// and multi-agent strategies from forks of one initialized parent.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cesim/agents.hpp"
#include "cesim/mcp.hpp"
#include "cesim/scenario.hpp"

namespace cesim {

struct HotspotTimeline {
  std::string app = "Perception Pipeline";
  std::int64_t users = 60;
  Time add_at = Time::units(1000);
  Time relocate_at = Time::units(1800);
  Time remove_at = Time::units(2600);
  double remove_fraction = 0.4;
  Time period = Time::units(20);  // request period of the hotspot users
};

struct ScenarioSpec {
  std::string profile = "full";
  std::size_t cdc = 3, edc = 10, mec = 27;
  std::size_t total_nodes = 214;
  bool pinned_total = true;  // reject any node total other than 214
  Fixed cost_cdc = Fixed::from_raw(10), cost_edc = Fixed::from_raw(60), cost_mec = Fixed::from_raw(300);
  Fixed node_cpu = Fixed::units(8);
  Fixed node_memory_mib = Fixed::units(16384);
  std::size_t users_per_mec = 1;          // nominal users of each application per MEC cluster
  std::map<std::string, Time> periods;    // nominal request period per application
  HotspotTimeline hotspot;
  Time horizon = Time::units(5000);
  Time window = Time::units(100);
  std::size_t random_replicas = 20;
  std::vector<Application> applications;  // empty: evaluation_applications()

  // Throws Error(invalid_argument) naming the offending field.
  void validate() const;
  nlohmann::json to_json() const;
  static ScenarioSpec from_json(const nlohmann::json& doc);
};

// Perception Pipeline (3 VNFs, 120), Coordination Pipeline (2, 75),
// Telemetry Monitoring (1, 50), each with a backward response message.
std::vector<Application> evaluation_applications();

// 3/10/27 clusters, 214 nodes, horizon 5000, hotspot at 1000/1800/2600.
ScenarioSpec full_profile();
// 1/2/4 clusters, 37 nodes, horizon 1000, hotspot at 200/360/520.
ScenarioSpec reduced_profile();

struct BuiltScenario {
  Scenario scenario;
  std::string hotspot_node;
  std::string neighbor_node;
};

// Node counts per cluster, user homes and the hotspot nodes are drawn from
// the seed. The spec and the drawn hotspot nodes travel in config.json.
BuiltScenario build_scenario(const ScenarioSpec& spec, std::uint64_t seed);
void write_built_scenario(const BuiltScenario& b, const std::filesystem::path& dir);
BuiltScenario load_built_scenario(const std::filesystem::path& dir);

struct ComparisonOptions {
  std::vector<std::string> strategies = {"random", "greedy", "multi-agent"};
  bool control = false;  // extra multi-agent run with thresholds disabled
  std::optional<Time> horizon;  // defaults to the spec's
  std::optional<Time> window;
  std::uint64_t placement_seed = 1;
  AgentConfig agent;
};

struct SeriesPoint {
  std::string app;
  std::int64_t k = 0;
  Window window;
  std::int64_t requests = 0;
  std::int64_t successful = 0;
  std::int64_t failed = 0;
  nlohmann::json response_mean, response_p95, network_mean, waiting_mean, processing_mean;  // number or null
};

struct StrategyResult {
  std::string strategy;
  std::string simulation_id;
  Time final_clock;
  std::vector<SeriesPoint> series;
  nlohmann::json totals;  // whole-run application metrics, keyed by app
  std::size_t replicas = 0;
  std::size_t expected_dedicated_replicas = 0;  // sum over every user ever created of its chain length
  std::string placement_cost;
  std::string trace_hash;
  nlohmann::json placement;  // baseline placement summary
  std::optional<LoopReport> loop;
};

struct ComparisonReport {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string hotspot_node;
  std::string neighbor_node;
  Time horizon;
  Time window;
  nlohmann::json agent_config;
  std::vector<StrategyResult> results;

  const StrategyResult& result(const std::string& strategy) const;
  nlohmann::json to_json() const;
};

// Strategies run in parallel, each on its own fork and MCP session.
ComparisonReport run_comparison(McpGateway& gateway, const BuiltScenario& scenario, std::uint64_t seed,
                                const ComparisonOptions& options);

// Long-format CSV tables keyed by file name: response_components.csv
// (strategy, app, window, component, value), actions.csv (window, strategy
// selected, action kind, count) and monitored.csv (window, |C_k|, |O_k|, P_k).
std::map<std::string, std::string> export_plots_data(const nlohmann::json& report);

}  // namespace cesim
