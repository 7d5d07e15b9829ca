#pragma once
// Monitoring and placement agents plus the random and greedy baselines.
//
// Everything here talks to a simulation through an McpClient; the only
// state carried between windows is the per-node consecutive-overload
// counter. The pure pieces (snapshot assembly, strategy selection,
// scoring, action generation) take plain values so they can be tested
// without a running simulation.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cesim/fixed.hpp"
#include "cesim/mcp_client.hpp"
#include "cesim/metrics.hpp"
#include "cesim/scoring.hpp"

namespace cesim {

struct AgentConfig {
  Ratio node_threshold{8, 100};
  std::int64_t overload_windows = 1;  // consecutive windows above node_threshold
  Ratio link_threshold{1, 2};
  Fixed cost_threshold = Fixed::from_raw(8700);
  Fixed region_penalty = Fixed::units(25);
  std::int64_t budget = 4;  // actions per window
  std::map<Strategy, ScoreWeights> weights = {{Strategy::cost, default_weights(Strategy::cost)},
                                              {Strategy::overload, default_weights(Strategy::overload)},
                                              {Strategy::congestion, default_weights(Strategy::congestion)},
                                              {Strategy::balanced, default_weights(Strategy::balanced)}};
  Time window = Time::units(100);
  std::map<std::string, Time> latency_requirements;  // overrides the application's own

  // Throws Error(invalid_argument) on a non-positive threshold or budget.
  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults.
  static AgentConfig from_json(const nlohmann::json& doc);
  // Thresholds no window can exceed: the loop always selects Balanced.
  static AgentConfig disabled();
};

struct AppStatus {
  std::int64_t requests = 0;
  std::int64_t unsuccessful = 0;
  std::optional<Time> response_p95;
  Time latency_requirement;
  bool degraded = false;  // response_p95 > latency_requirement
};

struct WindowSnapshot {
  std::int64_t k = 0;
  Window window;
  std::map<std::string, AppStatus> apps;
  std::map<std::string, Ratio> node_utilization;
  std::set<std::string> overloaded;
  std::map<std::string, Ratio> link_utilization;
  std::set<std::string> congested;
  Fixed placement_cost;

  std::set<std::string> degraded_apps() const;
  // Degraded or with unsuccessful requests.
  std::set<std::string> affected_apps() const;
  nlohmann::json to_json() const;
};

// Builds S_k from the two metric tool payloads. `streak` holds the number of
// consecutive windows each node has spent above the threshold and is
// updated in place.
WindowSnapshot assemble_snapshot(std::int64_t k, const Window& w, const nlohmann::json& app_metrics,
                                 const nlohmann::json& network_metrics, const AgentConfig& config,
                                 std::map<std::string, std::int64_t>& streak);

class MonitoringAgent {
 public:
  explicit MonitoringAgent(AgentConfig config) : config_(std::move(config)) {}
  WindowSnapshot observe(McpClient& client, const std::string& sim, std::int64_t k, const Window& w);
  const std::map<std::string, std::int64_t>& streak() const { return streak_; }

 private:
  AgentConfig config_;
  std::map<std::string, std::int64_t> streak_;
};

// First match of: cost over budget, overloaded nodes, congested links.
Strategy select_strategy(const WindowSnapshot& s, const AgentConfig& config);

// What the placement agent knows about the simulation, read through tools.
struct PlacementContext {
  struct NodeInfo {
    std::string cluster;
    std::string region;
    Fixed cost;
    Fixed cpu_free;
    Fixed memory_free;
    bool up = true;
  };
  struct StageInfo {
    std::string vnf;
    Fixed cpu;
    Fixed memory;
    std::vector<std::string> replicas;  // hosting nodes, one entry per active deployment
  };
  struct AppInfo {
    Time latency_requirement;
    std::vector<StageInfo> stages;
    std::vector<std::string> user_nodes;  // one entry per active user
  };

  std::map<std::string, NodeInfo> nodes;
  std::map<std::string, AppInfo> apps;
  // hops[node][user node]; absent when unreachable.
  std::map<std::string, std::map<std::string, std::int64_t>> hops;

  static PlacementContext fetch(McpClient& client, const std::string& sim);

  // Region with the most users of the app, ties to the smallest id; empty
  // when the app has no users.
  std::string dominant_region(const std::string& app) const;
  // Mean hop distance from `node` to the app's users; nullopt when some
  // user is unreachable. Zero when the app has no users.
  std::optional<Ratio> mean_user_distance(const std::string& app, const std::string& node) const;
  // Mean over users of the hop distance to the nearest replica of the stage.
  std::optional<Ratio> stage_proximity(const std::string& app, std::size_t stage) const;
  bool fits(const std::string& node, Fixed cpu, Fixed memory) const;
  Fixed placement_cost() const;
  std::size_t deployments_on(const std::string& node) const;
};

// score(n) = d_users + alpha * U + beta * cost + region penalty; nullopt when
// the node cannot reach every user.
std::optional<Ratio> score_node(const PlacementContext& ctx, const WindowSnapshot& s, const std::string& app,
                                const std::string& node, Strategy strategy, const AgentConfig& config);

enum class ActionKind { consolidate, replicate, move };
std::string_view to_string(ActionKind k);

struct PlacementAction {
  ActionKind kind = ActionKind::move;
  std::string app;
  std::string vnf;
  std::string source;  // empty for replicate
  std::string destination;
  std::string justification;
  Ratio score;
  nlohmann::json to_json() const;
};

struct ActionPlan {
  Strategy strategy = Strategy::balanced;
  std::vector<PlacementAction> actions;  // at most config.budget
  std::vector<std::string> dropped;      // infeasible candidates, in order
};

// Primary action of the strategy first, then its subsequent actions, each
// only when its condition holds on the projected state and budget remains.
ActionPlan generate_actions(const WindowSnapshot& s, Strategy strategy, const AgentConfig& config,
                            const PlacementContext& ctx);

struct WindowRecord {
  std::int64_t k = 0;
  Window window;
  Strategy strategy = Strategy::balanced;
  WindowSnapshot snapshot;
  std::vector<PlacementAction> executed;
  std::vector<std::string> dropped;  // generation and execution failures
  nlohmann::json to_json() const;
};

struct LoopReport {
  std::string simulation_id;
  std::vector<WindowRecord> windows;
  std::size_t action_count(ActionKind k) const;
  std::size_t action_count() const;
  nlohmann::json to_json() const;
};

// Monitor then plan then act at the end of every window until the clock
// reaches `horizon`. Tool calls carry the window index in _meta.
LoopReport run_control_loop(McpClient& client, const std::string& sim, Time horizon, const AgentConfig& config);

// `replicas` chains, apps taken in catalogue order round robin, every VNF on
// a uniformly drawn up node with room; users then bind to chains round robin.
nlohmann::json random_placement(McpClient& client, const std::string& sim, std::size_t replicas, std::uint64_t seed);
// Every user, present and future, gets a private chain on its own node.
nlohmann::json greedy_placement(McpClient& client, const std::string& sim);

}  // namespace cesim
