#pragma once
// Window metrics computed from traces. Every function is a pure read of a
// TraceStore (plus the engine's placement for cost); events belong to the
// half-open window that contains their end or completion time.

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cesim/engine.hpp"
#include "cesim/fixed.hpp"
#include "cesim/trace.hpp"

namespace cesim {

struct Window {
  Time start;
  Time end;

  // Throws invalid_argument unless end > start.
  void validate() const;
  bool contains(Time t) const { return start <= t && t < end; }
  Time length() const { return end - start; }
};

// Nearest rank: the ceil(pct/100 * n)-th smallest sample (1-based).
std::optional<Time> percentile_nearest_rank(std::vector<Time> samples, int pct);

struct AppMetrics {
  std::string app;
  std::int64_t requests_total = 0;
  std::int64_t requests_successful = 0;
  std::int64_t requests_unsuccessful = 0;
  std::optional<Ratio> response_mean;
  std::optional<Time> response_p50;
  std::optional<Time> response_p95;
  std::optional<Time> response_max;
  std::optional<Ratio> network_mean;
  std::optional<Ratio> processing_mean;
  std::optional<Ratio> waiting_mean;
  std::optional<Ratio> hops_mean;
  std::optional<Ratio> distance_mean;
};

std::optional<Time> response_p95(const TraceStore& traces, const std::string& app, const Window& w);
std::int64_t unsuccessful_requests(const TraceStore& traces, const std::string& app, const Window& w);
Ratio node_utilization(const TraceStore& traces, const std::string& node, const Window& w);
Ratio link_utilization(const TraceStore& traces, const std::string& link, Fixed bandwidth, const Window& w);
// Sum of node costs over active deployments (all applications when app is empty).
Fixed placement_cost(const Engine& engine, const std::string& app = {});
AppMetrics app_metrics_summary(const TraceStore& traces, const std::string& app, const Window& w);

// Per (source region, destination region) rate per size unit.
using RegionRates = std::map<std::pair<std::string, std::string>, Fixed>;

struct CostMetrics {
  std::map<std::string, Fixed> placement;  // per app
  Fixed total_placement;
  std::map<std::pair<std::string, std::string>, Ratio> egress;
  std::map<std::pair<std::string, std::string>, Ratio> ingress;
};

// Size of every region-crossing hop ending in the window times the rate.
std::map<std::pair<std::string, std::string>, Ratio> egress_cost(const TraceStore& traces, const Window& w,
                                                                 const RegionRates& rates);
CostMetrics cost_metrics(const Engine& engine, const Window& w, const RegionRates& egress_rates,
                         const RegionRates& ingress_rates);

struct InfraMetrics {
  std::map<std::string, Ratio> node_utilization;
  std::map<std::string, Ratio> cluster_utilization;  // mean over member nodes
  std::map<std::string, std::int64_t> users_per_node;
  std::map<std::string, Ratio> link_utilization;     // inter-cluster links
  std::vector<std::string> congested_links;          // utilization > link threshold
  std::vector<std::string> overloaded_nodes;         // utilization > node threshold
};

InfraMetrics infra_metrics(const Engine& engine, const Window& w, Ratio node_threshold, Ratio link_threshold);

// Exact decimal rendering with round-half-away-from-zero.
std::string format_decimal(const Ratio& r, int digits);

// "- Requests: 8 (successful: 8 / failed: 0)" style block.
std::string format_app_metrics_text(const AppMetrics& m);
nlohmann::json app_metrics_to_json(const AppMetrics& m);
nlohmann::json infra_metrics_to_json(const InfraMetrics& m);

// Long-format CSV rows: simulation, window start, window end, metric, key, value.
struct MetricRecord {
  std::string simulation;
  Window window;
  std::string metric;
  std::string key;
  std::string value;
};
std::vector<MetricRecord> metric_records(const std::string& simulation, const Window& w, const AppMetrics& m);
std::string metric_records_csv(const std::vector<MetricRecord>& records);

}  // namespace cesim
