#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "cesim/harness.hpp"
#include "doctest.h"

using namespace cesim;
using json = nlohmann::json;

namespace {

std::size_t count_rows(const std::string& csv) { return static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')); }

std::string cluster_of(const Topology& t, const std::string& node) { return t.cluster_of(t.node_index(node)).name; }

// Cluster hop counts by Floyd-Warshall over the link specs.
std::map<std::string, std::map<std::string, int>> cluster_hops(const Topology& t) {
  std::map<std::string, std::map<std::string, int>> d;
  const int inf = 1 << 20;
  for (const auto& a : t.clusters())
    for (const auto& b : t.clusters()) d[a.name][b.name] = a.name == b.name ? 0 : inf;
  for (const auto& l : t.link_specs()) d[l.a][l.b] = d[l.b][l.a] = 1;
  for (const auto& k : t.clusters())
    for (const auto& i : t.clusters())
      for (const auto& j : t.clusters())
        d[i.name][j.name] = std::min(d[i.name][j.name], d[i.name][k.name] + d[k.name][j.name]);
  return d;
}

}  // namespace

TEST_CASE("default spec builds 40 clusters, 214 nodes and three applications") {
  BuiltScenario b = build_scenario(full_profile(), 1);
  const Topology& t = b.scenario.topology;
  CHECK(t.clusters().size() == 40);
  CHECK(t.node_count() == 214);
  CHECK(b.scenario.applications.size() == 3);
  std::map<std::string, std::size_t> per_role;
  std::set<std::size_t> sizes;
  for (const auto& c : t.clusters()) {
    ++per_role[c.role];
    sizes.insert(c.nodes.size());
    CHECK(c.nodes.size() >= 2);
    const char* cost = c.role == "CDC" ? "0.01" : c.role == "EDC" ? "0.06" : "0.3";
    for (const auto& n : c.nodes) CHECK(n.cost == Fixed::parse(cost));
  }
  CHECK(per_role == std::map<std::string, std::size_t>{{"CDC", 3}, {"EDC", 10}, {"MEC", 27}});
  CHECK(sizes.size() > 1);  // not uniformly distributed
  std::map<std::string, std::size_t> vnfs;
  for (const auto& a : b.scenario.applications) vnfs[a.name] = a.vnfs.size();
  CHECK(vnfs == std::map<std::string, std::size_t>{{"Coordination Pipeline", 2}, {"Perception Pipeline", 3}, {"Telemetry Monitoring", 1}});
  CHECK(b.scenario.users.size() == 27 * 3);
}

TEST_CASE("scenario construction is a pure function of spec and seed") {
  json a = scenario_documents(build_scenario(reduced_profile(), 4).scenario);
  json b = scenario_documents(build_scenario(reduced_profile(), 4).scenario);
  json c = scenario_documents(build_scenario(reduced_profile(), 5).scenario);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("spec validation names the offending field") {
  ScenarioSpec s = full_profile();
  s.total_nodes = 213;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("total_nodes"), Error);
  s = full_profile();
  s.hotspot.relocate_at = s.hotspot.add_at;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("hotspot"), Error);
  s = full_profile();
  s.periods.erase("Telemetry Monitoring");
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("periods"), Error);
  s = reduced_profile();
  s.total_nodes = 10;  // fewer than two per cluster
  CHECK_THROWS_AS(s.validate(), Error);
  // Other totals are fine once the profile no longer pins 214.
  s = reduced_profile();
  s.total_nodes = 50;
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("spec round-trips through JSON") {
  ScenarioSpec s = reduced_profile();
  s.users_per_mec = 3;
  s.hotspot.users = 12;
  ScenarioSpec back = ScenarioSpec::from_json(s.to_json());
  CHECK(back.to_json() == s.to_json());
  CHECK(ScenarioSpec::from_json(json::object()).to_json() == full_profile().to_json());
}

TEST_CASE("hotspot timeline and neighbour selection") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    ScenarioSpec spec = seed % 2 ? reduced_profile() : full_profile();
    BuiltScenario b = build_scenario(spec, seed);
    const Topology& t = b.scenario.topology;
    CAPTURE(seed);
    std::string hc = cluster_of(t, b.hotspot_node), nc = cluster_of(t, b.neighbor_node);
    CHECK(t.clusters()[*t.find_cluster(hc)].role == "MEC");
    CHECK(t.clusters()[*t.find_cluster(nc)].role == "MEC");
    CHECK(hc != nc);
    auto d = cluster_hops(t);
    int nearest = 1 << 20;
    for (const auto& c : t.clusters())
      if (c.role == "MEC" && c.name != hc) nearest = std::min(nearest, d[hc][c.name]);
    CHECK(d[hc][nc] == nearest);

    REQUIRE(b.scenario.processes.size() == 1);
    const json& steps = b.scenario.processes[0].params.at("steps");
    REQUIRE(steps.size() == 3);
    CHECK(steps[0].at("action") == "add");
    CHECK(steps[0].at("count") == 60);
    CHECK(steps[1].at("node") == b.neighbor_node);
    CHECK(steps[2].at("fraction") == doctest::Approx(0.4));
    Time prev = Time::from_raw(-1);
    for (const auto& st : steps) {
      Time at = Time::parse(st.at("time").is_string() ? st.at("time").get<std::string>() : st.at("time").dump());
      CHECK(prev < at);
      prev = at;
    }
  }
}

TEST_CASE("built scenarios survive a directory round trip") {
  auto dir = std::filesystem::temp_directory_path() / "cesim-harness-roundtrip";
  std::filesystem::remove_all(dir);
  BuiltScenario b = build_scenario(reduced_profile(), 9);
  write_built_scenario(b, dir);
  BuiltScenario back = load_built_scenario(dir);
  CHECK(back.hotspot_node == b.hotspot_node);
  CHECK(back.neighbor_node == b.neighbor_node);
  CHECK(scenario_documents(back.scenario) == scenario_documents(b.scenario));
  std::filesystem::remove_all(dir);
}

TEST_CASE("reduced comparison: horizon, series coverage, baselines and control") {
  SimulationService service;
  McpGateway gw(service);
  ScenarioSpec spec = reduced_profile();
  spec.horizon = Time::units(600);
  BuiltScenario b = build_scenario(spec, 2);
  ComparisonOptions opt;
  opt.control = true;
  ComparisonReport r = run_comparison(gw, b, 2, opt);
  REQUIRE(r.results.size() == 4);

  const auto& random = r.result("random");
  const auto& greedy = r.result("greedy");
  const auto& agent = r.result("multi-agent");
  const auto& control = r.result("control");
  for (const auto& res : r.results) {
    CAPTURE(res.strategy);
    CHECK(res.final_clock == Time::units(600));
    CHECK(res.series.size() == 6 * 3);  // every window, every app
    CHECK(res.totals.size() == 3);
  }
  CHECK(random.replicas == 41);  // 7 + 7 + 6 chains of 3, 2 and 1 VNFs
  CHECK(greedy.replicas == greedy.expected_dedicated_replicas);
  CHECK(greedy.replicas > random.replicas);

  // Emissions do not depend on placement: the same requests in every window.
  for (std::size_t i = 0; i < random.series.size(); ++i) {
    CHECK(random.series[i].requests == greedy.series[i].requests);
    CHECK(random.series[i].requests == agent.series[i].requests);
  }

  REQUIRE(control.loop);
  CHECK(control.loop->action_count() == 0);
  CHECK(control.trace_hash == random.trace_hash);
  CHECK(control.totals == random.totals);
  REQUIRE(agent.loop);
  CHECK(agent.loop->windows.size() == 6);

  auto csv = export_plots_data(r.to_json());
  REQUIRE(csv.size() == 3);
  CHECK(count_rows(csv.at("response_components.csv")) == 1 + 4 * 18 * 7);
  CHECK(count_rows(csv.at("actions.csv")) == 1 + 2 * 6 * 3);
  CHECK(count_rows(csv.at("monitored.csv")) == 1 + 2 * 6);
  CHECK(csv.at("monitored.csv").rfind("strategy,window,congested_links,overloaded_nodes,placement_cost\n", 0) == 0);
}
