#include "cesim/harness.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <queue>
#include <sstream>
#include <thread>

#include "cesim/error.hpp"
#include "cesim/json_util.hpp"

namespace cesim {

using json = nlohmann::json;

namespace {

Application chain(const std::string& name, const std::vector<std::string>& vnfs, Time demand, Fixed size,
                  Fixed response_size, Time latency) {
  Application a;
  a.name = name;
  a.latency_requirement = latency;
  std::string prev(kUserEndpoint);
  for (std::size_t i = 0; i < vnfs.size(); ++i) {
    a.vnfs.push_back(VnfSpec{vnfs[i], demand, Resources{Fixed::parse("0.5"), Fixed::units(256)}});
    a.messages.push_back(MessageSpec{name + ":m" + std::to_string(i), prev, vnfs[i], size});
    prev = vnfs[i];
  }
  a.messages.push_back(MessageSpec{name + ":response", prev, std::string(kUserEndpoint), response_size});
  return a;
}

json time_json(Time t) { return jsonu::fixed_json(t); }

json num_or_null(const json& v) { return v.is_number() ? v : json(nullptr); }

}  // namespace

std::vector<Application> evaluation_applications() {
  return {chain("Perception Pipeline", {"perception-ingest", "perception-detect", "perception-fuse"}, Time::parse("0.3"),
                Fixed::units(200), Fixed::units(50), Time::units(120)),
          chain("Coordination Pipeline", {"coordination-plan", "coordination-sync"}, Time::parse("0.3"), Fixed::units(5),
                Fixed::units(2), Time::units(75)),
          chain("Telemetry Monitoring", {"telemetry-aggregate"}, Time::parse("0.2"), Fixed::units(2), Fixed::units(1),
                Time::units(50))};
}

// ---------------------------------------------------------------------------
// profiles

namespace {

std::map<std::string, Time> default_periods() {
  return {{"Perception Pipeline", Time::units(20)},
          {"Coordination Pipeline", Time::units(25)},
          {"Telemetry Monitoring", Time::units(10)}};
}

}  // namespace

ScenarioSpec full_profile() {
  ScenarioSpec s;
  s.periods = default_periods();
  return s;
}

ScenarioSpec reduced_profile() {
  ScenarioSpec s;
  s.profile = "reduced";
  s.cdc = 1;
  s.edc = 2;
  s.mec = 4;
  s.total_nodes = 37;
  s.pinned_total = false;
  s.users_per_mec = 2;
  s.periods = default_periods();
  s.hotspot.add_at = Time::units(200);
  s.hotspot.relocate_at = Time::units(360);
  s.hotspot.remove_at = Time::units(520);
  s.horizon = Time::units(1000);
  return s;
}

void ScenarioSpec::validate() const {
  auto bad = [](const std::string& field, const std::string& why) {
    fail(ErrorCode::invalid_argument, "scenario spec: " + field + " " + why);
  };
  if (cdc == 0 || edc == 0 || mec == 0) bad("clusters", "needs at least one cluster per tier");
  std::size_t clusters = cdc + edc + mec;
  if (pinned_total && total_nodes != 214) bad("total_nodes", "must equal 214 for the full profile, got " + std::to_string(total_nodes));
  if (total_nodes < 2 * clusters) bad("total_nodes", "must allow a control plane and a worker in every cluster");
  if (users_per_mec == 0) bad("users_per_mec", "must be >= 1");
  if (!(window > Time{})) bad("window", "must be > 0");
  if (!(horizon > Time{})) bad("horizon", "must be > 0");
  if (!(hotspot.add_at < hotspot.relocate_at && hotspot.relocate_at < hotspot.remove_at))
    bad("hotspot", "steps must be strictly increasing in time");
  if (hotspot.users < 1) bad("hotspot.users", "must be >= 1");
  if (!(hotspot.remove_fraction >= 0.0 && hotspot.remove_fraction <= 1.0)) bad("hotspot.remove_fraction", "must lie in [0, 1]");
  if (random_replicas == 0) bad("random_replicas", "must be >= 1");
  std::vector<Application> apps = applications.empty() ? evaluation_applications() : applications;
  for (const auto& a : apps) {
    validate_application(a);
    if (!periods.count(a.name)) bad("periods", "has no request period for '" + a.name + "'");
  }
  if (std::none_of(apps.begin(), apps.end(), [&](const auto& a) { return a.name == hotspot.app; }))
    bad("hotspot.app", "names an unknown application '" + hotspot.app + "'");
}

json ScenarioSpec::to_json() const {
  json p = json::object();
  for (const auto& [app, t] : periods) p[app] = time_json(t);
  json doc = {{"profile", profile},
              {"clusters", {{"cdc", cdc}, {"edc", edc}, {"mec", mec}}},
              {"total_nodes", total_nodes},
              {"pinned_total", pinned_total},
              {"node_costs", {{"cdc", jsonu::fixed_json(cost_cdc)}, {"edc", jsonu::fixed_json(cost_edc)}, {"mec", jsonu::fixed_json(cost_mec)}}},
              {"node_capacity", {{"cpu", jsonu::fixed_json(node_cpu)}, {"memory_mib", jsonu::fixed_json(node_memory_mib)}}},
              {"users_per_mec", users_per_mec},
              {"periods", std::move(p)},
              {"hotspot",
               {{"app", hotspot.app},
                {"users", hotspot.users},
                {"add_at", time_json(hotspot.add_at)},
                {"relocate_at", time_json(hotspot.relocate_at)},
                {"remove_at", time_json(hotspot.remove_at)},
                {"remove_fraction", hotspot.remove_fraction},
                {"period", time_json(hotspot.period)}}},
              {"horizon", time_json(horizon)},
              {"window", time_json(window)},
              {"random_replicas", random_replicas}};
  if (!applications.empty()) doc["applications"] = applications_to_json(applications);
  return doc;
}

ScenarioSpec ScenarioSpec::from_json(const json& doc) {
  const std::string p = "$";
  std::string profile = jsonu::get_string_or(doc, "profile", p, "full");
  ScenarioSpec s = profile == "reduced" ? reduced_profile() : full_profile();
  s.profile = profile;
  if (doc.contains("clusters")) {
    const json& c = doc.at("clusters");
    s.cdc = c.value("cdc", s.cdc);
    s.edc = c.value("edc", s.edc);
    s.mec = c.value("mec", s.mec);
  }
  s.total_nodes = doc.value("total_nodes", s.total_nodes);
  s.pinned_total = doc.value("pinned_total", s.pinned_total);
  if (doc.contains("node_costs")) {
    const json& c = doc.at("node_costs");
    if (auto v = jsonu::get_fixed_opt(c, "cdc", p + ".node_costs")) s.cost_cdc = *v;
    if (auto v = jsonu::get_fixed_opt(c, "edc", p + ".node_costs")) s.cost_edc = *v;
    if (auto v = jsonu::get_fixed_opt(c, "mec", p + ".node_costs")) s.cost_mec = *v;
  }
  if (doc.contains("node_capacity")) {
    const json& c = doc.at("node_capacity");
    if (auto v = jsonu::get_fixed_opt(c, "cpu", p + ".node_capacity")) s.node_cpu = *v;
    if (auto v = jsonu::get_fixed_opt(c, "memory_mib", p + ".node_capacity")) s.node_memory_mib = *v;
  }
  s.users_per_mec = doc.value("users_per_mec", s.users_per_mec);
  if (doc.contains("periods"))
    for (const auto& [app, t] : doc.at("periods").items()) s.periods[app] = jsonu::to_fixed(t, p + ".periods." + app);
  if (doc.contains("hotspot")) {
    const json& h = doc.at("hotspot");
    const std::string hp = p + ".hotspot";
    s.hotspot.app = jsonu::get_string_or(h, "app", hp, s.hotspot.app);
    s.hotspot.users = h.value("users", s.hotspot.users);
    if (auto v = jsonu::get_fixed_opt(h, "add_at", hp)) s.hotspot.add_at = *v;
    if (auto v = jsonu::get_fixed_opt(h, "relocate_at", hp)) s.hotspot.relocate_at = *v;
    if (auto v = jsonu::get_fixed_opt(h, "remove_at", hp)) s.hotspot.remove_at = *v;
    if (auto v = jsonu::get_fixed_opt(h, "period", hp)) s.hotspot.period = *v;
    s.hotspot.remove_fraction = h.value("remove_fraction", s.hotspot.remove_fraction);
  }
  if (auto v = jsonu::get_fixed_opt(doc, "horizon", p)) s.horizon = *v;
  if (auto v = jsonu::get_fixed_opt(doc, "window", p)) s.window = *v;
  s.random_replicas = doc.value("random_replicas", s.random_replicas);
  if (doc.contains("applications")) s.applications = load_applications(doc.at("applications"));
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// scenario construction

BuiltScenario build_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  BuiltScenario b;
  Scenario& s = b.scenario;
  s.name = spec.profile + "-seed" + std::to_string(seed);
  s.seed = seed;
  s.applications = spec.applications.empty() ? evaluation_applications() : spec.applications;

  struct Tier {
    const char* prefix;
    const char* role;
    std::size_t count;
    Fixed cost;
  };
  const Tier tiers[] = {{"cdc", "CDC", spec.cdc, spec.cost_cdc}, {"edc", "EDC", spec.edc, spec.cost_edc},
                        {"mec", "MEC", spec.mec, spec.cost_mec}};
  // An EDC and the MEC clusters hanging off it share a region; CDCs form the core.
  auto region_of = [&](const std::string& prefix, std::size_t i) {
    if (std::string(prefix) == "cdc") return std::string("region-core");
    return "region-" + std::to_string(std::string(prefix) == "edc" ? i : i % spec.edc);
  };

  std::vector<std::pair<std::string, const Tier*>> names;
  for (const auto& t : tiers)
    for (std::size_t i = 0; i < t.count; ++i) names.emplace_back(std::string(t.prefix) + "-" + std::to_string(i), &t);
  std::vector<std::size_t> size(names.size(), 2);
  Rng rng = make_stream(seed, "harness-node-distribution");
  for (std::size_t extra = spec.total_nodes - 2 * names.size(); extra > 0; --extra) ++size[uniform_index(rng, names.size())];

  std::vector<ClusterSpec> clusters;
  for (std::size_t c = 0; c < names.size(); ++c) {
    const Tier& t = *names[c].second;
    std::size_t idx = std::stoul(names[c].first.substr(4));
    ClusterSpec cs{names[c].first, t.role, region_of(t.prefix, idx), {}};
    cs.nodes.push_back(NodeSpec{"cp", NodeRole::control_plane, spec.node_cpu, spec.node_memory_mib, t.cost});
    for (std::size_t w = 0; w + 1 < size[c]; ++w)
      cs.nodes.push_back(NodeSpec{"worker-" + std::to_string(w), NodeRole::worker, spec.node_cpu, spec.node_memory_mib, t.cost});
    clusters.push_back(std::move(cs));
  }

  std::vector<LinkSpec> links;
  auto link = [&](const std::string& a, const std::string& b, std::int64_t latency, std::int64_t km, std::int64_t bw) {
    links.push_back(LinkSpec{a, b, Fixed::units(km), Fixed::units(latency), Fixed::units(bw)});
  };
  auto id = [](const char* p, std::size_t i) { return std::string(p) + "-" + std::to_string(i); };
  for (std::size_t i = 0; i < spec.cdc; ++i)
    for (std::size_t j = i + 1; j < spec.cdc; ++j) link(id("cdc", i), id("cdc", j), 30, 1000, 1000);
  for (std::size_t j = 0; j < spec.edc; ++j) {
    link(id("edc", j), id("cdc", j % spec.cdc), 20, 400, 1000);
    if (spec.edc > 2 || (spec.edc == 2 && j == 0)) link(id("edc", j), id("edc", (j + 1) % spec.edc), 10, 150, 1000);
  }
  for (std::size_t i = 0; i < spec.mec; ++i) {
    link(id("mec", i), id("edc", i % spec.edc), 5, 40, 500);
    if (i + spec.edc < spec.mec) link(id("mec", i), id("mec", i + spec.edc), 3, 20, 500);
  }
  s.topology = Topology::build(clusters, links);

  // Nominal users on MEC workers.
  Rng homes = make_stream(seed, "harness-user-homes");
  std::vector<std::vector<std::string>> mec_workers(spec.mec);
  for (std::size_t i = 0; i < spec.mec; ++i)
    for (const auto& n : clusters[spec.cdc + spec.edc + i].nodes)
      if (n.role == NodeRole::worker) mec_workers[i].push_back(global_node_id(id("mec", i), n.name));
  for (std::size_t i = 0; i < spec.mec; ++i)
    for (const auto& app : s.applications)
      for (std::size_t u = 0; u < spec.users_per_mec; ++u) {
        const auto& ws = mec_workers[i];
        s.users.push_back(UserSpec{app.name, ws[uniform_index(homes, ws.size())],
                                   Distribution::deterministic(spec.periods.at(app.name)), ""});
      }

  // Hotspot node, then the neighbour: a worker of the nearest other MEC
  // cluster by cluster hops, drawn uniformly among the nearest.
  Rng hot = make_stream(seed, "harness-hotspot");
  std::size_t hc = uniform_index(hot, spec.mec);
  b.hotspot_node = mec_workers[hc][uniform_index(hot, mec_workers[hc].size())];
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& l : links) {
    adj[l.a].push_back(l.b);
    adj[l.b].push_back(l.a);
  }
  std::map<std::string, std::size_t> dist{{id("mec", hc), 0}};
  std::queue<std::string> q;
  q.push(id("mec", hc));
  while (!q.empty()) {
    std::string c = q.front();
    q.pop();
    for (const auto& n : adj[c])
      if (!dist.count(n)) {
        dist[n] = dist[c] + 1;
        q.push(n);
      }
  }
  std::vector<std::string> nearest;
  std::size_t best = SIZE_MAX;
  for (std::size_t i = 0; i < spec.mec; ++i) {
    if (i == hc || !dist.count(id("mec", i))) continue;
    std::size_t d = dist[id("mec", i)];
    if (d < best) best = d, nearest.clear();
    if (d == best) nearest.insert(nearest.end(), mec_workers[i].begin(), mec_workers[i].end());
  }
  if (nearest.empty())  // a single MEC cluster: relocate inside it
    for (const auto& w : mec_workers[hc])
      if (w != b.hotspot_node) nearest.push_back(w);
  b.neighbor_node = nearest.empty() ? b.hotspot_node : nearest[uniform_index(hot, nearest.size())];

  ProcessSpec p;
  p.name = "hotspot-users";
  p.kind = ProcessKind::hotspot_users;
  p.distribution = Distribution::deterministic(spec.window);
  p.params = {{"app_ref", spec.hotspot.app},
              {"user_distribution", distribution_to_json(Distribution::deterministic(spec.hotspot.period))},
              {"steps",
               {{{"time", time_json(spec.hotspot.add_at)}, {"action", "add"}, {"count", spec.hotspot.users}, {"node", b.hotspot_node}},
                {{"time", time_json(spec.hotspot.relocate_at)}, {"action", "relocate"}, {"node", b.neighbor_node}},
                {{"time", time_json(spec.hotspot.remove_at)}, {"action", "remove"}, {"fraction", spec.hotspot.remove_fraction}}}}};
  s.processes.push_back(std::move(p));

  s.extra["spec"] = spec.to_json();
  s.extra["hotspot"] = {{"node", b.hotspot_node}, {"neighbor", b.neighbor_node}};
  return b;
}

void write_built_scenario(const BuiltScenario& b, const std::filesystem::path& dir) { write_scenario_dir(b.scenario, dir); }

BuiltScenario load_built_scenario(const std::filesystem::path& dir) {
  BuiltScenario b;
  b.scenario = load_scenario_dir(dir);
  const json& h = b.scenario.extra.value("hotspot", json::object());
  b.hotspot_node = h.value("node", "");
  b.neighbor_node = h.value("neighbor", "");
  return b;
}

// ---------------------------------------------------------------------------
// comparison

const StrategyResult& ComparisonReport::result(const std::string& strategy) const {
  for (const auto& r : results)
    if (r.strategy == strategy) return r;
  fail(ErrorCode::not_found, "no result for strategy '" + strategy + "'");
}

json ComparisonReport::to_json() const {
  json rs = json::array();
  for (const auto& r : results) {
    json series = json::array();
    for (const auto& p : r.series)
      series.push_back({{"app", p.app},
                        {"k", p.k},
                        {"window_start", p.window.start.to_double()},
                        {"window_end", p.window.end.to_double()},
                        {"requests", p.requests},
                        {"successful", p.successful},
                        {"failed", p.failed},
                        {"response_mean", p.response_mean},
                        {"response_p95", p.response_p95},
                        {"network", p.network_mean},
                        {"waiting", p.waiting_mean},
                        {"processing", p.processing_mean}});
    json j = {{"strategy", r.strategy},
              {"simulation_id", r.simulation_id},
              {"final_clock", r.final_clock.str()},
              {"replicas", r.replicas},
              {"expected_dedicated_replicas", r.expected_dedicated_replicas},
              {"placement_cost", r.placement_cost},
              {"trace_hash", r.trace_hash},
              {"totals", r.totals},
              {"placement", r.placement},
              {"series", std::move(series)}};
    if (r.loop) j["loop"] = r.loop->to_json();
    rs.push_back(std::move(j));
  }
  return {{"scenario", scenario},
          {"seed", seed},
          {"hotspot", {{"node", hotspot_node}, {"neighbor", neighbor_node}}},
          {"horizon", horizon.str()},
          {"window", window.str()},
          {"agent_config", agent_config},
          {"results", std::move(rs)}};
}

namespace {

StrategyResult run_one(McpGateway& gw, const std::string& parent, const std::string& strategy, Time horizon, Time window,
                       const ComparisonOptions& opt, std::size_t replicas) {
  McpClient c(std::make_unique<LoopbackTransport>(gw), strategy);
  c.initialize();
  StrategyResult r;
  r.strategy = strategy;
  r.simulation_id = c.call("fork_simulation", {{"simulation_id", parent}, {"name", strategy}}).at("simulation_id");
  const json sim = {{"simulation_id", r.simulation_id}};

  json apps = c.call("list_simulation_deployed_applications", sim);
  std::map<std::string, std::size_t> chain_length;
  for (const auto& a : apps.at("applications")) chain_length[a.at("name")] = a.at("vnfs").size();
  json initial_users = c.call("list_simulation_users", sim);
  for (const auto& u : initial_users.at("users")) r.expected_dedicated_replicas += chain_length.at(u.at("app"));

  if (strategy == "random") {
    r.placement = random_placement(c, r.simulation_id, replicas, opt.placement_seed);
  } else if (strategy == "greedy") {
    r.placement = greedy_placement(c, r.simulation_id);
  } else if (strategy == "multi-agent" || strategy == "control") {
    r.placement = random_placement(c, r.simulation_id, replicas, opt.placement_seed);
  } else {
    fail(ErrorCode::invalid_argument, "unknown strategy '" + strategy + "'");
  }

  if (strategy == "multi-agent" || strategy == "control") {
    AgentConfig cfg = strategy == "control" ? AgentConfig::disabled() : opt.agent;
    cfg.window = window;
    r.loop = run_control_loop(c, r.simulation_id, horizon, cfg);
  } else {
    json args = sim;
    args["until"] = horizon.raw() % Fixed::kScale == 0 ? json(horizon.raw() / Fixed::kScale) : json(horizon.to_double());
    args["step"] = window.raw() % Fixed::kScale == 0 ? json(window.raw() / Fixed::kScale) : json(window.to_double());
    c.call("schedule_for", args);
    c.call("wait_simulation_until_ready", {{"simulation_id", r.simulation_id}, {"timeout_ms", 3600000}});
  }

  r.final_clock = Time::parse(c.call("get_simulation_state", sim).at("clock_exact").get<std::string>());
  for (std::int64_t k = 0; Time::from_raw(k * window.raw()) < horizon; ++k) {
    Window w{Time::from_raw(k * window.raw()), std::min(Time::from_raw((k + 1) * window.raw()), horizon)};
    json args = sim;
    args["window_start"] = w.start.str();
    args["window_end"] = w.end.str();
    json m = c.call("get_simulation_application_metrics", args);
    for (const auto& a : m.at("applications")) {
      SeriesPoint p;
      p.app = a.at("app");
      p.k = k;
      p.window = w;
      p.requests = a.at("requests");
      p.successful = a.at("successful");
      p.failed = a.at("failed");
      p.response_mean = num_or_null(a.at("response_mean"));
      p.response_p95 = num_or_null(a.at("response_p95"));
      p.network_mean = num_or_null(a.at("network_mean"));
      p.waiting_mean = num_or_null(a.at("waiting_mean"));
      p.processing_mean = num_or_null(a.at("processing_mean"));
      r.series.push_back(std::move(p));
    }
  }
  json whole = sim;
  whole["window_start"] = 0;
  whole["window_end"] = horizon.str();
  json totals = c.call("get_simulation_application_metrics", whole);
  r.totals = json::object();
  for (const auto& a : totals.at("applications")) {
    json t = a;
    t.erase("text");
    r.totals[a.at("app").get<std::string>()] = std::move(t);
  }

  json end_apps = c.call("list_simulation_deployed_applications", sim);
  for (const auto& a : end_apps.at("applications")) r.replicas += a.at("deployments").get<std::size_t>();
  json procs = c.call("list_simulation_processes", sim);
  for (const auto& p : procs.at("processes")) {
    const json& params = p.value("params", json::object());
    if (params.contains("app_ref") && chain_length.count(params.at("app_ref")))
      r.expected_dedicated_replicas += p.at("spawned_total").get<std::size_t>() * chain_length.at(params.at("app_ref"));
  }
  r.placement_cost = c.call("get_simulation_network_metrics", whole).at("placement_cost").at("total");
  r.trace_hash = c.call("get_simulation_trace_hash", sim).at("trace_hash");
  return r;
}

}  // namespace

ComparisonReport run_comparison(McpGateway& gw, const BuiltScenario& built, std::uint64_t seed, const ComparisonOptions& opt) {
  const Scenario& s = built.scenario;
  ScenarioSpec spec = s.extra.contains("spec") ? ScenarioSpec::from_json(s.extra.at("spec")) : reduced_profile();
  ComparisonReport report;
  report.scenario = s.name;
  report.seed = seed;
  report.hotspot_node = built.hotspot_node;
  report.neighbor_node = built.neighbor_node;
  report.horizon = opt.horizon.value_or(spec.horizon);
  report.window = opt.window.value_or(spec.window);
  report.agent_config = opt.agent.to_json();
  opt.agent.validate();

  McpClient harness(std::make_unique<LoopbackTransport>(gw), "harness");
  harness.initialize();
  std::string parent = harness.call("create_simulation", {{"documents", scenario_documents(s)}, {"name", s.name}})
                           .at("simulation_id");
  harness.call("initialize_simulation", {{"simulation_id", parent}});

  std::vector<std::string> runs = opt.strategies;
  if (opt.control) runs.push_back("control");
  std::vector<StrategyResult> results(runs.size());
  std::vector<std::exception_ptr> errors(runs.size());
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < runs.size(); ++i)
    threads.emplace_back([&, i] {
      try {
        results[i] = run_one(gw, parent, runs[i], report.horizon, report.window, opt, spec.random_replicas);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  report.results = std::move(results);
  return report;
}

// ---------------------------------------------------------------------------
// plot data

std::map<std::string, std::string> export_plots_data(const json& report) {
  auto quote = [](const std::string& v) {
    if (v.find_first_of(",\"\n") == std::string::npos) return v;
    std::string out = "\"";
    for (char c : v) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
  };
  auto value = [](const json& v) -> std::string {
    if (v.is_null()) return "";
    std::ostringstream o;
    o << v.get<double>();
    return o.str();
  };

  std::ostringstream comp;
  comp << "strategy,app,window_start,window_end,component,value\n";
  std::ostringstream acts;
  acts << "strategy,window,strategy_selected,action_kind,count\n";
  std::ostringstream mon;
  mon << "strategy,window,congested_links,overloaded_nodes,placement_cost\n";
  for (const auto& r : report.at("results")) {
    std::string st = r.at("strategy");
    for (const auto& p : r.at("series"))
      for (const char* c : {"network", "waiting", "processing", "response_mean", "response_p95", "requests", "failed"}) {
        const json& v = p.at(c);
        comp << quote(st) << ',' << quote(p.at("app")) << ',' << value(p.at("window_start")) << ','
             << value(p.at("window_end")) << ',' << c << ',' << (v.is_number_integer() ? std::to_string(v.get<std::int64_t>()) : value(v))
             << '\n';
      }
    if (!r.contains("loop")) continue;
    for (const auto& w : r.at("loop").at("windows")) {
      std::map<std::string, std::size_t> counts = {{"consolidate", 0}, {"replicate", 0}, {"move", 0}};
      for (const auto& a : w.at("actions")) ++counts[a.at("kind")];
      for (const auto& [kind, n] : counts)
        acts << st << ',' << w.at("k") << ',' << w.at("strategy").get<std::string>() << ',' << kind << ',' << n << '\n';
      const json& snap = w.at("snapshot");
      mon << st << ',' << w.at("k") << ',' << snap.at("congested").size() << ',' << snap.at("overloaded").size() << ','
          << snap.at("placement_cost").get<std::string>() << '\n';
    }
  }
  return {{"response_components.csv", comp.str()}, {"actions.csv", acts.str()}, {"monitored.csv", mon.str()}};
}

}  // namespace cesim
