#include "cesim/agents.hpp"

#include <algorithm>

#include "cesim/error.hpp"
#include "cesim/json_util.hpp"
#include "cesim/workload.hpp"

namespace cesim {

using json = nlohmann::json;

namespace {

constexpr Strategy kStrategies[] = {Strategy::cost, Strategy::overload, Strategy::congestion, Strategy::balanced};

Ratio exact_ratio(const json& v) {
  if (v.is_string()) return parse_ratio(v.get<std::string>());
  return jsonu::to_fixed(v, "$").to_ratio();
}

Fixed fixed_of(const json& v) { return jsonu::to_fixed(v, "$"); }

// Tool arguments typed "number"; the decimal rendering parses back exactly.
json time_arg(Time t) {
  if (t.raw() % Fixed::kScale == 0) return t.raw() / Fixed::kScale;
  return t.to_double();
}

}  // namespace

// ---------------------------------------------------------------------------
// configuration

void AgentConfig::validate() const {
  auto positive = [](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::invalid_argument, std::string(what) + " must be > 0");
  };
  positive(node_threshold > 0, "node_threshold");
  positive(link_threshold > 0, "link_threshold");
  positive(cost_threshold > Fixed{}, "cost_threshold");
  positive(region_penalty > Fixed{}, "region_penalty");
  positive(overload_windows >= 1, "overload_windows");
  positive(window > Time{}, "window");
  if (budget < 1) fail(ErrorCode::invalid_argument, "budget must be >= 1");
  for (Strategy s : kStrategies)
    if (!weights.count(s)) fail(ErrorCode::invalid_argument, "missing weights for strategy " + std::string(to_string(s)));
}

json AgentConfig::to_json() const {
  json w = json::object();
  for (const auto& [s, v] : weights) w[std::string(to_string(s))] = {{"alpha", v.alpha.str()}, {"beta", v.beta.str()}};
  json lat = json::object();
  for (const auto& [app, t] : latency_requirements) lat[app] = t.str();
  return {{"node_threshold", format_ratio(node_threshold)},
          {"overload_windows", overload_windows},
          {"link_threshold", format_ratio(link_threshold)},
          {"cost_threshold", cost_threshold.str()},
          {"region_penalty", region_penalty.str()},
          {"budget", budget},
          {"weights", std::move(w)},
          {"window", window.str()},
          {"latency_requirements", std::move(lat)}};
}

AgentConfig AgentConfig::from_json(const json& doc) {
  if (!doc.is_object()) jsonu::schema_error("$", "agent config must be an object");
  AgentConfig c;
  if (doc.contains("node_threshold")) c.node_threshold = exact_ratio(doc.at("node_threshold"));
  if (doc.contains("link_threshold")) c.link_threshold = exact_ratio(doc.at("link_threshold"));
  if (doc.contains("overload_windows")) c.overload_windows = doc.at("overload_windows").get<std::int64_t>();
  if (doc.contains("budget")) c.budget = doc.at("budget").get<std::int64_t>();
  if (auto v = jsonu::get_fixed_opt(doc, "cost_threshold", "$")) c.cost_threshold = *v;
  if (auto v = jsonu::get_fixed_opt(doc, "region_penalty", "$")) c.region_penalty = *v;
  if (auto v = jsonu::get_fixed_opt(doc, "window", "$")) c.window = *v;
  if (doc.contains("weights")) {
    for (const auto& [name, w] : doc.at("weights").items()) {
      Strategy s = strategy_from(name);
      std::string p = "$.weights." + name;
      c.weights[s] = {jsonu::get_fixed(w, "alpha", p), jsonu::get_fixed(w, "beta", p)};
    }
  }
  if (doc.contains("latency_requirements"))
    for (const auto& [app, t] : doc.at("latency_requirements").items())
      c.latency_requirements[app] = jsonu::to_fixed(t, "$.latency_requirements." + app);
  c.validate();
  return c;
}

AgentConfig AgentConfig::disabled() {
  AgentConfig c;
  c.node_threshold = Ratio(1000000);
  c.link_threshold = Ratio(1000000);
  c.cost_threshold = Fixed::units(1000000000);
  return c;
}

// ---------------------------------------------------------------------------
// monitoring

std::set<std::string> WindowSnapshot::degraded_apps() const {
  std::set<std::string> out;
  for (const auto& [name, a] : apps)
    if (a.degraded) out.insert(name);
  return out;
}

std::set<std::string> WindowSnapshot::affected_apps() const {
  std::set<std::string> out;
  for (const auto& [name, a] : apps)
    if (a.degraded || a.unsuccessful > 0) out.insert(name);
  return out;
}

json WindowSnapshot::to_json() const {
  json a = json::object();
  for (const auto& [name, s] : apps)
    a[name] = {{"requests", s.requests},
               {"unsuccessful", s.unsuccessful},
               {"response_p95", s.response_p95 ? json(s.response_p95->str()) : json(nullptr)},
               {"latency_requirement", s.latency_requirement.str()},
               {"degraded", s.degraded}};
  auto ratios = [](const std::map<std::string, Ratio>& m) {
    json o = json::object();
    for (const auto& [k, v] : m) o[k] = format_ratio(v);
    return o;
  };
  return {{"k", k},
          {"window", {{"start", window.start.str()}, {"end", window.end.str()}}},
          {"apps", std::move(a)},
          {"node_utilization", ratios(node_utilization)},
          {"overloaded", overloaded},
          {"link_utilization", ratios(link_utilization)},
          {"congested", congested},
          {"placement_cost", placement_cost.str()}};
}

WindowSnapshot assemble_snapshot(std::int64_t k, const Window& w, const json& app_metrics, const json& network_metrics,
                                 const AgentConfig& config, std::map<std::string, std::int64_t>& streak) {
  WindowSnapshot s;
  s.k = k;
  s.window = w;
  for (const auto& a : app_metrics.at("applications")) {
    std::string name = a.at("app").get<std::string>();
    AppStatus st;
    st.requests = a.at("requests").get<std::int64_t>();
    st.unsuccessful = a.at("failed").get<std::int64_t>();
    const json& p95 = a.at("exact").at("response_p95");
    if (!p95.is_null()) st.response_p95 = Time::parse(p95.get<std::string>());
    auto over = config.latency_requirements.find(name);
    st.latency_requirement =
        over != config.latency_requirements.end() ? over->second : fixed_of(a.at("latency_requirement"));
    st.degraded = st.response_p95 && *st.response_p95 > st.latency_requirement;
    s.apps.emplace(std::move(name), st);
  }

  std::map<std::string, std::int64_t> next;
  for (const auto& [node, v] : network_metrics.at("nodes").items()) {
    Ratio u = exact_ratio(v.at("utilization_exact"));
    s.node_utilization[node] = u;
    if (u > config.node_threshold) {
      auto it = streak.find(node);
      std::int64_t run = (it == streak.end() ? 0 : it->second) + 1;
      next[node] = run;
      if (run >= config.overload_windows) s.overloaded.insert(node);
    }
  }
  streak = std::move(next);

  for (const auto& [link, v] : network_metrics.at("links").items()) {
    Ratio u = exact_ratio(v.at("utilization_exact"));
    s.link_utilization[link] = u;
    if (u > config.link_threshold) s.congested.insert(link);
  }
  s.placement_cost = fixed_of(network_metrics.at("placement_cost").at("total"));
  return s;
}

namespace {

json window_args(const std::string& sim, const Window& w) {
  return {{"simulation_id", sim}, {"window_start", w.start.str()}, {"window_end", w.end.str()}};
}

}  // namespace

WindowSnapshot MonitoringAgent::observe(McpClient& client, const std::string& sim, std::int64_t k, const Window& w) {
  json apps = client.call("get_simulation_application_metrics", window_args(sim, w), k);
  json net_args = window_args(sim, w);
  net_args["node_threshold"] = format_ratio(config_.node_threshold);
  net_args["link_threshold"] = format_ratio(config_.link_threshold);
  json net = client.call("get_simulation_network_metrics", net_args, k);
  return assemble_snapshot(k, w, apps, net, config_, streak_);
}

Strategy select_strategy(const WindowSnapshot& s, const AgentConfig& config) {
  if (s.placement_cost > config.cost_threshold) return Strategy::cost;
  if (!s.overloaded.empty()) return Strategy::overload;
  if (!s.congested.empty()) return Strategy::congestion;
  return Strategy::balanced;
}

// ---------------------------------------------------------------------------
// placement context

PlacementContext PlacementContext::fetch(McpClient& client, const std::string& sim) {
  PlacementContext ctx;
  json id = {{"simulation_id", sim}};
  for (json reply = client.call("list_simulation_nodes", id); const auto& n : reply.at("nodes")) {
    NodeInfo info;
    info.cluster = n.at("cluster").get<std::string>();
    info.region = n.at("region").get<std::string>();
    info.cost = fixed_of(n.at("cost"));
    info.cpu_free = fixed_of(n.at("cpu")) - fixed_of(n.at("used_cpu"));
    info.memory_free = fixed_of(n.at("memory_mib")) - fixed_of(n.at("used_memory_mib"));
    info.up = n.at("up").get<bool>();
    ctx.nodes.emplace(n.at("id").get<std::string>(), info);
  }
  for (json reply = client.call("list_simulation_deployed_applications", id); const auto& a : reply.at("applications")) {
    std::string name = a.at("name").get<std::string>();
    AppInfo info;
    info.latency_requirement = fixed_of(a.at("latency_requirement"));
    json args = id;
    args["app"] = name;
    for (json reply = client.call("list_simulation_application_vnfs", args); const auto& v : reply.at("vnfs")) {
      StageInfo st;
      st.vnf = v.at("name").get<std::string>();
      st.cpu = fixed_of(v.at("cpu"));
      st.memory = fixed_of(v.at("memory_mib"));
      for (const auto& d : v.at("deployments")) st.replicas.push_back(d.at("node").get<std::string>());
      info.stages.push_back(std::move(st));
    }
    ctx.apps.emplace(std::move(name), std::move(info));
  }
  std::set<std::string> targets;
  for (json reply = client.call("list_simulation_users", id); const auto& u : reply.at("users")) {
    auto it = ctx.apps.find(u.at("app").get<std::string>());
    if (it == ctx.apps.end()) continue;
    it->second.user_nodes.push_back(u.at("node").get<std::string>());
    targets.insert(u.at("node").get<std::string>());
  }
  if (!targets.empty()) {
    json args = id;
    args["targets"] = std::vector<std::string>(targets.begin(), targets.end());
    json d = client.call("get_simulation_node_distances", args);
    std::vector<std::string> order = d.at("targets").get<std::vector<std::string>>();
    for (const auto& [node, row] : d.at("hops").items())
      for (std::size_t i = 0; i < order.size(); ++i) {
        std::int64_t h = row.at(i).get<std::int64_t>();
        if (h >= 0) ctx.hops[node][order[i]] = h;
      }
  }
  return ctx;
}

std::string PlacementContext::dominant_region(const std::string& app) const {
  std::map<std::string, std::size_t> count;
  for (const auto& u : apps.at(app).user_nodes) {
    auto it = nodes.find(u);
    if (it != nodes.end()) ++count[it->second.region];
  }
  std::string best;
  std::size_t most = 0;
  for (const auto& [region, c] : count)  // ordered: the first maximum has the smallest id
    if (c > most) {
      most = c;
      best = region;
    }
  return best;
}

std::optional<Ratio> PlacementContext::mean_user_distance(const std::string& app, const std::string& node) const {
  const auto& users = apps.at(app).user_nodes;
  if (users.empty()) return Ratio(0);
  auto row = hops.find(node);
  if (row == hops.end()) return std::nullopt;
  std::int64_t sum = 0;
  for (const auto& u : users) {
    auto h = row->second.find(u);
    if (h == row->second.end()) return std::nullopt;
    sum += h->second;
  }
  return Ratio(sum, static_cast<std::int64_t>(users.size()));
}

std::optional<Ratio> PlacementContext::stage_proximity(const std::string& app, std::size_t stage) const {
  const AppInfo& a = apps.at(app);
  if (a.user_nodes.empty()) return Ratio(0);
  std::int64_t sum = 0;
  for (const auto& u : a.user_nodes) {
    std::optional<std::int64_t> best;
    for (const auto& r : a.stages.at(stage).replicas) {
      auto row = hops.find(r);
      if (row == hops.end()) continue;
      auto h = row->second.find(u);
      if (h != row->second.end() && (!best || h->second < *best)) best = h->second;
    }
    if (!best) return std::nullopt;
    sum += *best;
  }
  return Ratio(sum, static_cast<std::int64_t>(a.user_nodes.size()));
}

bool PlacementContext::fits(const std::string& node, Fixed cpu, Fixed memory) const {
  auto it = nodes.find(node);
  return it != nodes.end() && it->second.up && cpu <= it->second.cpu_free && memory <= it->second.memory_free;
}

Fixed PlacementContext::placement_cost() const {
  Fixed total;
  for (const auto& [name, a] : apps)
    for (const auto& st : a.stages)
      for (const auto& r : st.replicas) total += nodes.at(r).cost;
  return total;
}

std::size_t PlacementContext::deployments_on(const std::string& node) const {
  std::size_t n = 0;
  for (const auto& [name, a] : apps)
    for (const auto& st : a.stages) n += static_cast<std::size_t>(std::count(st.replicas.begin(), st.replicas.end(), node));
  return n;
}

std::optional<Ratio> score_node(const PlacementContext& ctx, const WindowSnapshot& s, const std::string& app,
                                const std::string& node, Strategy strategy, const AgentConfig& config) {
  auto n = ctx.nodes.find(node);
  if (n == ctx.nodes.end() || !n->second.up) return std::nullopt;
  auto d = ctx.mean_user_distance(app, node);
  if (!d) return std::nullopt;
  ScoreInputs in;
  in.mean_user_distance = *d;
  auto u = s.node_utilization.find(node);
  in.utilization = u == s.node_utilization.end() ? Ratio(0) : u->second;
  in.cost = n->second.cost;
  std::string dominant = ctx.dominant_region(app);
  in.in_dominant_region = dominant.empty() || n->second.region == dominant;
  return placement_score(in, config.weights.at(strategy), config.region_penalty);
}

// ---------------------------------------------------------------------------
// action generation

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::consolidate: return "consolidate";
    case ActionKind::replicate: return "replicate";
    case ActionKind::move: return "move";
  }
  return "?";
}

json PlacementAction::to_json() const {
  return {{"kind", std::string(to_string(kind))},
          {"app", app},
          {"vnf", vnf},
          {"source", source.empty() ? json(nullptr) : json(source)},
          {"destination", destination},
          {"score", format_ratio(score)},
          {"justification", justification}};
}

namespace {

// Applies planned actions to a private copy of the context so later
// candidates see the projected placement, free capacity, cost and load.
class Planner {
 public:
  Planner(const WindowSnapshot& s, Strategy strategy, const AgentConfig& config, const PlacementContext& ctx)
      : config_(config), strategy_(strategy), ctx_(ctx), view_(s) {
    cost_ = s.placement_cost;
    plan_.strategy = strategy;
  }

  bool budget_left() const {
    return static_cast<std::int64_t>(plan_.actions.size()) + reserved_ < config_.budget;
  }
  // Slots held back for subsequent actions whose condition already holds,
  // so the primary action cannot starve them. The primary keeps at least one.
  void reserve(std::int64_t n) { reserved_ = std::clamp<std::int64_t>(n, 0, config_.budget - 1); }
  void release() { reserved_ = std::max<std::int64_t>(reserved_ - 1, 0); }

  bool over_cost() const { return cost_ > config_.cost_threshold; }

  bool overloaded(const std::string& node) const {
    return view_.overloaded.count(node) && utilization(node) > config_.node_threshold;
  }
  bool any_overloaded() const {
    for (const auto& n : view_.overloaded)
      if (overloaded(n)) return true;
    return false;
  }

  void consolidate() {
    while (budget_left() && over_cost()) {
      bool progressed = false;
      for (const auto& node : occupied_by_cost()) {
        for (const auto& [app, stage] : hosted(node)) {
          auto dst = best_destination(app, stage, [&](const std::string& n) {
            return ctx_.nodes.at(n).cost < ctx_.nodes.at(node).cost;
          });
          if (!dst) {
            drop("consolidate " + label(app, stage) + " from " + node + ": no cheaper feasible node");
            continue;
          }
          emit(ActionKind::consolidate, app, stage, node, *dst,
               "cost: placement cost " + cost_.str() + " > " + config_.cost_threshold.str());
          progressed = true;
          break;
        }
        if (progressed) break;
      }
      if (!progressed) break;
    }
  }

  // One replica per affected application, strictest latency first. With
  // `all_apps`, every application with users counts as affected.
  void replicate(bool all_apps) {
    std::set<std::string> targets = view_.affected_apps();
    if (targets.empty() && all_apps)
      for (const auto& [name, a] : ctx_.apps)
        if (!a.user_nodes.empty()) targets.insert(name);
    for (const auto& app : by_latency(targets)) {
      if (!budget_left()) return;
      if (!ctx_.apps.count(app) || ctx_.apps.at(app).stages.empty()) continue;
      std::size_t stage = worst_stage(app);
      const auto& replicas = ctx_.apps.at(app).stages[stage].replicas;
      auto dst = best_destination(app, stage, [&](const std::string& n) {
        return std::find(replicas.begin(), replicas.end(), n) == replicas.end();
      });
      if (!dst) {
        drop("replicate " + label(app, stage) + ": no feasible node");
        continue;
      }
      std::string why = view_.apps.count(app) && view_.apps.at(app).degraded ? "degraded: p95 above requirement"
                        : view_.apps.count(app) && view_.apps.at(app).unsuccessful > 0 ? "unsuccessful requests"
                                                                                        : "congested links";
      emit(ActionKind::replicate, app, stage, "", *dst, std::string(to_string(strategy_)) + ": " + why);
    }
  }

  void move() {
    while (budget_left()) {
      bool progressed = false;
      for (const auto& node : overloaded_by_load()) {
        for (const auto& [app, stage] : hosted_by_latency(node)) {
          Ratio src_u = utilization(node);
          auto dst = best_destination(app, stage, [&](const std::string& n) { return n != node && utilization(n) < src_u; });
          if (!dst) {
            drop("move " + label(app, stage) + " off " + node + ": no less loaded feasible node");
            continue;
          }
          emit(ActionKind::move, app, stage, node, *dst,
               std::string(to_string(strategy_)) + ": " + node + " utilization " + format_ratio(src_u) + " > " +
                   format_ratio(config_.node_threshold));
          progressed = true;
          break;
        }
        if (progressed) break;
      }
      if (!progressed) break;
    }
  }

  ActionPlan finish() { return std::move(plan_); }

 private:
  using Stage = std::pair<std::string, std::size_t>;

  Ratio utilization(const std::string& node) const {
    auto it = load_.find(node);
    if (it != load_.end()) return it->second;
    auto v = view_.node_utilization.find(node);
    return v == view_.node_utilization.end() ? Ratio(0) : v->second;
  }

  std::string label(const std::string& app, std::size_t stage) const {
    return app + "/" + ctx_.apps.at(app).stages.at(stage).vnf;
  }

  void drop(const std::string& what) {
    if (std::find(plan_.dropped.begin(), plan_.dropped.end(), what) == plan_.dropped.end()) plan_.dropped.push_back(what);
  }

  std::vector<std::string> by_latency(const std::set<std::string>& apps) const {
    std::vector<std::string> out(apps.begin(), apps.end());
    std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return latency(a) < latency(b); });
    return out;
  }

  Time latency(const std::string& app) const {
    auto o = config_.latency_requirements.find(app);
    if (o != config_.latency_requirements.end()) return o->second;
    auto it = ctx_.apps.find(app);
    return it == ctx_.apps.end() ? Time{} : it->second.latency_requirement;
  }

  std::vector<Stage> hosted(const std::string& node) const {
    std::vector<Stage> out;
    for (const auto& [name, a] : ctx_.apps)
      for (std::size_t i = 0; i < a.stages.size(); ++i)
        for (const auto& r : a.stages[i].replicas)
          if (r == node) out.emplace_back(name, i);
    return out;
  }

  std::vector<Stage> hosted_by_latency(const std::string& node) const {
    std::vector<Stage> out = hosted(node);
    std::stable_sort(out.begin(), out.end(), [&](const Stage& a, const Stage& b) { return latency(a.first) < latency(b.first); });
    return out;
  }

  std::vector<std::string> occupied_by_cost() const {
    std::set<std::string> occupied;
    for (const auto& [name, a] : ctx_.apps)
      for (const auto& st : a.stages) occupied.insert(st.replicas.begin(), st.replicas.end());
    std::vector<std::string> out(occupied.begin(), occupied.end());
    std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return ctx_.nodes.at(a).cost > ctx_.nodes.at(b).cost; });
    return out;
  }

  std::vector<std::string> overloaded_by_load() const {
    std::vector<std::string> out;
    for (const auto& n : view_.overloaded)
      if (overloaded(n)) out.push_back(n);
    std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return utilization(a) > utilization(b); });
    return out;
  }

  // Unreachable replicas count as worse than any reachable stage; ties go
  // to the earliest stage.
  std::size_t worst_stage(const std::string& app) const {
    const PlacementContext::AppInfo& a = ctx_.apps.at(app);
    std::size_t worst = 0;
    std::optional<std::optional<Ratio>> worst_p;
    for (std::size_t i = 0; i < a.stages.size(); ++i) {
      auto p = ctx_.stage_proximity(app, i);
      bool worse = !worst_p || (!p && *worst_p) || (p && *worst_p && *p > **worst_p);
      if (worse) {
        worst = i;
        worst_p = p;
      }
    }
    return worst;
  }

  template <class Pred>
  std::optional<std::string> best_destination(const std::string& app, std::size_t stage, Pred allowed) const {
    const auto& st = ctx_.apps.at(app).stages.at(stage);
    const WindowSnapshot& view = projected_view();
    std::optional<std::pair<Ratio, std::string>> best;
    for (const auto& [id, n] : ctx_.nodes) {
      if (!n.up || !ctx_.fits(id, st.cpu, st.memory) || !allowed(id)) continue;
      auto sc = score_node(ctx_, view, app, id, strategy_, config_);
      if (!sc) continue;
      if (!best || *sc < best->first) best = {{*sc, id}};  // map order breaks ties by node id
    }
    if (!best) return std::nullopt;
    last_score_ = best->first;
    return best->second;
  }

  const WindowSnapshot& projected_view() const {
    projected_.node_utilization = view_.node_utilization;
    for (const auto& [n, u] : load_) projected_.node_utilization[n] = u;
    return projected_;
  }

  void emit(ActionKind kind, const std::string& app, std::size_t stage, const std::string& from, const std::string& to,
            std::string why) {
    auto& st = ctx_.apps.at(app).stages.at(stage);
    PlacementAction a{kind, app, st.vnf, from, to, std::move(why), last_score_};
    auto& dst = ctx_.nodes.at(to);
    dst.cpu_free -= st.cpu;
    dst.memory_free -= st.memory;
    cost_ += dst.cost;
    st.replicas.push_back(to);
    if (!from.empty()) {
      // The departing replica takes an even share of the source's load.
      Ratio src_u = utilization(from);
      Ratio share = src_u / static_cast<std::int64_t>(std::max<std::size_t>(ctx_.deployments_on(from), 1));
      load_[from] = src_u - share;
      load_[to] = utilization(to) + share;
      st.replicas.erase(std::find(st.replicas.begin(), st.replicas.end(), from));
      auto& src = ctx_.nodes.at(from);
      src.cpu_free += st.cpu;
      src.memory_free += st.memory;
      cost_ -= src.cost;
    }
    plan_.actions.push_back(std::move(a));
  }

  const AgentConfig& config_;
  Strategy strategy_;
  PlacementContext ctx_;
  const WindowSnapshot& view_;
  mutable WindowSnapshot projected_;
  std::map<std::string, Ratio> load_;
  Fixed cost_;
  mutable Ratio last_score_;
  ActionPlan plan_;
  std::int64_t reserved_ = 0;
};

}  // namespace

ActionPlan generate_actions(const WindowSnapshot& s, Strategy strategy, const AgentConfig& config,
                            const PlacementContext& ctx) {
  Planner p(s, strategy, config, ctx);
  const bool degraded = !s.degraded_apps().empty();
  switch (strategy) {
    case Strategy::cost:
      p.reserve(degraded + p.any_overloaded());
      p.consolidate();
      if (degraded) p.release(), p.replicate(false);
      p.release();
      if (p.any_overloaded()) p.move();
      break;
    case Strategy::overload:
      p.reserve(degraded + p.over_cost());
      p.move();
      if (degraded) p.release(), p.replicate(false);
      p.release();
      if (p.over_cost()) p.consolidate();
      break;
    case Strategy::congestion:
      p.reserve(p.any_overloaded() + p.over_cost());
      p.replicate(true);
      p.release();
      if (p.any_overloaded()) p.move();
      p.release();
      if (p.over_cost()) p.consolidate();
      break;
    case Strategy::balanced: break;
  }
  return p.finish();
}

// ---------------------------------------------------------------------------
// control loop

json WindowRecord::to_json() const {
  json acts = json::array();
  for (const auto& a : executed) acts.push_back(a.to_json());
  return {{"k", k},
          {"window", {{"start", window.start.str()}, {"end", window.end.str()}}},
          {"strategy", std::string(to_string(strategy))},
          {"snapshot", snapshot.to_json()},
          {"actions", std::move(acts)},
          {"dropped", dropped}};
}

std::size_t LoopReport::action_count(ActionKind k) const {
  std::size_t n = 0;
  for (const auto& w : windows)
    for (const auto& a : w.executed) n += a.kind == k;
  return n;
}

std::size_t LoopReport::action_count() const {
  std::size_t n = 0;
  for (const auto& w : windows) n += w.executed.size();
  return n;
}

json LoopReport::to_json() const {
  json ws = json::array();
  for (const auto& w : windows) ws.push_back(w.to_json());
  return {{"simulation_id", simulation_id},
          {"actions",
           {{"consolidate", action_count(ActionKind::consolidate)},
            {"replicate", action_count(ActionKind::replicate)},
            {"move", action_count(ActionKind::move)}}},
          {"windows", std::move(ws)}};
}

namespace {

Time current_clock(McpClient& client, const std::string& sim) {
  return Time::parse(client.call("get_simulation_state", {{"simulation_id", sim}}).at("clock_exact").get<std::string>());
}

}  // namespace

LoopReport run_control_loop(McpClient& client, const std::string& sim, Time horizon, const AgentConfig& config) {
  config.validate();
  LoopReport report;
  report.simulation_id = sim;
  MonitoringAgent monitor(config);
  Time clock = current_clock(client, sim);
  std::int64_t k = clock.raw() / config.window.raw();
  while (clock < horizon) {
    Window w{clock, std::min(clock + config.window, horizon)};
    client.call("run_simulation_for", {{"simulation_id", sim}, {"duration", time_arg(w.length())}}, k);
    json ready = client.call("wait_simulation_until_ready", {{"simulation_id", sim}, {"timeout_ms", 3600000}}, k);
    if (ready.at("status") != "paused")
      fail(ErrorCode::invalid_state, "simulation " + sim + " ended window " + std::to_string(k) + " as " +
                                         ready.at("status").get<std::string>());

    WindowRecord rec;
    rec.k = k;
    rec.window = w;
    rec.snapshot = monitor.observe(client, sim, k, w);
    rec.strategy = select_strategy(rec.snapshot, config);
    if (rec.strategy != Strategy::balanced) {
      PlacementContext ctx = PlacementContext::fetch(client, sim);
      ActionPlan plan = generate_actions(rec.snapshot, rec.strategy, config, ctx);
      rec.dropped = plan.dropped;
      for (auto& a : plan.actions) {
        try {
          if (a.kind == ActionKind::replicate)
            client.call("replicate_application_vnf",
                        {{"simulation_id", sim}, {"app", a.app}, {"vnf", a.vnf}, {"nodes", {a.destination}}}, k);
          else
            client.call("move_application_vnf",
                        {{"simulation_id", sim}, {"app", a.app}, {"vnf", a.vnf}, {"from", a.source}, {"to", a.destination}},
                        k);
          rec.executed.push_back(std::move(a));
        } catch (const McpToolError& e) {
          rec.dropped.push_back(std::string(to_string(a.kind)) + " " + a.app + "/" + a.vnf + " failed: " + e.what());
        }
      }
    }
    report.windows.push_back(std::move(rec));
    clock = w.end;
    ++k;
  }
  return report;
}

// ---------------------------------------------------------------------------
// baselines

json random_placement(McpClient& client, const std::string& sim, std::size_t replicas, std::uint64_t seed) {
  json id = {{"simulation_id", sim}};
  struct Free {
    Fixed cpu, memory;
  };
  std::vector<std::string> order;
  std::map<std::string, Free> free;
  for (json reply = client.call("list_simulation_nodes", id); const auto& n : reply.at("nodes")) {
    if (!n.at("up").get<bool>()) continue;
    std::string node = n.at("id").get<std::string>();
    order.push_back(node);
    free[node] = {fixed_of(n.at("cpu")) - fixed_of(n.at("used_cpu")),
                  fixed_of(n.at("memory_mib")) - fixed_of(n.at("used_memory_mib"))};
  }
  std::vector<std::string> apps;
  std::map<std::string, std::vector<Resources>> footprint;
  for (json reply = client.call("list_simulation_deployed_applications", id); const auto& a : reply.at("applications")) {
    std::string name = a.at("name").get<std::string>();
    json args = id;
    args["app"] = name;
    for (json reply = client.call("list_simulation_application_vnfs", args); const auto& v : reply.at("vnfs"))
      footprint[name].push_back({fixed_of(v.at("cpu")), fixed_of(v.at("memory_mib"))});
    apps.push_back(std::move(name));
  }
  if (apps.empty()) fail(ErrorCode::invalid_state, "no applications to place");

  Rng rng = make_stream(seed, "random-placement");
  json chains = json::array();
  std::size_t deployments = 0;
  for (std::size_t i = 0; i < replicas; ++i) {
    const std::string& app = apps[i % apps.size()];
    std::vector<std::string> nodes;
    for (const auto& need : footprint[app]) {
      std::vector<std::string> ok;
      for (const auto& n : order)
        if (need.cpu <= free[n].cpu && need.memory_mib <= free[n].memory) ok.push_back(n);
      if (ok.empty()) fail(ErrorCode::capacity, "no node can host another replica of " + app);
      const std::string& pick = ok[uniform_index(rng, ok.size())];
      free[pick].cpu -= need.cpu;
      free[pick].memory -= need.memory_mib;
      nodes.push_back(pick);
    }
    json args = id;
    args["app"] = app;
    args["nodes"] = nodes;
    json r = client.call("deploy_application_chain", args);
    deployments += nodes.size();
    chains.push_back({{"app", app}, {"instance", r.at("instance")}, {"nodes", nodes}});
  }
  client.call("set_user_placement_policy", {{"simulation_id", sim}, {"policy", "round_robin"}});
  return {{"simulation_id", sim}, {"chains", std::move(chains)}, {"deployments", deployments}};
}

json greedy_placement(McpClient& client, const std::string& sim) {
  client.call("set_user_placement_policy", {{"simulation_id", sim}, {"policy", "dedicated"}});
  json apps = client.call("list_simulation_deployed_applications", {{"simulation_id", sim}});
  std::size_t deployments = 0;
  for (const auto& a : apps.at("applications")) deployments += a.at("deployments").get<std::size_t>();
  return {{"simulation_id", sim}, {"deployments", deployments}};
}

}  // namespace cesim
