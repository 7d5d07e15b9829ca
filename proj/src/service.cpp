#include "cesim/service.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <thread>

#include "cesim/error.hpp"
#include "cesim/json_util.hpp"
#include "cesim/scoring.hpp"

namespace cesim {

using json = nlohmann::json;

std::string_view to_string(Lifecycle s) {
  switch (s) {
    case Lifecycle::created: return "created";
    case Lifecycle::initialized: return "initialized";
    case Lifecycle::running: return "running";
    case Lifecycle::paused: return "paused";
    case Lifecycle::stopped: return "stopped";
    case Lifecycle::failed: return "failed";
  }
  return "?";
}

bool legal_transition(Lifecycle from, Lifecycle to) {
  using L = Lifecycle;
  if (from == L::stopped || from == L::failed) return false;
  if (to == L::stopped || to == L::failed) return true;
  switch (from) {
    case L::created: return to == L::initialized;
    case L::initialized: return to == L::running;
    case L::running: return to == L::paused;
    case L::paused: return to == L::running;
    default: return false;
  }
}

struct SimulationService::Record {
  std::mutex m;
  std::condition_variable cv;
  std::string id;
  std::string name;
  Lifecycle state = Lifecycle::created;
  std::vector<Lifecycle> history;
  std::unique_ptr<Engine> engine;
  Scenario scenario;
  std::optional<std::string> parent;
  Time fork_clock;
  std::vector<std::string> children;
  std::atomic<std::int64_t> clock_raw{0};

  // Scheduled window; `target` is cleared once reached.
  std::optional<Time> target;
  Time window_start;
  Time step;
  bool pause_requested = false;
  bool stop_requested = false;
  std::uint64_t windows_completed = 0;
  std::string error;
  std::thread thread;

  ~Record() {
    if (thread.joinable()) {
      if (thread.get_id() == std::this_thread::get_id()) thread.detach();
      else thread.join();
    }
  }
};

namespace {

std::string status_detail(Lifecycle s) {
  switch (s) {
    case Lifecycle::created: return "created (not started yet)";
    case Lifecycle::initialized: return "initialized (ready to run)";
    case Lifecycle::running: return "running";
    case Lifecycle::paused: return "paused (idle at window boundary)";
    case Lifecycle::stopped: return "stopped (terminal)";
    case Lifecycle::failed: return "failed (terminal)";
  }
  return "?";
}

[[noreturn]] void state_error(const std::string& id, Lifecycle s, const std::string& what) {
  fail(ErrorCode::invalid_state, "simulation " + id + " is " + std::string(to_string(s)) + ": " + what);
}

json window_json(const Window& w) { return {{"start", w.start.to_double()}, {"end", w.end.to_double()}}; }

json distribution_view(const Distribution& d) { return distribution_to_json(d); }

}  // namespace

SimulationService::SimulationService(ServiceConfig config) : config_(std::move(config)), id_rng_(config_.seed) {}

SimulationService::~SimulationService() {
  std::vector<std::shared_ptr<Record>> all;
  {
    std::lock_guard lk(registry_mutex_);
    for (auto& [id, r] : records_) all.push_back(r);
  }
  for (auto& r : all) {
    std::unique_lock lk(r->m);
    if (r->state == Lifecycle::running) {
      r->stop_requested = true;
      r->cv.wait(lk, [&] { return r->state != Lifecycle::running; });
    }
    if (r->thread.joinable()) r->thread.join();
  }
}

// ---------------------------------------------------------------------------
// registry

std::shared_ptr<SimulationService::Record> SimulationService::find(const std::string& id) const {
  std::lock_guard lk(registry_mutex_);
  auto it = records_.find(id);
  if (it == records_.end()) fail(ErrorCode::not_found, "unknown simulation '" + id + "'");
  return it->second;
}

std::string SimulationService::new_id() {
  for (;;) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "sim-%08x", static_cast<unsigned>(id_rng_() & 0xffffffffu));
    if (!records_.count(buf)) return buf;
  }
}

std::string SimulationService::insert(std::unique_ptr<Engine> engine, Scenario scenario, const std::string& name,
                                      Lifecycle initial, std::optional<std::string> parent, Time fork_clock) {
  auto r = std::make_shared<Record>();
  r->name = name.empty() ? scenario.name : name;
  r->state = initial;
  r->history.push_back(initial);
  r->clock_raw = engine->clock().raw();
  r->engine = std::move(engine);
  r->scenario = std::move(scenario);
  r->parent = std::move(parent);
  r->fork_clock = fork_clock;
  std::lock_guard lk(registry_mutex_);
  r->id = new_id();
  records_[r->id] = r;
  return r->id;
}

std::string SimulationService::create_simulation(const Scenario& scenario, const std::string& name) {
  std::map<std::string, CustomHandler> handlers;
  {
    std::lock_guard lk(registry_mutex_);
    handlers = handlers_;
  }
  auto engine = std::make_unique<Engine>(instantiate(scenario, handlers));
  return insert(std::move(engine), scenario, name, Lifecycle::created, std::nullopt, Time{});
}

std::string SimulationService::create_simulation(const json& documents, const std::string& name) {
  return create_simulation(load_scenario_documents(documents, name.empty() ? "scenario" : name), name);
}

std::string SimulationService::create_simulation_from_dir(const std::filesystem::path& dir, const std::string& name) {
  return create_simulation(load_scenario_dir(dir), name);
}

json SimulationService::create_default_simulation(const std::string& name, std::optional<std::uint64_t> seed) {
  Scenario s = default_scenario(seed.value_or(1));
  std::string id = create_simulation(s, name);
  json out = get_state(id);
  out["applications"] = json::array();
  for (const auto& a : s.applications) out["applications"].push_back(a.name);
  out["users"] = s.users.size();
  out["deployments"] = s.placements.size();
  return out;
}

json SimulationService::create_grid_simulation(std::size_t clusters, std::size_t nodes_per_cluster, const std::string& name) {
  if (clusters > 1000 || nodes_per_cluster > 1000) fail(ErrorCode::invalid_argument, "grid too large");
  Scenario s = grid_scenario(clusters, nodes_per_cluster);
  std::string id = create_simulation(s, name);
  json out = get_state(id);
  out["clusters"] = clusters;
  out["nodes_per_cluster"] = nodes_per_cluster;
  out["nodes_total"] = s.topology.node_count();
  out["summary"] = std::to_string(clusters) + " clusters, " + std::to_string(nodes_per_cluster) + " nodes per cluster (" +
                   std::to_string(s.topology.node_count()) + " nodes total)";
  return out;
}

void SimulationService::register_handler(const std::string& name, CustomHandler handler) {
  std::lock_guard lk(registry_mutex_);
  handlers_[name] = std::move(handler);
}

// ---------------------------------------------------------------------------
// lifecycle

void SimulationService::set_state(Record& r, Lifecycle s) {
  if (!legal_transition(r.state, s))
    fail(ErrorCode::internal, "illegal transition " + std::string(to_string(r.state)) + " -> " + std::string(to_string(s)));
  r.state = s;
  r.history.push_back(s);
  r.cv.notify_all();
}

json SimulationService::state_json(const Record& r) {
  json pending = nullptr;
  if (r.target)
    pending = {{"start", r.window_start.to_double()},
               {"duration", (*r.target - r.window_start).to_double()},
               {"until", r.target->to_double()},
               {"step", r.step.to_double()}};
  Time clock = Time::from_raw(r.clock_raw.load());
  return {{"simulation_id", r.id},
          {"name", r.name},
          {"status", std::string(to_string(r.state))},
          {"status_detail", status_detail(r.state)},
          {"clock", clock.to_double()},
          {"clock_exact", clock.str()},
          {"parent", r.parent ? json(*r.parent) : json(nullptr)},
          {"fork_clock", r.parent ? json(r.fork_clock.to_double()) : json(nullptr)},
          {"children", r.children},
          {"pending", pending},
          {"windows_completed", r.windows_completed},
          {"error", r.error.empty() ? json(nullptr) : json(r.error)}};
}

json SimulationService::initialize(const std::string& id) {
  auto r = find(id);
  std::lock_guard lk(r->m);
  if (r->state != Lifecycle::created) state_error(id, r->state, "only a created simulation can be initialized");
  set_state(*r, Lifecycle::initialized);
  json warnings = json::array();
  const Engine& e = *r->engine;
  for (const auto& app : e.applications())
    for (const auto& v : app.vnfs) {
      bool any = false;
      for (const auto* d : e.active_deployments()) any = any || (d->app == app.name && d->vnf == v.name);
      if (!any) warnings.push_back("application '" + app.name + "' has no deployment of '" + v.name + "'");
    }
  json out = state_json(*r);
  out["warnings"] = std::move(warnings);
  return out;
}

void SimulationService::worker(std::shared_ptr<Record> r) {
  for (;;) {
    Time next;
    Engine* engine = nullptr;
    {
      std::lock_guard lk(r->m);
      engine = r->engine.get();
      Time clock = engine->clock();
      if (r->stop_requested) {
        r->target.reset();
        set_state(*r, Lifecycle::stopped);
        return;
      }
      if (clock >= *r->target) {
        r->target.reset();
        ++r->windows_completed;
        set_state(*r, Lifecycle::paused);
        return;
      }
      if (r->pause_requested) {
        r->pause_requested = false;
        set_state(*r, Lifecycle::paused);
        return;
      }
      next = std::min(clock + r->step, *r->target);
    }
    try {
      engine->run_until(next);
      r->clock_raw = engine->clock().raw();
    } catch (const std::exception& ex) {
      std::lock_guard lk(r->m);
      r->error = ex.what();
      r->target.reset();
      set_state(*r, Lifecycle::failed);
      return;
    }
  }
}

json SimulationService::start_window(const std::shared_ptr<Record>& r, std::unique_lock<std::mutex>&, Time target, Time step) {
  if (r->thread.joinable()) r->thread.join();  // previous window has already released the record
  r->window_start = r->engine->clock();
  r->target = target;
  r->step = step;
  r->pause_requested = false;
  set_state(*r, Lifecycle::running);
  r->thread = std::thread(&SimulationService::worker, r);
  json out = state_json(*r);
  out["window"] = {{"start", r->window_start.to_double()}, {"end", target.to_double()}};
  return out;
}

json SimulationService::run_for(const std::string& id, Time duration, std::optional<Time> step) {
  auto r = find(id);
  std::unique_lock lk(r->m);
  if (r->state == Lifecycle::created) set_state(*r, Lifecycle::initialized);
  if (r->state != Lifecycle::initialized && r->state != Lifecycle::paused)
    state_error(id, r->state, "run_for requires initialized or paused");
  if (duration <= Time{}) fail(ErrorCode::invalid_argument, "duration must be positive");
  Time st = step.value_or(Time::from_raw(std::max<std::int64_t>(duration.raw() / 10, 1)));
  if (st <= Time{}) fail(ErrorCode::invalid_argument, "step must be positive");
  return start_window(r, lk, r->engine->clock() + duration, st);
}

json SimulationService::schedule_for(const std::string& id, Time until, std::optional<Time> step) {
  Time clock;
  {
    auto r = find(id);
    std::lock_guard lk(r->m);
    if (r->state == Lifecycle::running) state_error(id, r->state, "schedule_for requires initialized or paused");
    clock = r->engine->clock();
  }
  if (until <= clock) fail(ErrorCode::invalid_argument, "until (" + until.str() + ") must be after the clock (" + clock.str() + ")");
  return run_for(id, until - clock, step);
}

json SimulationService::pause(const std::string& id) {
  auto r = find(id);
  std::lock_guard lk(r->m);
  if (r->state != Lifecycle::running) state_error(id, r->state, "only a running simulation can be paused");
  r->pause_requested = true;
  json out = state_json(*r);
  out["pause"] = "requested; takes effect at the next step boundary";
  return out;
}

json SimulationService::resume(const std::string& id) {
  auto r = find(id);
  std::unique_lock lk(r->m);
  if (r->state != Lifecycle::paused) state_error(id, r->state, "only a paused simulation can be resumed");
  if (!r->target || *r->target <= r->engine->clock())
    state_error(id, r->state, "no remaining scheduled window; use run_simulation_for");
  Time start = r->window_start;
  json out = start_window(r, lk, *r->target, r->step);
  r->window_start = start;
  return out;
}

json SimulationService::wait_until_idle(const std::string& id, std::chrono::milliseconds timeout) {
  auto r = find(id);
  std::unique_lock lk(r->m);
  bool idle = r->cv.wait_for(lk, timeout, [&] { return r->state != Lifecycle::running; });
  json out = state_json(*r);
  out["timed_out"] = !idle;
  return out;
}

void SimulationService::halt(Record& r, std::unique_lock<std::mutex>& lk) {
  if (r.state == Lifecycle::running) {
    r.stop_requested = true;
    r.cv.wait(lk, [&] { return r.state != Lifecycle::running; });
  }
  if (r.thread.joinable()) r.thread.join();
  if (r.state != Lifecycle::stopped && r.state != Lifecycle::failed) set_state(r, Lifecycle::stopped);
  r.target.reset();
}

json SimulationService::stop(const std::string& id) {
  auto r = find(id);
  std::unique_lock lk(r->m);
  if (r->state == Lifecycle::stopped || r->state == Lifecycle::failed) state_error(id, r->state, "already terminal");
  halt(*r, lk);
  return state_json(*r);
}

json SimulationService::destroy(const std::string& id) {
  auto r = find(id);
  json out;
  {
    std::unique_lock lk(r->m);
    halt(*r, lk);
    if (config_.run_dir) {
      auto dir = *config_.run_dir / id;
      write_scenario_dir(r->scenario, dir);
      std::ofstream traces(dir / "traces.tsv");
      r->engine->traces().export_lines(traces);
    }
    out = state_json(*r);
  }
  std::lock_guard lk(registry_mutex_);
  records_.erase(id);
  out["destroyed"] = true;
  return out;
}

json SimulationService::fork(const std::string& id, const std::string& name, std::optional<std::uint64_t> seed) {
  auto r = find(id);
  std::lock_guard lk(r->m);
  if (r->state != Lifecycle::initialized && r->state != Lifecycle::paused)
    state_error(id, r->state, "fork requires initialized or paused");
  auto child = std::make_unique<Engine>(*r->engine);
  if (seed) child->reseed(*seed);
  Time at = r->engine->clock();
  std::string child_name = name.empty() ? r->name + "-fork-" + std::to_string(r->children.size() + 1) : name;
  Scenario sc = r->scenario;
  if (seed) sc.seed = *seed;
  std::string cid = insert(std::move(child), std::move(sc), child_name, r->state, id, at);
  r->children.push_back(cid);
  json out = get_state(cid);
  out["divergence"] = seed ? "reseeded with " + std::to_string(*seed) : std::string("exact copy");
  return out;
}

// ---------------------------------------------------------------------------
// views

Lifecycle SimulationService::state(const std::string& id) const {
  auto r = find(id);
  std::lock_guard lk(r->m);
  return r->state;
}

std::vector<Lifecycle> SimulationService::state_history(const std::string& id) const {
  auto r = find(id);
  std::lock_guard lk(r->m);
  return r->history;
}

json SimulationService::get_state(const std::string& id) const {
  auto r = find(id);
  std::lock_guard lk(r->m);
  return state_json(*r);
}

json SimulationService::list_simulations() const {
  std::vector<std::shared_ptr<Record>> all;
  {
    std::lock_guard lk(registry_mutex_);
    for (const auto& [id, r] : records_) all.push_back(r);
  }
  json list = json::array();
  for (const auto& r : all) {
    std::lock_guard lk(r->m);
    json s = state_json(*r);
    list.push_back({{"simulation_id", s["simulation_id"]},
                    {"name", s["name"]},
                    {"status", s["status"]},
                    {"clock", s["clock"]},
                    {"parent", s["parent"]}});
  }
  return {{"simulations", std::move(list)}};
}

json SimulationService::view(const std::string& id, const std::function<json(const Engine&, const Record&)>& fn) const {
  auto r = find(id);
  std::lock_guard lk(r->m);
  if (r->state == Lifecycle::running) state_error(id, r->state, "views are available once the window completes or is paused");
  json out = fn(*r->engine, *r);
  return out;
}

void SimulationService::inspect(const std::string& id, const std::function<void(const Engine&)>& fn) const {
  view(id, [&](const Engine& e, const Record&) {
    fn(e);
    return json();
  });
}

json SimulationService::list_nodes(const std::string& id) const {
  return view(id, [&](const Engine& e, const Record& r) {
    json nodes = json::array();
    const Topology& t = e.topology();
    for (NodeIndex i = 0; i < t.node_count(); ++i) {
      const Node& n = t.node(i);
      Resources used = e.used_resources(n.id);
      nodes.push_back({{"id", n.id},
                       {"cluster", t.cluster_of(i).name},
                       {"cluster_role", t.cluster_of(i).role},
                       {"region", t.region_of(i)},
                       {"role", n.spec.role == NodeRole::control_plane ? "control-plane" : "worker"},
                       {"cpu", n.spec.cpu.to_double()},
                       {"memory_mib", n.spec.memory_mib.to_double()},
                       {"cost", n.spec.cost.str()},
                       {"used_cpu", used.cpu.to_double()},
                       {"used_memory_mib", used.memory_mib.to_double()},
                       {"up", e.node_up(n.id)}});
    }
    json links = json::array();
    for (const auto& l : t.links())
      if (l.inter_cluster)
        links.push_back({{"id", l.id}, {"latency", l.latency.str()}, {"bandwidth", l.bandwidth.str()}, {"distance_km", l.distance_km.str()}});
    return json{{"simulation_id", r.id}, {"nodes", std::move(nodes)}, {"links", std::move(links)}};
  });
}

json SimulationService::list_deployed_applications(const std::string& id) const {
  return view(id, [&](const Engine& e, const Record& r) {
    json apps = json::array();
    auto active = e.active_deployments();
    for (const auto& app : e.applications()) {
      json vnfs = json::array();
      std::size_t count = 0;
      for (const auto& v : app.vnfs) {
        vnfs.push_back(v.name);
        for (const auto* d : active) count += d->app == app.name && d->vnf == v.name;
      }
      std::size_t users = 0;
      for (const auto& [uid, u] : e.users()) users += u.active && u.spec.app == app.name;
      apps.push_back({{"name", app.name},
                      {"latency_requirement", app.latency_requirement.str()},
                      {"vnfs", std::move(vnfs)},
                      {"response_path", app.has_response_path()},
                      {"deployments", count},
                      {"users", users}});
    }
    return json{{"simulation_id", r.id}, {"applications", std::move(apps)}};
  });
}

json SimulationService::list_application_vnfs(const std::string& id, const std::string& app_name) const {
  return view(id, [&](const Engine& e, const Record& r) {
    const Application& app = e.application(app_name);
    json vnfs = json::array();
    auto active = e.active_deployments();
    for (std::size_t i = 0; i < app.vnfs.size(); ++i) {
      const auto& v = app.vnfs[i];
      json deps = json::array();
      for (const auto* d : active)
        if (d->app == app.name && d->vnf == v.name)
          deps.push_back({{"deployment_id", d->id}, {"node", d->node}, {"instance", d->instance ? json(*d->instance) : json(nullptr)}});
      vnfs.push_back({{"name", v.name},
                      {"stage", i},
                      {"service_time", v.service_time.str()},
                      {"cpu", v.footprint.cpu.str()},
                      {"memory_mib", v.footprint.memory_mib.str()},
                      {"deployments", std::move(deps)}});
    }
    return json{{"simulation_id", r.id}, {"application", app.name}, {"vnfs", std::move(vnfs)}};
  });
}

json SimulationService::list_users(const std::string& id) const {
  return view(id, [&](const Engine& e, const Record& r) {
    json users = json::array();
    for (const auto& [uid, u] : e.users()) {
      if (!u.active) continue;
      users.push_back({{"user_id", uid},
                       {"app", u.spec.app},
                       {"node", u.spec.node},
                       {"origin", u.origin},
                       {"instance", u.instance ? json(*u.instance) : json(nullptr)},
                       {"distribution", distribution_view(u.spec.generation)}});
    }
    return json{{"simulation_id", r.id}, {"policy", std::string(to_string(e.user_policy()))}, {"users", std::move(users)}};
  });
}

json SimulationService::list_processes(const std::string& id) const {
  return view(id, [&](const Engine& e, const Record& r) {
    json procs = json::array();
    for (const auto& [pid, p] : e.processes()) {
      json j = process_to_json(p.spec);
      j["process_id"] = pid;
      j["active"] = p.active;
      j["spawned_total"] = p.spawned_total;
      procs.push_back(std::move(j));
    }
    return json{{"simulation_id", r.id}, {"processes", std::move(procs)}};
  });
}

json SimulationService::list_node_placements(const std::string& id) const {
  return view(id, [&](const Engine& e, const Record& r) {
    json nodes = json::object();
    for (const auto* d : e.active_deployments()) {
      nodes[d->node].push_back({{"deployment_id", d->id},
                                {"app", d->app},
                                {"vnf", d->vnf},
                                {"instance", d->instance ? json(*d->instance) : json(nullptr)}});
    }
    return json{{"simulation_id", r.id}, {"placements", std::move(nodes)}};
  });
}

json SimulationService::node_distances(const std::string& id, const std::vector<std::string>& targets) const {
  return view(id, [&](const Engine& e, const Record& r) {
    // Routing refresh only fills a cache; the record lock makes it exclusive.
    auto d = const_cast<Engine&>(e).hop_distances(targets);
    json rows = json::object();
    for (const auto& [node, v] : d) rows[node] = v;
    return json{{"simulation_id", r.id}, {"targets", targets}, {"hops", std::move(rows)}};
  });
}

json SimulationService::runtime_snapshot(const std::string& id) const {
  return view(id, [&](const Engine& e, const Record& r) {
    RuntimeSnapshot s = e.snapshot_runtime();
    return json{{"simulation_id", r.id},
                {"clock", s.clock.to_double()},
                {"users", s.users},
                {"deployments", s.deployments},
                {"in_flight", s.in_flight},
                {"down_nodes", s.down_nodes},
                {"unreachable_links", s.unreachable_links},
                {"pending_events", s.pending_events},
                {"executed_events", e.executed_events()},
                {"requests", e.traces().requests.size()},
                {"perturbations", e.traces().perturbations.size()},
                {"warnings", e.warnings()},
                {"trace_hash", e.traces().hash()}};
  });
}

Window SimulationService::default_window(const Engine& e, const std::optional<Window>& w) const {
  if (w) {
    w->validate();
    return *w;
  }
  return Window{Time{}, std::max(e.clock(), Time::from_raw(1))};
}

json SimulationService::app_metrics(const std::string& id, const std::optional<std::string>& app,
                                    const std::optional<Window>& window) const {
  return view(id, [&](const Engine& e, const Record& r) {
    Window w = default_window(e, window);
    json apps = json::array();
    for (const auto& a : e.applications()) {
      if (app && a.name != *app) continue;
      AppMetrics m = app_metrics_summary(e.traces(), a.name, w);
      json j = app_metrics_to_json(m);
      j["latency_requirement"] = a.latency_requirement.str();
      j["text"] = format_app_metrics_text(m);
      apps.push_back(std::move(j));
    }
    if (app && apps.empty()) fail(ErrorCode::not_found, "unknown application '" + *app + "'");
    return json{{"simulation_id", r.id}, {"window", window_json(w)}, {"applications", std::move(apps)}};
  });
}

json SimulationService::network_metrics(const std::string& id, const std::optional<Window>& window,
                                        std::optional<Ratio> node_threshold, std::optional<Ratio> link_threshold) const {
  return view(id, [&](const Engine& e, const Record& r) {
    Window w = default_window(e, window);
    Ratio nt = node_threshold.value_or(config_.node_threshold);
    Ratio lt = link_threshold.value_or(config_.link_threshold);
    json out = infra_metrics_to_json(infra_metrics(e, w, nt, lt));
    CostMetrics c = cost_metrics(e, w, r.scenario.egress_rates, r.scenario.ingress_rates);
    json per_app = json::object();
    for (const auto& [app, v] : c.placement) per_app[app] = v.str();
    auto flows = [](const std::map<std::pair<std::string, std::string>, Ratio>& m) {
      json list = json::array();
      for (const auto& [k, v] : m) list.push_back({{"from", k.first}, {"to", k.second}, {"cost", to_double(v)}, {"cost_exact", format_ratio(v)}});
      return list;
    };
    out["simulation_id"] = r.id;
    out["window"] = window_json(w);
    out["thresholds"] = {{"node", format_ratio(nt)}, {"link", format_ratio(lt)}};
    out["placement_cost"] = {{"total", c.total_placement.str()}, {"per_app", std::move(per_app)}};
    out["egress_cost"] = flows(c.egress);
    out["ingress_cost"] = flows(c.ingress);
    return out;
  });
}

std::string SimulationService::trace_hash(const std::string& id) const {
  std::string h;
  inspect(id, [&](const Engine& e) { h = e.traces().hash(); });
  return h;
}

void SimulationService::export_traces(const std::string& id, std::ostream& out) const {
  inspect(id, [&](const Engine& e) { e.traces().export_lines(out); });
}

// ---------------------------------------------------------------------------
// mutations

json SimulationService::mutate(const std::string& id, const char* op, const std::function<json(Engine&)>& fn) {
  auto r = find(id);
  std::lock_guard lk(r->m);
  if (r->state != Lifecycle::created && r->state != Lifecycle::initialized && r->state != Lifecycle::paused)
    state_error(id, r->state, std::string(op) + " is accepted only in created, initialized or paused state");
  json out = fn(*r->engine);
  out["simulation_id"] = id;
  return out;
}

json SimulationService::create_application(const std::string& id, const json& app_doc, const std::string& placement) {
  if (placement != "none" && placement != "random") fail(ErrorCode::invalid_argument, "placement must be 'none' or 'random'");
  Application app = load_applications(json::array({app_doc})).at(0);
  return mutate(id, "create_application", [&](Engine& e) {
    bool existed = false;
    for (const auto& a : e.applications())
      if (a.name == app.name) {
        if (application_to_json(a) != application_to_json(app))
          fail(ErrorCode::invalid_argument, "application '" + app.name + "' already exists with a different definition");
        existed = true;
      }
    if (!existed) e.add_application(app);
    json deployed = json::array();
    if (placement == "random") {
      Rng rng = make_stream(e.config().seed, "random-app-placement:" + app.name);
      const auto& nodes = e.topology().nodes();
      for (const auto& v : app.vnfs) {
        std::vector<std::string> ok;
        for (const auto& n : nodes)
          if (e.node_up(n.id) && e.fits(n.id, v.footprint)) ok.push_back(n.id);
        if (ok.empty()) fail(ErrorCode::capacity, "no node can host '" + v.name + "'");
        const std::string& node = ok[uniform_index(rng, ok.size())];
        DeploymentId d = e.deploy(app.name, v.name, node);
        deployed.push_back({{"deployment_id", d}, {"vnf", v.name}, {"node", node}});
      }
    }
    return json{{"application", app.name}, {"created", !existed}, {"deployments", std::move(deployed)}};
  });
}

json SimulationService::deploy(const std::string& id, const std::string& app, const std::string& vnf, const std::string& node) {
  return mutate(id, "deploy", [&](Engine& e) {
    return json{{"deployment_id", e.deploy(app, vnf, node)}, {"app", app}, {"vnf", vnf}, {"node", node}};
  });
}

json SimulationService::deploy_chain(const std::string& id, const std::string& app_name,
                                     const std::vector<std::string>& nodes) {
  return mutate(id, "deploy_chain", [&](Engine& e) {
    const Application& app = e.application(app_name);
    if (nodes.size() != app.vnfs.size())
      fail(ErrorCode::invalid_argument, "application '" + app_name + "' has " + std::to_string(app.vnfs.size()) +
                                            " VNFs but " + std::to_string(nodes.size()) + " nodes were given");
    std::map<std::string, Resources> need;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!e.topology().find_node(nodes[i])) fail(ErrorCode::not_found, "unknown node '" + nodes[i] + "'");
      if (!e.node_up(nodes[i])) fail(ErrorCode::invalid_state, "node unavailable: '" + nodes[i] + "' is down");
      Resources& r = need[nodes[i]];
      r.cpu += app.vnfs[i].footprint.cpu;
      r.memory_mib += app.vnfs[i].footprint.memory_mib;
    }
    for (const auto& [node, r] : need)
      if (!e.fits(node, r)) fail(ErrorCode::capacity, "insufficient capacity on '" + node + "' for a chain of " + app_name);
    InstanceId inst = e.new_instance_id();
    std::vector<DeploymentId> ids;
    for (std::size_t i = 0; i < nodes.size(); ++i) ids.push_back(e.deploy(app.name, app.vnfs[i].name, nodes[i], inst));
    return json{{"instance", inst}, {"app", app.name}, {"nodes", nodes}, {"deployment_ids", ids}};
  });
}

json SimulationService::replicate(const std::string& id, const std::string& app, const std::string& vnf,
                                  const std::vector<std::string>& nodes) {
  return mutate(id, "replicate", [&](Engine& e) {
    return json{{"deployment_ids", e.replicate(app, vnf, nodes)}, {"app", app}, {"vnf", vnf}, {"nodes", nodes}};
  });
}

json SimulationService::move(const std::string& id, const std::string& app, const std::string& vnf, const std::string& from,
                             const std::string& to) {
  return mutate(id, "move", [&](Engine& e) {
    return json{{"deployment_id", e.move(app, vnf, from, to)}, {"app", app}, {"vnf", vnf}, {"from", from}, {"to", to}};
  });
}

json SimulationService::remove(const std::string& id, const std::string& app, const std::string& vnf, const std::string& node) {
  return mutate(id, "remove", [&](Engine& e) {
    bool last = e.remove(app, vnf, node);
    json out = {{"removed", true}, {"app", app}, {"vnf", vnf}, {"node", node}, {"last_replica", last}};
    if (last) out["warning"] = "no active deployment of '" + vnf + "' remains; requests will fail with missing_stage";
    return out;
  });
}

json SimulationService::create_users(const std::string& id, const UserSpec& spec, std::size_t count) {
  if (count == 0 || count > 100000) fail(ErrorCode::invalid_argument, "count must be in [1, 100000]");
  spec.generation.validate();
  return mutate(id, "create_users", [&](Engine& e) {
    e.application(spec.app);
    std::vector<UserId> ids;
    for (std::size_t i = 0; i < count; ++i) ids.push_back(e.spawn_user(spec, "api"));
    return json{{"user_ids", ids}, {"app", spec.app}, {"node", spec.node}};
  });
}

json SimulationService::move_user(const std::string& id, UserId user, const std::string& node) {
  return mutate(id, "move_user", [&](Engine& e) {
    e.move_user(user, node);
    return json{{"user_id", user}, {"node", node}};
  });
}

json SimulationService::remove_user(const std::string& id, UserId user) {
  return mutate(id, "remove_user", [&](Engine& e) {
    e.remove_user(user);
    return json{{"user_id", user}, {"removed", true}};
  });
}

json SimulationService::create_process(const std::string& id, const ProcessSpec& spec) {
  return mutate(id, "create_process", [&](Engine& e) {
    return json{{"process_id", e.register_process(spec)}, {"name", spec.name}, {"kind", std::string(to_string(spec.kind))}};
  });
}

json SimulationService::add_node(const std::string& id, const std::string& cluster, const NodeSpec& node) {
  return mutate(id, "add_node", [&](Engine& e) {
    e.add_node(cluster, node);
    return json{{"node", global_node_id(cluster, node.name)}, {"nodes_total", e.topology().node_count()}};
  });
}

json SimulationService::remove_node(const std::string& id, const std::string& node) {
  return mutate(id, "remove_node", [&](Engine& e) {
    e.remove_node(node);
    return json{{"node", node}, {"removed", true}, {"nodes_total", e.topology().node_count()}};
  });
}

json SimulationService::add_cluster(const std::string& id, const ClusterSpec& cluster, const std::vector<LinkSpec>& links) {
  return mutate(id, "add_cluster", [&](Engine& e) {
    e.add_cluster(cluster, links);
    return json{{"cluster", cluster.name}, {"nodes_total", e.topology().node_count()}};
  });
}

json SimulationService::remove_cluster(const std::string& id, const std::string& cluster) {
  return mutate(id, "remove_cluster", [&](Engine& e) {
    e.remove_cluster(cluster);
    return json{{"cluster", cluster}, {"removed", true}, {"nodes_total", e.topology().node_count()}};
  });
}

json SimulationService::set_link(const std::string& id, const std::string& a, const std::string& b,
                                 const Topology::LinkChange& change) {
  return mutate(id, "set_link", [&](Engine& e) {
    e.set_link(a, b, change);
    return json{{"link", {a, b}}, {"updated", true}};
  });
}

json SimulationService::set_node_status(const std::string& id, const std::string& node, bool up) {
  return mutate(id, "set_node_status", [&](Engine& e) {
    e.set_node_up(node, up);
    return json{{"node", node}, {"up", up}};
  });
}

json SimulationService::set_user_policy(const std::string& id, UserPolicy policy) {
  return mutate(id, "set_user_policy", [&](Engine& e) {
    e.set_user_policy(policy);
    return json{{"policy", std::string(to_string(policy))}};
  });
}

}  // namespace cesim
