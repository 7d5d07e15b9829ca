#include "cesim/engine.hpp"

#include <algorithm>
#include <cmath>

#include "cesim/error.hpp"
#include "cesim/scoring.hpp"

namespace cesim {

std::string_view to_string(UserPolicy p) {
  switch (p) {
    case UserPolicy::nearest: return "nearest";
    case UserPolicy::round_robin: return "round_robin";
    case UserPolicy::dedicated: return "dedicated";
  }
  return "nearest";
}

UserPolicy user_policy_from(std::string_view name) {
  for (auto p : {UserPolicy::nearest, UserPolicy::round_robin, UserPolicy::dedicated})
    if (to_string(p) == name) return p;
  fail(ErrorCode::invalid_argument, "unknown user placement policy '" + std::string(name) + "'");
}

Engine::Engine(Topology topology, std::vector<Application> apps, EngineConfig config)
    : topology_(std::move(topology)), config_(config) {
  for (auto& a : apps) add_application(std::move(a));
  avail_.node_up.assign(topology_.node_count(), true);
  avail_.link_up.assign(topology_.links().size(), true);
}

const Application& Engine::application(std::string_view name) const {
  for (const auto& a : apps_)
    if (a.name == name) return a;
  fail(ErrorCode::not_found, "unknown application '" + std::string(name) + "'");
}

void Engine::add_application(Application app) {
  validate_application(app);
  for (const auto& a : apps_)
    if (a.name == app.name) fail(ErrorCode::invalid_argument, "duplicate application '" + app.name + "'");
  apps_.push_back(std::move(app));
}

void Engine::reseed(std::uint64_t seed) {
  config_.seed = seed;
  for (auto& [id, u] : users_) u.rng = make_stream(seed, "user:" + std::to_string(id));
  for (auto& [id, p] : processes_) p.rng = make_stream(seed, "process:" + p.spec.name + ":" + std::to_string(id));
}

// ---------------------------------------------------------------------------
// topology & availability

void Engine::invalidate_routes() {
  ++avail_revision_;
  routing_.invalidate();
}

void Engine::refresh_routes() { routing_.refresh(topology_, avail_, avail_revision_); }

void Engine::replace_topology(Topology t) {
  // Settle fluid state under the old bandwidths before they change.
  std::map<std::string, Fixed> old_bw;
  for (auto& [id, ch] : channels_) {
    if (auto li = topology_.find_link_by_id(id)) old_bw[id] = topology_.link(*li).bandwidth;
  }
  std::set<std::string> down;
  for (NodeIndex i = 0; i < topology_.node_count(); ++i)
    if (!avail_.node_up[i]) down.insert(topology_.node(i).id);

  topology_ = std::move(t);
  avail_.node_up.assign(topology_.node_count(), true);
  avail_.link_up.assign(topology_.links().size(), true);
  for (const auto& id : down)
    if (auto i = topology_.find_node(id)) avail_.node_up[*i] = false;
  invalidate_routes();

  for (auto it = channels_.begin(); it != channels_.end();) {
    auto li = topology_.find_link_by_id(it->first);
    if (!li) {
      for (const auto& tr : it->second.active()) {
        RequestId r = transfers_.at(tr.id);
        transfers_.erase(tr.id);
        fail_request(r, "link_removed");
      }
      it = channels_.erase(it);
      continue;
    }
    if (old_bw.count(it->first)) it->second.advance(clock_, old_bw[it->first]);
    ++it;
  }
  for (auto& [id, ch] : channels_) {
    (void)ch;
    reschedule_channel(id);
  }
}

void Engine::add_node(const std::string& cluster, const NodeSpec& node) {
  replace_topology(topology_.with_node_added(cluster, node));
}

void Engine::remove_node(const std::string& node_id) {
  topology_.node_index(node_id);
  for (const auto& [id, d] : deployments_) {
    if (d.node == node_id && (d.active || d.serving || !d.queue.empty()))
      fail(ErrorCode::invalid_state, "node '" + node_id + "' hosts deployments; migrate or remove them first");
  }
  for (const auto& [id, u] : users_) {
    if (u.active && u.spec.node == node_id)
      fail(ErrorCode::invalid_state, "node '" + node_id + "' hosts users; move or remove them first");
  }
  replace_topology(topology_.with_node_removed(node_id));
}

void Engine::add_cluster(const ClusterSpec& cluster, const std::vector<LinkSpec>& links) {
  replace_topology(topology_.with_cluster_added(cluster, links));
}

void Engine::remove_cluster(const std::string& cluster) {
  auto c = topology_.find_cluster(cluster);
  if (!c) fail(ErrorCode::not_found, "unknown cluster '" + cluster + "'");
  for (const auto& n : topology_.nodes()) {
    if (n.cluster != *c) continue;
    for (const auto& [id, d] : deployments_)
      if (d.node == n.id && (d.active || d.serving || !d.queue.empty()))
        fail(ErrorCode::invalid_state, "cluster '" + cluster + "' hosts deployments; migrate or remove them first");
    for (const auto& [id, u] : users_)
      if (u.active && u.spec.node == n.id)
        fail(ErrorCode::invalid_state, "cluster '" + cluster + "' hosts users; move or remove them first");
  }
  replace_topology(topology_.with_cluster_removed(cluster));
}

void Engine::set_link(const std::string& a, const std::string& b, const Topology::LinkChange& change) {
  replace_topology(topology_.with_link_changed(a, b, change));
}

void Engine::set_node_up(const std::string& node_id, bool up) {
  NodeIndex i = topology_.node_index(node_id);
  if (avail_.node_up[i] == up) return;
  avail_.node_up[i] = up;
  invalidate_routes();
  log_perturbation("availability", "node " + node_id + (up ? " up" : " down"));
  if (up) return;
  // Work queued or in service on the failed node is lost.
  for (auto& [id, d] : deployments_) {
    if (d.node != node_id) continue;
    std::vector<RequestId> lost(d.queue.begin(), d.queue.end());
    if (d.serving) lost.insert(lost.begin(), *d.serving);
    d.queue.clear();
    d.serving.reset();
    for (RequestId r : lost) fail_request(r, "node_failure");
  }
}

bool Engine::node_up(std::string_view node_id) const {
  auto i = topology_.find_node(node_id);
  return i && avail_.node_up[*i];
}

std::optional<std::vector<std::string>> Engine::route(const std::string& from, const std::string& to) {
  refresh_routes();
  const auto& p = routing_.path(topology_, avail_, topology_.node_index(from), topology_.node_index(to));
  if (!p) return std::nullopt;
  std::vector<std::string> out;
  out.reserve(p->size());
  for (NodeIndex i : *p) out.push_back(topology_.node(i).id);
  return out;
}

PathCost Engine::route_cost(const std::string& from, const std::string& to) {
  refresh_routes();
  return routing_.cost(topology_.node_index(from), topology_.node_index(to));
}

std::map<std::string, std::vector<std::int32_t>> Engine::hop_distances(const std::vector<std::string>& targets) {
  refresh_routes();
  std::vector<NodeIndex> t;
  for (const auto& id : targets) t.push_back(topology_.node_index(id));
  std::map<std::string, std::vector<std::int32_t>> out;
  for (NodeIndex n = 0; n < topology_.node_count(); ++n) {
    if (!avail_.node_up[n]) continue;
    std::vector<std::int32_t> row;
    row.reserve(t.size());
    for (NodeIndex x : t) {
      const PathCost& c = routing_.cost(n, x);
      row.push_back(c.reachable() ? c.hops : -1);
    }
    out.emplace(topology_.node(n).id, std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// users

UserId Engine::spawn_user(const UserSpec& spec, const std::string& origin) {
  const Application& app = application(spec.app);
  if (!topology_.find_node(spec.node)) fail(ErrorCode::not_found, "unknown node '" + spec.node + "'");
  if (!node_up(spec.node)) fail(ErrorCode::invalid_state, "node unavailable: '" + spec.node + "' is down");
  spec.generation.validate();
  if (!spec.first_message.empty() && spec.first_message != app.messages.front().name)
    fail(ErrorCode::invalid_argument, "first message of '" + app.name + "' is '" + app.messages.front().name + "'");
  UserId id = next_user_++;
  User u;
  u.id = id;
  u.spec = spec;
  u.origin = origin;
  u.rng = make_stream(config_.seed, "user:" + std::to_string(id));
  auto& stored = users_.emplace(id, std::move(u)).first->second;
  schedule(clock_, EventKind::request_emit, id, stored.generation);
  on_user_created(stored);
  return id;
}

void Engine::move_user(UserId id, const std::string& node) {
  auto it = users_.find(id);
  if (it == users_.end() || !it->second.active) fail(ErrorCode::not_found, "unknown user " + std::to_string(id));
  if (!topology_.find_node(node)) fail(ErrorCode::not_found, "unknown node '" + node + "'");
  it->second.spec.node = node;
}

void Engine::remove_user(UserId id) {
  auto it = users_.find(id);
  if (it == users_.end()) fail(ErrorCode::not_found, "unknown user " + std::to_string(id));
  if (!it->second.active) {
    warnings_.push_back("user " + std::to_string(id) + " already removed");
    return;
  }
  it->second.active = false;
  ++it->second.generation;
}

std::size_t Engine::active_user_count() const {
  return static_cast<std::size_t>(std::count_if(users_.begin(), users_.end(), [](const auto& kv) { return kv.second.active; }));
}

void Engine::set_user_policy(UserPolicy policy) {
  policy_ = policy;
  for (auto& [id, u] : users_) {
    if (!u.active) continue;
    if (policy == UserPolicy::nearest) u.instance.reset();
    else if (!u.instance) on_user_created(u);
  }
}

void Engine::on_user_created(User& u) {
  switch (policy_) {
    case UserPolicy::nearest: break;
    case UserPolicy::round_robin: bind_round_robin(u); break;
    case UserPolicy::dedicated: deploy_dedicated_chain(u); break;
  }
}

void Engine::bind_round_robin(User& u) {
  std::set<InstanceId> instances;
  for (const auto& [id, d] : deployments_)
    if (d.active && d.app == u.spec.app && d.instance) instances.insert(*d.instance);
  if (instances.empty()) return;
  std::size_t& cursor = round_robin_cursor_[u.spec.app];
  auto it = instances.begin();
  std::advance(it, static_cast<std::ptrdiff_t>(cursor % instances.size()));
  u.instance = *it;
  ++cursor;
}

void Engine::deploy_dedicated_chain(User& u) {
  const Application& app = application(u.spec.app);
  InstanceId inst = new_instance_id();
  u.instance = inst;
  const std::string& home = u.spec.node;
  const std::string& home_region = topology_.region_of(topology_.node_index(home));
  for (const auto& vnf : app.vnfs) {
    if (node_up(home) && fits(home, vnf.footprint)) {
      deploy(app.name, vnf.name, home, inst);
      continue;
    }
    // Nearest feasible node by balanced score.
    refresh_routes();
    NodeIndex hi = topology_.node_index(home);
    Time lo = clock_ - config_.utilization_window;
    std::map<std::string, Time> busy;
    for (const auto& r : traces_.requests)
      for (const auto& s : r.services)
        if (s.finished && s.end >= lo && s.end < clock_) busy[s.node] += s.processing();
    std::optional<std::pair<Ratio, std::string>> best;
    for (NodeIndex n = 0; n < topology_.node_count(); ++n) {
      const std::string& id = topology_.node(n).id;
      if (!avail_.node_up[n] || !fits(id, vnf.footprint)) continue;
      const PathCost& c = routing_.cost(n, hi);
      if (!c.reachable()) continue;
      ScoreInputs in;
      in.mean_user_distance = Ratio(c.hops);
      in.utilization = make_ratio(busy[id].raw(), config_.utilization_window.raw());
      in.cost = topology_.node(n).spec.cost;
      in.in_dominant_region = topology_.region_of(n) == home_region;
      Ratio s = placement_score(in, default_weights(Strategy::balanced), Fixed::units(25));
      if (!best || s < best->first) best = std::make_pair(s, id);
    }
    if (!best) {
      warnings_.push_back("no feasible node for " + app.name + "/" + vnf.name + " of user " + std::to_string(u.id));
      continue;
    }
    deploy(app.name, vnf.name, best->second, inst);
  }
}

// ---------------------------------------------------------------------------
// deployments

Resources Engine::used_resources(const std::string& node) const {
  Resources r;
  for (const auto& [id, d] : deployments_) {
    if (!d.active || d.node != node) continue;
    const auto& app = application(d.app);
    r.cpu += app.vnfs[d.stage].footprint.cpu;
    r.memory_mib += app.vnfs[d.stage].footprint.memory_mib;
  }
  return r;
}

bool Engine::fits(const std::string& node, const Resources& need) const {
  auto i = topology_.find_node(node);
  if (!i) return false;
  const NodeSpec& spec = topology_.node(*i).spec;
  Resources used = used_resources(node);
  return used.cpu + need.cpu <= spec.cpu && used.memory_mib + need.memory_mib <= spec.memory_mib;
}

DeploymentId Engine::deploy(const std::string& app_name, const std::string& vnf, const std::string& node,
                            std::optional<InstanceId> instance) {
  const Application& app = application(app_name);
  auto stage = app.vnf_index(vnf);
  if (!stage) fail(ErrorCode::not_found, "application '" + app_name + "' has no VNF '" + vnf + "'");
  if (!topology_.find_node(node)) fail(ErrorCode::not_found, "unknown node '" + node + "'");
  if (!node_up(node)) fail(ErrorCode::invalid_state, "node unavailable: '" + node + "' is down");
  if (!fits(node, app.vnfs[*stage].footprint))
    fail(ErrorCode::capacity, "insufficient capacity on '" + node + "' for " + app_name + "/" + vnf);
  Deployment d;
  d.id = next_deployment_++;
  d.app = app_name;
  d.vnf = vnf;
  d.stage = *stage;
  d.node = node;
  d.instance = instance;
  d.created_at = clock_;
  if (instance && *instance >= next_instance_) next_instance_ = *instance + 1;
  deployments_.emplace(d.id, std::move(d));
  return next_deployment_ - 1;
}

std::vector<DeploymentId> Engine::replicate(const std::string& app, const std::string& vnf,
                                            const std::vector<std::string>& nodes) {
  if (nodes.empty()) fail(ErrorCode::invalid_argument, "replicate requires at least one node");
  // Validate the whole batch before touching state.
  const Application& a = application(app);
  auto stage = a.vnf_index(vnf);
  if (!stage) fail(ErrorCode::not_found, "application '" + app + "' has no VNF '" + vnf + "'");
  std::map<std::string, Resources> extra;
  for (const auto& n : nodes) {
    if (!topology_.find_node(n)) fail(ErrorCode::not_found, "unknown node '" + n + "'");
    if (!node_up(n)) fail(ErrorCode::invalid_state, "node unavailable: '" + n + "' is down");
    Resources& e = extra[n];
    e.cpu += a.vnfs[*stage].footprint.cpu;
    e.memory_mib += a.vnfs[*stage].footprint.memory_mib;
    if (!fits(n, e)) fail(ErrorCode::capacity, "insufficient capacity on '" + n + "' for " + app + "/" + vnf);
  }
  std::vector<DeploymentId> ids;
  for (const auto& n : nodes) ids.push_back(deploy(app, vnf, n));
  return ids;
}

DeploymentId Engine::move(const std::string& app, const std::string& vnf, const std::string& from,
                          const std::string& to) {
  const Deployment* src = nullptr;
  for (const auto& [id, d] : deployments_) {
    if (d.active && d.app == app && d.vnf == vnf && d.node == from) {
      src = &d;
      break;
    }
  }
  if (!src) fail(ErrorCode::not_found, "no active deployment of " + app + "/" + vnf + " on '" + from + "'");
  if (from == to) fail(ErrorCode::invalid_argument, "move source and destination are the same node");
  DeploymentId old = src->id;
  DeploymentId fresh = deploy(app, vnf, to, src->instance);
  remove_deployment(old);
  return fresh;
}

bool Engine::remove(const std::string& app, const std::string& vnf, const std::string& node) {
  for (const auto& [id, d] : deployments_) {
    if (d.active && d.app == app && d.vnf == vnf && d.node == node) {
      std::size_t stage = d.stage;
      remove_deployment(id);
      bool last = std::none_of(deployments_.begin(), deployments_.end(), [&](const auto& kv) {
        return kv.second.active && kv.second.app == app && kv.second.stage == stage;
      });
      if (last) warnings_.push_back("removed the last deployment of " + app + "/" + vnf + "; requests will fail with missing_stage");
      return last;
    }
  }
  fail(ErrorCode::not_found, "no active deployment of " + app + "/" + vnf + " on '" + node + "'");
}

void Engine::remove_deployment(DeploymentId id) {
  auto it = deployments_.find(id);
  if (it == deployments_.end() || !it->second.active) fail(ErrorCode::not_found, "unknown deployment " + std::to_string(id));
  it->second.active = false;
}

std::vector<const Deployment*> Engine::active_deployments() const {
  std::vector<const Deployment*> out;
  for (const auto& [id, d] : deployments_)
    if (d.active) out.push_back(&d);
  return out;
}

// ---------------------------------------------------------------------------
// processes

void Engine::register_handler(const std::string& name, CustomHandler handler) { handlers_[name] = std::move(handler); }

ProcessId Engine::register_process(const ProcessSpec& spec) {
  spec.distribution.validate();
  switch (spec.kind) {
    case ProcessKind::user_mobility_random: {
      MobilityParams m = parse_mobility(spec.params);
      application(m.app);
      for (const auto& n : m.nodes) topology_.node_index(n);
      break;
    }
    case ProcessKind::hotspot_users: {
      HotspotParams h = parse_hotspot(spec.params);
      application(h.app);
      for (const auto& s : h.steps)
        if (!s.node.empty()) topology_.node_index(s.node);
      break;
    }
    case ProcessKind::node_failure:
    case ProcessKind::node_recovery: {
      if (!spec.params.contains("node") || !spec.params.at("node").is_string())
        fail(ErrorCode::invalid_argument, "process '" + spec.name + "' requires params.node");
      topology_.node_index(spec.params.at("node").get<std::string>());
      break;
    }
    case ProcessKind::custom: {
      std::string h = spec.params.value("handler", "");
      if (!handlers_.count(h)) fail(ErrorCode::not_found, "no custom process handler '" + h + "'");
      break;
    }
  }
  for (const auto& [id, p] : processes_)
    if (p.spec.name == spec.name) fail(ErrorCode::invalid_argument, "duplicate process name '" + spec.name + "'");

  ProcessId id = next_process_++;
  ProcessState st;
  st.id = id;
  st.spec = spec;
  st.active = spec.enabled;
  st.rng = make_stream(config_.seed, "process:" + spec.name + ":" + std::to_string(id));
  auto& p = processes_.emplace(id, std::move(st)).first->second;
  if (!p.active) return id;
  if (spec.kind == ProcessKind::hotspot_users) {
    HotspotParams h = parse_hotspot(spec.params);
    while (p.next_step < h.steps.size() && h.steps[p.next_step].at < clock_) {
      warnings_.push_back("process '" + spec.name + "': step at " + h.steps[p.next_step].at.str() + " is in the past, skipped");
      ++p.next_step;
    }
    if (p.next_step < h.steps.size()) schedule_process(p, h.steps[p.next_step].at);
  } else {
    schedule_process(p, clock_ + spec.distribution.sample(p.rng));
  }
  return id;
}

void Engine::schedule_process(ProcessState& p, Time at) { schedule(at, EventKind::process_tick, p.id, ++p.token); }

std::vector<std::string> Engine::tick_process(ProcessId id) {
  auto it = processes_.find(id);
  if (it == processes_.end()) fail(ErrorCode::not_found, "unknown process " + std::to_string(id));
  ProcessState& p = it->second;
  std::vector<std::string> applied;
  auto note = [&](const std::string& s) {
    applied.push_back(s);
    log_perturbation(p.spec.name, s);
  };

  switch (p.spec.kind) {
    case ProcessKind::user_mobility_random: {
      MobilityParams m = parse_mobility(p.spec.params);
      double u = unit_uniform(p.rng);
      if (u < m.create_probability) {
        const std::string& node = m.nodes[uniform_index(p.rng, m.nodes.size())];
        if (!node_up(node)) {
          note("create skipped: node " + node + " unavailable");
          break;
        }
        UserSpec spec;
        spec.app = m.app;
        spec.node = node;
        spec.generation = m.user_distribution.value_or(p.spec.distribution);
        UserId uid = spawn_user(spec, p.spec.name);
        note("create user " + std::to_string(uid) + " at " + node);
      } else if (u < m.create_probability + m.move_probability) {
        std::vector<UserId> candidates;
        for (const auto& [uid, usr] : users_)
          if (usr.active && usr.spec.app == m.app) candidates.push_back(uid);
        if (candidates.empty()) {
          note("move skipped: no users of " + m.app);
          break;
        }
        UserId uid = candidates[uniform_index(p.rng, candidates.size())];
        const std::string& node = m.nodes[uniform_index(p.rng, m.nodes.size())];
        move_user(uid, node);
        note("move user " + std::to_string(uid) + " to " + node);
      } else {
        note("no-op");
      }
      break;
    }
    case ProcessKind::hotspot_users: {
      HotspotParams h = parse_hotspot(p.spec.params);
      if (p.next_step >= h.steps.size()) break;
      const HotspotStep& s = h.steps[p.next_step++];
      switch (s.action) {
        case HotspotStep::Action::add: {
          UserSpec spec;
          spec.app = h.app;
          spec.node = s.node;
          spec.generation = h.user_distribution;
          for (std::int64_t k = 0; k < s.count; ++k) {
            p.spawned_users.push_back(spawn_user(spec, p.spec.name));
            ++p.spawned_total;
          }
          note("add " + std::to_string(s.count) + " users of " + h.app + " at " + s.node);
          break;
        }
        case HotspotStep::Action::relocate: {
          std::size_t moved = 0;
          for (UserId uid : p.spawned_users) {
            if (!users_.at(uid).active) continue;
            move_user(uid, s.node);
            ++moved;
          }
          note("relocate " + std::to_string(moved) + " users to " + s.node);
          break;
        }
        case HotspotStep::Action::remove: {
          auto target = static_cast<std::int64_t>(std::ceil(s.fraction * static_cast<double>(p.spawned_total) - 1e-9));
          std::vector<UserId> live;
          for (UserId uid : p.spawned_users)
            if (users_.at(uid).active) live.push_back(uid);
          std::sort(live.begin(), live.end());
          std::int64_t removed = 0;
          for (UserId uid : live) {
            if (removed == target) break;
            remove_user(uid);
            ++removed;
          }
          note("remove " + std::to_string(removed) + " users");
          break;
        }
      }
      break;
    }
    case ProcessKind::node_failure:
    case ProcessKind::node_recovery: {
      std::string node = p.spec.params.at("node").get<std::string>();
      bool up = p.spec.kind == ProcessKind::node_recovery;
      if (!topology_.find_node(node)) {
        note("skipped: node " + node + " no longer exists");
        break;
      }
      set_node_up(node, up);
      note(std::string(up ? "recover " : "fail ") + node);
      break;
    }
    case ProcessKind::custom: {
      auto h = handlers_.find(p.spec.params.value("handler", ""));
      if (h == handlers_.end()) {
        note("skipped: handler missing");
        break;
      }
      for (const auto& s : h->second(*this, p.spec, p.rng)) note(s);
      break;
    }
  }
  return applied;
}

void Engine::log_perturbation(const std::string& process, const std::string& what) {
  traces_.perturbations.push_back({clock_, process, what});
}

// ---------------------------------------------------------------------------
// event loop

void Engine::schedule(Time t, EventKind kind, std::uint64_t subject, std::uint64_t token, std::string link) {
  Event e;
  e.time = t;
  e.sequence = sequence_++;
  e.kind = kind;
  e.subject = subject;
  e.token = token;
  e.link = std::move(link);
  events_.push(std::move(e));
}

Time Engine::run_until(Time t_stop) {
  if (t_stop < clock_) fail(ErrorCode::invalid_argument, "run_until target " + t_stop.str() + " precedes clock " + clock_.str());
  while (!events_.empty() && events_.top().time < t_stop) {
    Event e = events_.top();
    events_.pop();
    clock_ = e.time;
    ++executed_;
    dispatch(e);
  }
  clock_ = t_stop;
  return clock_;
}

void Engine::dispatch(const Event& e) {
  switch (e.kind) {
    case EventKind::request_emit: on_emit(e.subject, e.token); break;
    case EventKind::message_arrival: on_arrival(e.subject); break;
    case EventKind::transfer_complete: on_transfer_complete(e.link, e.token); break;
    case EventKind::service_complete: on_service_complete(e.subject, e.token); break;
    case EventKind::process_tick: {
      auto it = processes_.find(e.subject);
      if (it == processes_.end() || !it->second.active || it->second.token != e.token) break;
      tick_process(e.subject);
      ProcessState& p = processes_.at(e.subject);
      if (p.spec.kind == ProcessKind::hotspot_users) {
        HotspotParams h = parse_hotspot(p.spec.params);
        if (p.next_step < h.steps.size()) schedule_process(p, h.steps[p.next_step].at);
        else p.active = false;
      } else if ((p.spec.kind == ProcessKind::node_failure || p.spec.kind == ProcessKind::node_recovery) &&
                 p.spec.params.value("once", true)) {
        p.active = false;
      } else {
        schedule_process(p, clock_ + p.spec.distribution.sample(p.rng));
      }
      break;
    }
  }
}

void Engine::on_emit(UserId uid, std::uint64_t generation) {
  auto it = users_.find(uid);
  if (it == users_.end() || !it->second.active || it->second.generation != generation) return;
  User& u = it->second;
  if (node_up(u.spec.node)) {
    RequestId r = traces_.requests.size();
    RequestTrace t;
    t.id = r;
    t.app = u.spec.app;
    t.user = uid;
    t.origin = u.spec.node;
    t.emitted = clock_;
    t.path.push_back(u.spec.node);
    traces_.requests.push_back(std::move(t));
    Inflight f;
    f.at = u.spec.node;
    inflight_.emplace(r, std::move(f));
    begin_message(r);
  }
  schedule(clock_ + u.spec.generation.sample(u.rng), EventKind::request_emit, uid, generation);
}

std::optional<DeploymentId> Engine::select_deployment(const RequestTrace& trace, std::size_t stage,
                                                      const std::string& from) {
  refresh_routes();
  NodeIndex src = topology_.node_index(from);
  std::optional<InstanceId> bound = users_.at(trace.user).instance;

  struct Best {
    Fixed latency;
    const std::string* node;
    DeploymentId id;
  };
  auto pick = [&](bool restrict) -> std::optional<DeploymentId> {
    std::optional<Best> best;
    for (const auto& [id, d] : deployments_) {
      if (!d.active || d.app != trace.app || d.stage != stage) continue;
      if (restrict && d.instance && d.instance != bound) continue;
      NodeIndex ni = topology_.node_index(d.node);
      if (!avail_.node_up[ni]) continue;
      const PathCost& c = routing_.cost(src, ni);
      if (!c.reachable()) continue;
      if (!best || c.latency < best->latency || (c.latency == best->latency && d.node < *best->node))
        best = Best{c.latency, &d.node, id};
    }
    if (!best) return std::nullopt;
    return best->id;
  };
  if (bound) {
    if (auto d = pick(true)) return d;
  }
  return pick(false);
}

void Engine::begin_message(RequestId r) {
  Inflight& f = inflight_.at(r);
  RequestTrace& t = traces_.requests[r];
  const Application& app = application(t.app);
  if (f.message < app.vnfs.size()) {
    auto d = select_deployment(t, f.message, f.at);
    if (!d) {
      bool any = std::any_of(deployments_.begin(), deployments_.end(), [&](const auto& kv) {
        return kv.second.active && kv.second.app == t.app && kv.second.stage == f.message;
      });
      fail_request(r, any ? "no_path" : "missing_stage");
      return;
    }
    auto path = route(f.at, deployments_.at(*d).node);
    if (!path) {
      fail_request(r, "no_path");
      return;
    }
    f.target = d;
    f.path = std::move(*path);
  } else if (!app.has_response_path()) {
    complete_request(r);
    return;
  } else {
    auto path = route(t.origin, f.at);
    if (!path) {
      fail_request(r, "no_path");
      return;
    }
    std::reverse(path->begin(), path->end());
    f.target.reset();
    f.path = std::move(*path);
  }
  continue_hops(r);
}

void Engine::continue_hops(RequestId r) {
  Inflight& f = inflight_.at(r);
  if (f.path.size() <= 1) {
    arrive_at_target(r);
    return;
  }
  const std::string& next = f.path[1];
  NodeIndex a = topology_.node_index(f.at);
  auto bi = topology_.find_node(next);
  std::optional<LinkIndex> li = bi ? topology_.find_link(a, *bi) : std::nullopt;
  if (!bi || !avail_.node_up[*bi] || !li || !avail_.link_up[*li]) {
    reroute(r, f.at);
    return;
  }
  const Link& link = topology_.link(*li);
  const RequestTrace& t = traces_.requests[r];
  const Application& app = application(t.app);
  Fixed size = app.messages[f.message].size;
  f.hop_link = link.id;
  f.hop_start = clock_;
  if (size.raw() == 0) {
    f.hop_serialized = clock_;
    schedule(clock_ + link.latency, EventKind::message_arrival, r);
    return;
  }
  std::uint64_t tid = next_transfer_++;
  transfers_.emplace(tid, r);
  channels_[link.id].start(tid, size, clock_, link.bandwidth);
  reschedule_channel(link.id);
}

void Engine::reschedule_channel(const std::string& link_id) {
  auto li = topology_.find_link_by_id(link_id);
  if (!li) return;
  LinkChannel& ch = channels_[link_id];
  if (auto t = ch.next_completion(topology_.link(*li).bandwidth))
    schedule(std::max(*t, clock_), EventKind::transfer_complete, 0, ch.version(), link_id);
}

void Engine::on_transfer_complete(const std::string& link_id, std::uint64_t version) {
  auto cit = channels_.find(link_id);
  auto li = topology_.find_link_by_id(link_id);
  if (cit == channels_.end() || !li || cit->second.version() != version) return;
  const Link& link = topology_.link(*li);
  for (const auto& tr : cit->second.advance(clock_, link.bandwidth)) {
    auto rit = transfers_.find(tr.id);
    if (rit == transfers_.end()) continue;
    RequestId r = rit->second;
    transfers_.erase(rit);
    auto fit = inflight_.find(r);
    if (fit == inflight_.end()) continue;
    fit->second.hop_serialized = clock_;
    schedule(clock_ + link.latency, EventKind::message_arrival, r);
  }
  reschedule_channel(link_id);
}

void Engine::on_arrival(RequestId r) {
  auto fit = inflight_.find(r);
  if (fit == inflight_.end()) return;
  Inflight& f = fit->second;
  RequestTrace& t = traces_.requests[r];
  const std::string from = f.at;
  const std::string to = f.path.size() > 1 ? f.path[1] : f.at;

  HopRecord h;
  h.link = f.hop_link;
  h.from = from;
  h.to = to;
  h.size = application(t.app).messages[f.message].size;
  h.start = f.hop_start;
  h.serialized = f.hop_serialized;
  h.end = clock_;
  auto fi = topology_.find_node(from);
  auto ti = topology_.find_node(to);
  if (fi && ti) {
    h.from_region = topology_.region_of(*fi);
    h.to_region = topology_.region_of(*ti);
    h.crosses_region = h.from_region != h.to_region;
  }
  if (auto li = topology_.find_link_by_id(h.link)) t.distance += topology_.link(*li).distance_km;
  t.hops.push_back(std::move(h));

  if (!ti || !avail_.node_up[*ti]) {
    reroute(r, from);
    return;
  }
  t.path.push_back(to);
  f.at = to;
  f.path.erase(f.path.begin());
  continue_hops(r);
}

void Engine::arrive_at_target(RequestId r) {
  Inflight& f = inflight_.at(r);
  if (!f.target) {
    complete_request(r);
    return;
  }
  Deployment& d = deployments_.at(*f.target);
  if (!node_up(d.node)) {
    reroute(r, f.at);
    return;
  }
  RequestTrace& t = traces_.requests[r];
  ServiceRecord s;
  s.deployment = d.id;
  s.node = d.node;
  s.vnf = d.vnf;
  s.arrival = clock_;
  s.start = clock_;
  s.end = clock_;
  t.services.push_back(std::move(s));
  if (d.serving) d.queue.push_back(r);
  else start_service(d, r);
}

void Engine::start_service(Deployment& d, RequestId r) {
  d.serving = r;
  RequestTrace& t = traces_.requests[r];
  t.services.back().start = clock_;
  schedule(clock_ + application(d.app).vnfs[d.stage].service_time, EventKind::service_complete, d.id, r);
}

void Engine::on_service_complete(DeploymentId did, RequestId r) {
  Deployment& d = deployments_.at(did);
  if (d.serving != r) return;  // dropped by a node failure
  d.serving.reset();
  RequestTrace& t = traces_.requests[r];
  t.services.back().end = clock_;
  t.services.back().finished = true;
  Inflight& f = inflight_.at(r);
  f.at = d.node;
  ++f.message;
  begin_message(r);
  Deployment& again = deployments_.at(did);
  if (!again.serving && !again.queue.empty()) {
    RequestId next = again.queue.front();
    again.queue.pop_front();
    start_service(again, next);
  }
}

bool Engine::reroute(RequestId r, const std::string& from) {
  RequestTrace& t = traces_.requests[r];
  if (t.rerouted) {
    fail_request(r, "loss");
    return false;
  }
  t.rerouted = true;
  Inflight& f = inflight_.at(r);
  f.at = from;
  std::string dest;
  if (f.target) {
    const Deployment& d = deployments_.at(*f.target);
    if (!node_up(d.node)) {
      auto alt = select_deployment(t, f.message, from);
      if (!alt) {
        fail_request(r, "loss");
        return false;
      }
      f.target = alt;
    }
    dest = deployments_.at(*f.target).node;
  } else {
    dest = t.origin;
  }
  if (!node_up(from) || !node_up(dest)) {
    fail_request(r, "loss");
    return false;
  }
  auto path = route(from, dest);
  if (!path) {
    fail_request(r, "loss");
    return false;
  }
  f.path = std::move(*path);
  continue_hops(r);
  return true;
}

void Engine::fail_request(RequestId r, const std::string& reason) {
  RequestTrace& t = traces_.requests[r];
  if (!t.in_flight()) return;
  t.failed = clock_;
  t.failure_reason = reason;
  inflight_.erase(r);
}

void Engine::complete_request(RequestId r) {
  RequestTrace& t = traces_.requests[r];
  t.completed = clock_;
  inflight_.erase(r);
}

RuntimeSnapshot Engine::snapshot_runtime() const {
  RuntimeSnapshot s;
  s.users = active_user_count();
  s.deployments = active_deployments().size();
  s.in_flight = inflight_.size();
  for (NodeIndex i = 0; i < topology_.node_count(); ++i)
    if (!avail_.node_up[i]) ++s.down_nodes;
  for (LinkIndex i = 0; i < topology_.links().size(); ++i) {
    const Link& l = topology_.link(i);
    if (!avail_.link_up[i] || !avail_.node_up[l.a] || !avail_.node_up[l.b]) ++s.unreachable_links;
  }
  s.pending_events = events_.size();
  s.clock = clock_;
  return s;
}

}  // namespace cesim
