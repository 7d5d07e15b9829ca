#include "cesim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cesim/error.hpp"
#include "cesim/json_util.hpp"
#include "cesim/topology.hpp"

namespace cesim {

using nlohmann::json;
using namespace jsonu;

Rng make_stream(std::uint64_t seed, std::string_view key) {
  std::vector<std::uint32_t> material{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  for (char c : key) material.push_back(static_cast<unsigned char>(c));
  std::seed_seq seq(material.begin(), material.end());
  return Rng(seq);
}

double unit_uniform(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(Rng& rng, std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

std::optional<std::size_t> Application::vnf_index(std::string_view vnf) const {
  for (std::size_t i = 0; i < vnfs.size(); ++i)
    if (vnfs[i].name == vnf) return i;
  return std::nullopt;
}

void validate_application(const Application& app) {
  const std::string who = "application '" + app.name + "': ";
  if (app.name.empty()) fail(ErrorCode::invalid_argument, "application name must not be empty");
  if (app.vnfs.empty()) fail(ErrorCode::invalid_argument, who + "at least one VNF required");
  std::set<std::string> names;
  for (const auto& v : app.vnfs) {
    if (v.name.empty() || v.name == kUserEndpoint) fail(ErrorCode::invalid_argument, who + "invalid VNF name '" + v.name + "'");
    if (!names.insert(v.name).second) fail(ErrorCode::invalid_argument, who + "duplicate VNF '" + v.name + "'");
    if (v.service_time.raw() < 0) fail(ErrorCode::invalid_argument, who + "service_time must be >= 0");
    if (v.footprint.cpu.raw() < 0 || v.footprint.memory_mib.raw() < 0)
      fail(ErrorCode::invalid_argument, who + "resource footprint must be >= 0");
  }
  const std::size_t v = app.vnfs.size();
  const std::size_t m = app.messages.size();
  if (m != v && m != v + 1)
    fail(ErrorCode::invalid_argument, who + "chain inconsistency: " + std::to_string(v) + " VNFs cannot carry " +
                                          std::to_string(m) + " messages");
  for (std::size_t i = 0; i < m; ++i) {
    const auto& msg = app.messages[i];
    std::string want_src = i == 0 ? std::string(kUserEndpoint) : app.vnfs[i - 1].name;
    std::string want_dst = i < v ? app.vnfs[i].name : std::string(kUserEndpoint);
    if (msg.src != want_src || msg.dst != want_dst)
      fail(ErrorCode::invalid_argument, who + "chain inconsistency at message " + std::to_string(i) + " ('" + msg.name +
                                            "' expected " + want_src + " -> " + want_dst + ")");
    if (msg.size.raw() < 0) fail(ErrorCode::invalid_argument, who + "message size must be >= 0");
  }
  if (app.latency_requirement.raw() <= 0) fail(ErrorCode::invalid_argument, who + "latency_requirement must be > 0");
}

Time Distribution::sample(Rng& rng) const {
  Time t;
  switch (kind) {
    case Kind::deterministic: t = period; break;
    case Kind::exponential: t = Time::from_double(-std::log1p(-unit_uniform(rng)) / rate); break;
    case Kind::uniform: t = Time::from_double(lo.to_double() + unit_uniform(rng) * (hi - lo).to_double()); break;
  }
  return std::max(t, Time::from_raw(1));
}

void Distribution::validate() const {
  switch (kind) {
    case Kind::deterministic:
      if (period.raw() <= 0) fail(ErrorCode::invalid_argument, "deterministic distribution requires time > 0");
      break;
    case Kind::exponential:
      if (!(rate > 0.0) || !std::isfinite(rate)) fail(ErrorCode::invalid_argument, "exponential distribution requires rate > 0");
      break;
    case Kind::uniform:
      if (lo.raw() <= 0 || !(lo < hi)) fail(ErrorCode::invalid_argument, "uniform distribution requires 0 < lo < hi");
      break;
  }
}

std::string_view to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::user_mobility_random: return "user_mobility_random";
    case ProcessKind::hotspot_users: return "hotspot_users";
    case ProcessKind::node_failure: return "node_failure";
    case ProcessKind::node_recovery: return "node_recovery";
    case ProcessKind::custom: return "custom";
  }
  return "custom";
}

ProcessKind process_kind_from(std::string_view name) {
  for (auto k : {ProcessKind::user_mobility_random, ProcessKind::hotspot_users, ProcessKind::node_failure,
                 ProcessKind::node_recovery, ProcessKind::custom})
    if (to_string(k) == name) return k;
  fail(ErrorCode::invalid_argument, "unknown process kind '" + std::string(name) + "'");
}

Distribution load_distribution(const json& doc, const std::string& path) {
  std::string type = get_string(doc, "type", path);
  Distribution d;
  if (type == "deterministic") {
    d = Distribution::deterministic(get_fixed(doc, "time", path));
  } else if (type == "exponential") {
    if (doc.contains("rate")) d = Distribution::exponential(get_double(doc, "rate", path));
    else d = Distribution::exponential(1.0 / get_double(doc, "mean", path));
  } else if (type == "uniform") {
    d = Distribution::uniform(get_fixed(doc, "lo", path), get_fixed(doc, "hi", path));
  } else {
    schema_error(path + ".type", "expected deterministic, exponential or uniform");
  }
  try {
    d.validate();
  } catch (const Error& e) {
    schema_error(path, e.what());
  }
  return d;
}

json distribution_to_json(const Distribution& d) {
  switch (d.kind) {
    case Distribution::Kind::deterministic: return {{"type", "deterministic"}, {"time", fixed_json(d.period)}};
    case Distribution::Kind::exponential: return {{"type", "exponential"}, {"rate", d.rate}};
    case Distribution::Kind::uniform:
      return {{"type", "uniform"}, {"lo", fixed_json(d.lo)}, {"hi", fixed_json(d.hi)}};
  }
  return {};
}

namespace {

Application load_application(const json& a, const std::string& p) {
  Application app;
  app.name = get_string(a, "name", p);
  app.latency_requirement = get_fixed(a, "latency_requirement", p);
  const json& vnfs = get_array(a, "vnfs", p);
  for (std::size_t i = 0; i < vnfs.size(); ++i) {
    std::string vp = p + ".vnfs[" + std::to_string(i) + "]";
    VnfSpec v;
    v.name = get_string(vnfs[i], "name", vp);
    v.service_time = get_fixed(vnfs[i], "service_time", vp);
    if (vnfs[i].contains("resources")) {
      const json& r = vnfs[i].at("resources");
      v.footprint.cpu = get_fixed_opt(r, "cpu", vp + ".resources").value_or(Fixed{});
      if (r.contains("memory")) v.footprint.memory_mib = parse_memory(r.at("memory"), vp + ".resources.memory");
    }
    app.vnfs.push_back(std::move(v));
  }
  const json& msgs = get_array(a, "messages", p);
  for (std::size_t i = 0; i < msgs.size(); ++i) {
    std::string mp = p + ".messages[" + std::to_string(i) + "]";
    MessageSpec m;
    m.name = get_string(msgs[i], "name", mp);
    m.src = get_string(msgs[i], "src", mp);
    m.dst = get_string(msgs[i], "dst", mp);
    m.size = get_fixed(msgs[i], "size", mp);
    app.messages.push_back(std::move(m));
  }
  validate_application(app);
  return app;
}

}  // namespace

std::vector<Application> load_applications(const json& doc) {
  std::vector<Application> apps;
  const json& list = doc.is_array() ? doc : get_array(doc, "applications", "$");
  std::set<std::string> names;
  for (std::size_t i = 0; i < list.size(); ++i) {
    Application a = load_application(list[i], "$.applications[" + std::to_string(i) + "]");
    if (!names.insert(a.name).second) fail(ErrorCode::invalid_argument, "duplicate application '" + a.name + "'");
    apps.push_back(std::move(a));
  }
  return apps;
}

json application_to_json(const Application& app) {
  json vnfs = json::array();
  for (const auto& v : app.vnfs) {
    vnfs.push_back({{"name", v.name},
                    {"service_time", fixed_json(v.service_time)},
                    {"resources", {{"cpu", fixed_json(v.footprint.cpu)}, {"memory", format_memory(v.footprint.memory_mib)}}}});
  }
  json msgs = json::array();
  for (const auto& m : app.messages)
    msgs.push_back({{"name", m.name}, {"src", m.src}, {"dst", m.dst}, {"size", fixed_json(m.size)}});
  return {{"name", app.name},
          {"latency_requirement", fixed_json(app.latency_requirement)},
          {"vnfs", std::move(vnfs)},
          {"messages", std::move(msgs)}};
}

json applications_to_json(const std::vector<Application>& apps) {
  json list = json::array();
  for (const auto& a : apps) list.push_back(application_to_json(a));
  return {{"applications", std::move(list)}};
}

std::vector<UserSpec> load_users(const json& doc) {
  std::vector<UserSpec> users;
  const json& list = doc.is_array() ? doc : get_array(doc, "users", "$");
  for (std::size_t i = 0; i < list.size(); ++i) {
    std::string p = "$.users[" + std::to_string(i) + "]";
    UserSpec u;
    u.app = get_string(list[i], "app", p);
    u.node = get_string(list[i], "node", p);
    u.generation = load_distribution(member(list[i], "distribution", p), p + ".distribution");
    u.first_message = get_string_or(list[i], "message", p, "");
    std::int64_t count = list[i].value("count", 1);
    if (count < 1) schema_error(p + ".count", "must be >= 1");
    for (std::int64_t k = 0; k < count; ++k) users.push_back(u);
  }
  return users;
}

json user_to_json(const UserSpec& u) {
  json j = {{"app", u.app}, {"node", u.node}, {"distribution", distribution_to_json(u.generation)}};
  if (!u.first_message.empty()) j["message"] = u.first_message;
  return j;
}

std::vector<PlacementEntry> load_placements(const json& doc) {
  std::vector<PlacementEntry> out;
  const json& list = doc.is_array() ? doc : get_array(doc, "placements", "$");
  for (std::size_t i = 0; i < list.size(); ++i) {
    std::string p = "$.placements[" + std::to_string(i) + "]";
    PlacementEntry e;
    e.app = get_string(list[i], "app", p);
    e.vnf = get_string(list[i], "vnf", p);
    e.node = get_string(list[i], "node", p);
    if (list[i].contains("instance")) e.instance = list[i].at("instance").get<std::int64_t>();
    out.push_back(std::move(e));
  }
  return out;
}

ProcessSpec load_process(const json& doc, const std::string& path) {
  ProcessSpec p;
  p.name = get_string(doc, "name", path);
  p.kind = process_kind_from(get_string(doc, "kind", path));
  p.enabled = doc.value("enabled", true);
  if (doc.contains("distribution")) p.distribution = load_distribution(doc.at("distribution"), path + ".distribution");
  if (doc.contains("params")) {
    if (!doc.at("params").is_object()) schema_error(path + ".params", "expected an object");
    p.params = doc.at("params");
  }
  auto probability = [&](const char* key) {
    if (!p.params.contains(key)) return;
    double v = get_double(p.params, key, path + ".params");
    if (!(v >= 0.0 && v <= 1.0)) schema_error(path + ".params." + key, "probability must lie in [0, 1]");
  };
  probability("create_probability");
  probability("move_probability");
  if (p.kind == ProcessKind::hotspot_users) parse_hotspot(p.params);
  if (p.kind == ProcessKind::user_mobility_random) parse_mobility(p.params);
  return p;
}

std::vector<ProcessSpec> load_processes(const json& doc) {
  std::vector<ProcessSpec> out;
  const json& list = doc.is_array() ? doc : get_array(doc, "processes", "$");
  for (std::size_t i = 0; i < list.size(); ++i) out.push_back(load_process(list[i], "$.processes[" + std::to_string(i) + "]"));
  return out;
}

json process_to_json(const ProcessSpec& p) {
  return {{"name", p.name},
          {"kind", to_string(p.kind)},
          {"enabled", p.enabled},
          {"distribution", distribution_to_json(p.distribution)},
          {"params", p.params}};
}

HotspotParams parse_hotspot(const json& params) {
  const std::string p = "$.params";
  HotspotParams h;
  h.app = get_string(params, "app_ref", p);
  h.user_distribution = params.contains("user_distribution")
                            ? load_distribution(params.at("user_distribution"), p + ".user_distribution")
                            : Distribution::deterministic(Time::units(30));
  const json& steps = get_array(params, "steps", p);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    std::string sp = p + ".steps[" + std::to_string(i) + "]";
    HotspotStep s;
    s.at = get_fixed(steps[i], "time", sp);
    std::string action = get_string(steps[i], "action", sp);
    if (action == "add") {
      s.action = HotspotStep::Action::add;
      s.count = steps[i].value("count", std::int64_t{0});
      s.node = get_string(steps[i], "node", sp);
      if (s.count < 1) schema_error(sp + ".count", "must be >= 1");
    } else if (action == "relocate") {
      s.action = HotspotStep::Action::relocate;
      s.node = get_string(steps[i], "node", sp);
    } else if (action == "remove") {
      s.action = HotspotStep::Action::remove;
      s.fraction = get_double(steps[i], "fraction", sp);
      if (!(s.fraction >= 0.0 && s.fraction <= 1.0)) schema_error(sp + ".fraction", "must lie in [0, 1]");
    } else {
      schema_error(sp + ".action", "expected add, relocate or remove");
    }
    if (!h.steps.empty() && !(h.steps.back().at < s.at)) schema_error(sp + ".time", "steps must be strictly increasing");
    h.steps.push_back(std::move(s));
  }
  return h;
}

MobilityParams parse_mobility(const json& params) {
  const std::string p = "$.params";
  MobilityParams m;
  m.app = get_string(params, "app_ref", p);
  for (const auto& n : get_array(params, "nodes", p)) {
    if (!n.is_string()) schema_error(p + ".nodes", "expected node ids");
    m.nodes.push_back(n.get<std::string>());
  }
  if (m.nodes.empty()) schema_error(p + ".nodes", "at least one candidate node required");
  m.create_probability = params.contains("create_probability") ? get_double(params, "create_probability", p) : 0.0;
  m.move_probability = params.contains("move_probability") ? get_double(params, "move_probability", p) : 0.0;
  if (m.create_probability + m.move_probability > 1.0 + 1e-12)
    schema_error(p, "create_probability + move_probability must not exceed 1");
  if (params.contains("user_distribution"))
    m.user_distribution = load_distribution(params.at("user_distribution"), p + ".user_distribution");
  return m;
}

}  // namespace cesim
