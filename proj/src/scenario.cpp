#include "cesim/scenario.hpp"

#include <fstream>

#include "cesim/error.hpp"
#include "cesim/json_util.hpp"

namespace cesim {

using json = nlohmann::json;

namespace {

RegionRates load_rates(const json& list, const std::string& path) {
  RegionRates out;
  if (!list.is_array()) jsonu::schema_error(path, "expected an array");
  for (std::size_t i = 0; i < list.size(); ++i) {
    std::string p = path + "[" + std::to_string(i) + "]";
    out[{jsonu::get_string(list[i], "from", p), jsonu::get_string(list[i], "to", p)}] = jsonu::get_fixed(list[i], "rate", p);
  }
  return out;
}

json rates_to_json(const RegionRates& rates) {
  json list = json::array();
  for (const auto& [k, v] : rates) list.push_back({{"from", k.first}, {"to", k.second}, {"rate", jsonu::fixed_json(v)}});
  return list;
}

json placements_to_json(const std::vector<PlacementEntry>& ps) {
  json list = json::array();
  for (const auto& p : ps) {
    json j = {{"app", p.app}, {"vnf", p.vnf}, {"node", p.node}};
    if (p.instance) j["instance"] = *p.instance;
    list.push_back(std::move(j));
  }
  return {{"placements", std::move(list)}};
}

json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) fail(ErrorCode::not_found, "cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::invalid_argument, p.filename().string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& p, const json& doc) {
  std::ofstream out(p);
  if (!out) fail(ErrorCode::internal, "cannot write " + p.string());
  out << doc.dump(2) << "\n";
}

NodeSpec make_node(const std::string& name, NodeRole role, std::int64_t cpu, std::int64_t mem_mib, Fixed cost) {
  return NodeSpec{name, role, Fixed::units(cpu), Fixed::units(mem_mib), cost};
}

ClusterSpec make_cluster(const std::string& name, const std::string& role, const std::string& region,
                         std::size_t workers, Fixed cost) {
  ClusterSpec c{name, role, region, {}};
  c.nodes.push_back(make_node("cp", NodeRole::control_plane, 8, 16384, cost));
  for (std::size_t i = 0; i < workers; ++i)
    c.nodes.push_back(make_node("worker-" + std::to_string(i), NodeRole::worker, 8, 16384, cost));
  return c;
}

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

}  // namespace

Engine instantiate(const Scenario& s, const std::map<std::string, CustomHandler>& handlers) {
  EngineConfig cfg;
  cfg.seed = s.seed;
  Engine e(s.topology, s.applications, cfg);
  for (const auto& [name, h] : handlers) e.register_handler(name, h);
  for (const auto& p : s.placements) e.deploy(p.app, p.vnf, p.node, p.instance);
  e.set_user_policy(s.policy);
  for (const auto& u : s.users) e.spawn_user(u, "scenario");
  for (const auto& p : s.processes) e.register_process(p);
  return e;
}

Scenario load_scenario_documents(const json& docs, const std::string& name) {
  if (!docs.is_object()) jsonu::schema_error("$", "scenario must be an object of documents");
  Scenario s;
  s.name = name;
  s.topology = load_topology(jsonu::member(docs, "topology", "$"));
  if (docs.contains("services")) s.applications = load_applications(docs.at("services"));
  if (docs.contains("placements")) s.placements = load_placements(docs.at("placements"));
  if (docs.contains("users")) s.users = load_users(docs.at("users"));
  if (docs.contains("processes")) s.processes = load_processes(docs.at("processes"));
  if (docs.contains("config")) {
    const json& c = docs.at("config");
    if (!c.is_object()) jsonu::schema_error("$.config", "expected an object");
    for (const auto& [k, v] : c.items()) {
      if (k == "name") s.name = jsonu::get_string(c, "name", "$.config");
      else if (k == "seed") {
        if (!v.is_number_unsigned() && !v.is_number_integer()) jsonu::schema_error("$.config.seed", "expected an integer");
        s.seed = v.get<std::uint64_t>();
      } else if (k == "policy") s.policy = user_policy_from(jsonu::get_string(c, "policy", "$.config"));
      else if (k == "egress_rates") s.egress_rates = load_rates(v, "$.config.egress_rates");
      else if (k == "ingress_rates") s.ingress_rates = load_rates(v, "$.config.ingress_rates");
      else s.extra[k] = v;
    }
  }
  return s;
}

json scenario_documents(const Scenario& s) {
  json users = json::array();
  for (const auto& u : s.users) users.push_back(user_to_json(u));
  json procs = json::array();
  for (const auto& p : s.processes) procs.push_back(process_to_json(p));
  json config = s.extra;
  config["name"] = s.name;
  config["seed"] = s.seed;
  config["policy"] = std::string(to_string(s.policy));
  config["egress_rates"] = rates_to_json(s.egress_rates);
  config["ingress_rates"] = rates_to_json(s.ingress_rates);
  return {{"topology", topology_to_json(s.topology)},
          {"services", applications_to_json(s.applications)},
          {"placements", placements_to_json(s.placements)},
          {"users", {{"users", std::move(users)}}},
          {"processes", {{"processes", std::move(procs)}}},
          {"config", std::move(config)}};
}

Scenario load_scenario_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) fail(ErrorCode::not_found, "scenario directory " + dir.string() + " not found");
  json docs = json::object();
  for (const char* key : {"topology", "services", "placements", "users", "processes", "config"}) {
    auto p = dir / (std::string(key) + ".json");
    if (std::filesystem::exists(p)) docs[key] = read_json_file(p);
  }
  return load_scenario_documents(docs, dir.filename().string());
}

void write_scenario_dir(const Scenario& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json docs = scenario_documents(s);
  for (const auto& [key, doc] : docs.items()) write_json_file(dir / (key + ".json"), doc);
}

std::vector<Application> default_applications() {
  return {chain("Augmented Reality (AR)", {"ar-capture", "ar-detect", "ar-render"}, Time::parse("0.3"), Fixed::units(20),
                Fixed::units(10), Time::units(100)),
          chain("mIoTs", {"iot-aggregate"}, Time::parse("0.3"), Fixed::units(5), Fixed::units(2), Time::units(60))};
}

Scenario default_scenario(std::uint64_t seed) {
  Scenario s;
  s.name = "default";
  s.seed = seed;
  const std::string region = "region-a";
  std::vector<ClusterSpec> clusters = {make_cluster("cdc-0", "CDC", region, 2, Fixed::parse("0.01"))};
  for (int i = 0; i < 3; ++i) clusters.push_back(make_cluster("edc-" + std::to_string(i), "EDC", region, 2, Fixed::parse("0.06")));
  for (int i = 0; i < 2; ++i) clusters.push_back(make_cluster("mec-" + std::to_string(i), "MEC", region, 2, Fixed::parse("0.30")));
  auto lk = [](const char* a, const char* b, int lat, int km) {
    return LinkSpec{a, b, Fixed::units(km), Fixed::units(lat), Fixed::units(100)};
  };
  std::vector<LinkSpec> links = {lk("cdc-0", "edc-0", 20, 400), lk("cdc-0", "edc-1", 20, 400), lk("cdc-0", "edc-2", 20, 400),
                                 lk("edc-0", "mec-0", 5, 40),   lk("edc-1", "mec-0", 5, 40),   lk("edc-2", "mec-1", 5, 40)};
  s.topology = Topology::build(std::move(clusters), std::move(links));
  s.applications = default_applications();

  Rng rng = make_stream(seed, "default-placement");
  const auto& nodes = s.topology.nodes();
  for (const auto& app : s.applications)
    for (const auto& v : app.vnfs) s.placements.push_back({app.name, v.name, nodes[uniform_index(rng, nodes.size())].id, std::nullopt});

  s.users.push_back(UserSpec{"Augmented Reality (AR)", "mec-0-worker-1", Distribution::deterministic(Time::units(125)), ""});
  s.users.push_back(UserSpec{"mIoTs", "mec-1-worker-0", Distribution::deterministic(Time::units(250)), ""});

  ProcessSpec mob;
  mob.name = "user-mobility-ar";
  mob.kind = ProcessKind::user_mobility_random;
  mob.enabled = false;
  mob.distribution = Distribution::deterministic(Time::units(30));
  mob.params = {{"app_ref", "Augmented Reality (AR)"},
                {"nodes", {"mec-0-worker-1", "edc-1-worker-1", "edc-2-worker-1"}},
                {"create_probability", 0.10},
                {"move_probability", 0.80}};
  s.processes.push_back(std::move(mob));
  return s;
}

Scenario grid_scenario(std::size_t clusters, std::size_t nodes_per_cluster, std::uint64_t seed) {
  if (clusters == 0 || nodes_per_cluster == 0) fail(ErrorCode::invalid_argument, "clusters and nodes_per_cluster must be positive");
  Scenario s;
  s.name = "clusters" + std::to_string(clusters) + "_nodes" + std::to_string(nodes_per_cluster);
  s.seed = seed;
  std::vector<ClusterSpec> cs;
  for (std::size_t i = 0; i < clusters; ++i)
    cs.push_back(make_cluster("cluster-" + std::to_string(i), "", "region-0", nodes_per_cluster - 1, Fixed::parse("0.06")));
  std::vector<LinkSpec> links;
  for (std::size_t i = 0; i < clusters; ++i)
    for (std::size_t j = i + 1; j < clusters; ++j)
      links.push_back(LinkSpec{cs[i].name, cs[j].name, Fixed::units(100), Fixed::units(10), Fixed::units(100)});
  s.topology = Topology::build(std::move(cs), std::move(links));
  s.applications = default_applications();
  return s;
}

}  // namespace cesim
