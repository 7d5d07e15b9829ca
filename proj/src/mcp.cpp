#include "cesim/mcp.hpp"

#include <httplib.h>

#include <chrono>
#include <istream>
#include <ostream>

#include "cesim/error.hpp"
#include "cesim/json_schema.hpp"
#include "cesim/json_util.hpp"
#include "cesim/scoring.hpp"

namespace cesim {

using json = nlohmann::json;

json to_json(const ToolCallRecord& r) {
  return {{"seq", r.seq},
          {"actor", r.actor},
          {"simulation_id", r.simulation_id.empty() ? json(nullptr) : json(r.simulation_id)},
          {"window", r.window ? json(*r.window) : json(nullptr)},
          {"tool", r.tool},
          {"input_summary", r.input_summary},
          {"input_sha256", r.input_sha256},
          {"output_summary", r.output_summary},
          {"output_sha256", r.output_sha256},
          {"status", r.status},
          {"error_code", r.error_code.empty() ? json(nullptr) : json(r.error_code)},
          {"wall_ms", r.wall_ms}};
}

namespace {

// --- schema builders ---------------------------------------------------------

json str(const std::string& desc) { return {{"type", "string"}, {"description", desc}, {"minLength", 1}}; }
json any_str(const std::string& desc) { return {{"type", "string"}, {"description", desc}}; }
json num(const std::string& desc) { return {{"type", {"number", "string"}}, {"description", desc}}; }
json pos(const std::string& desc) { return {{"type", "number"}, {"description", desc}, {"exclusiveMinimum", 0}}; }
json integer(const std::string& desc, std::int64_t min = 0) {
  return {{"type", "integer"}, {"description", desc}, {"minimum", min}};
}
json boolean(const std::string& desc) { return {{"type", "boolean"}, {"description", desc}}; }
json object_arg(const std::string& desc) { return {{"type", "object"}, {"description", desc}}; }
json str_list(const std::string& desc) {
  return {{"type", "array"}, {"description", desc}, {"items", {{"type", "string"}, {"minLength", 1}}}, {"minItems", 1}};
}
json one_of(const std::string& desc, std::vector<std::string> values) {
  return {{"type", "string"}, {"description", desc}, {"enum", values}};
}

json input(json props, std::vector<std::string> required) {
  return {{"type", "object"}, {"properties", std::move(props)}, {"required", required}, {"additionalProperties", false}};
}
json with_sim(json props, std::vector<std::string> required = {}) {
  props["simulation_id"] = str("Simulation id (sim-xxxxxxxx)");
  required.insert(required.begin(), "simulation_id");
  return input(std::move(props), std::move(required));
}
json output(std::vector<std::string> required) {
  json props = json::object();
  for (const auto& r : required) props[r] = json::object();
  return {{"type", "object"}, {"properties", std::move(props)}, {"required", required}};
}
json state_output() { return output({"simulation_id", "name", "status", "clock"}); }

// --- argument readers ------------------------------------------------------

std::string s(const json& a, const char* k) { return a.at(k).get<std::string>(); }
std::optional<std::string> opt_s(const json& a, const char* k) {
  if (!a.contains(k)) return std::nullopt;
  return a.at(k).get<std::string>();
}
Time t(const json& a, const char* k) { return jsonu::to_fixed(a.at(k), std::string("$.") + k); }
std::optional<Time> opt_t(const json& a, const char* k) {
  if (!a.contains(k)) return std::nullopt;
  return t(a, k);
}
std::optional<std::uint64_t> opt_u(const json& a, const char* k) {
  if (!a.contains(k)) return std::nullopt;
  return a.at(k).get<std::uint64_t>();
}
std::optional<Ratio> opt_ratio(const json& a, const char* k) {
  if (!a.contains(k)) return std::nullopt;
  const json& v = a.at(k);
  if (v.is_string()) return parse_ratio(v.get<std::string>());
  return jsonu::to_fixed(v, std::string("$.") + k).to_ratio();
}
std::optional<Window> opt_window(const json& a) {
  bool has_s = a.contains("window_start"), has_e = a.contains("window_end");
  if (!has_s && !has_e) return std::nullopt;
  if (has_s != has_e) fail(ErrorCode::invalid_argument, "window_start and window_end must be given together");
  Window w{t(a, "window_start"), t(a, "window_end")};
  w.validate();
  return w;
}

std::string summarize(const std::string& body) {
  if (body.size() <= kAuditSummaryLimit) return body;
  return body.substr(0, kAuditSummaryLimit);
}

}  // namespace

McpGateway::McpGateway(SimulationService& service, GatewayConfig config) : service_(service), config_(std::move(config)) {
  if (config_.audit_path) {
    audit_file_.open(*config_.audit_path, std::ios::app);
    if (!audit_file_) fail(ErrorCode::internal, "cannot open audit log " + config_.audit_path->string());
  }
  build_catalog();
}

McpGateway::~McpGateway() = default;

void McpGateway::add_tool(ToolDescriptor d, Handler h) {
  std::string name = d.name;
  if (!handlers_.emplace(name, std::make_pair(std::move(d), std::move(h))).second)
    fail(ErrorCode::internal, "duplicate tool " + name);
}

void McpGateway::build_catalog() {
  SimulationService& svc = service_;
  const json window_props = {{"window_start", num("Window start (inclusive), time units")},
                             {"window_end", num("Window end (exclusive), time units")}};

  // --- creation & registry ---
  add_tool({"create_default_simulation",
            "Create a ready-to-run simulation: six clusters in three tiers, the applications 'Augmented Reality (AR)' "
            "and 'mIoTs', one user each, seeded random placement.",
            input({{"name", str("Display name")}, {"seed", integer("Random seed")}}, {}), state_output()},
           [&svc](const json& a) { return svc.create_default_simulation(opt_s(a, "name").value_or(""), opt_u(a, "seed")); });
  add_tool({"create_simulation",
            "Create a simulation from a grid description (clusters x nodes_per_cluster), a scenario directory "
            "(topology.json, services.json, placements.json, users.json, processes.json) or inline documents.",
            input({{"name", str("Display name")},
                   {"clusters", integer("Number of clusters (grid form)", 1)},
                   {"nodes_per_cluster", integer("Nodes per cluster including the control plane (grid form)", 1)},
                   {"scenario_dir", str("Scenario directory, relative to the server's scenario root")},
                   {"documents", object_arg("Inline documents keyed topology/services/placements/users/processes/config")}},
                  {}),
            state_output()},
           [this, &svc](const json& a) {
             std::string name = opt_s(a, "name").value_or("");
             int forms = a.contains("documents") + a.contains("scenario_dir") + (a.contains("clusters") || a.contains("nodes_per_cluster"));
             if (forms != 1) fail(ErrorCode::invalid_argument, "give exactly one of: clusters+nodes_per_cluster, scenario_dir, documents");
             if (a.contains("clusters") || a.contains("nodes_per_cluster")) {
               if (!a.contains("clusters") || !a.contains("nodes_per_cluster"))
                 fail(ErrorCode::invalid_argument, "clusters and nodes_per_cluster must be given together");
               return svc.create_grid_simulation(a.at("clusters").get<std::size_t>(), a.at("nodes_per_cluster").get<std::size_t>(), name);
             }
             std::string id;
             if (a.contains("documents")) {
               id = svc.create_simulation(a.at("documents"), name);
             } else {
               std::filesystem::path p = s(a, "scenario_dir");
               if (p.is_relative()) p = config_.scenario_root / p;
               id = svc.create_simulation_from_dir(p, name);
             }
             json out = svc.get_state(id);
             svc.inspect(id, [&](const Engine& e) { out["nodes_total"] = e.topology().node_count(); });
             return out;
           });
  add_tool({"list_simulations", "List every managed simulation with its status and lineage.", input(json::object(), {}),
            output({"simulations"})},
           [&svc](const json&) { return svc.list_simulations(); });
  add_tool({"get_simulation_state", "Lifecycle status, clock, pending window and lineage of a simulation.", with_sim(json::object()),
            state_output()},
           [&svc](const json& a) { return svc.get_state(s(a, "simulation_id")); });
  add_tool({"initialize_simulation", "Move a created simulation to initialized; reports stages without deployments.",
            with_sim(json::object()), state_output()},
           [&svc](const json& a) { return svc.initialize(s(a, "simulation_id")); });

  // --- lifecycle ---
  add_tool({"run_simulation_for",
            "Run one window of `duration` time units asynchronously (step defaults to duration/10). A created "
            "simulation is initialized first. Ends paused.",
            with_sim({{"duration", pos("Window length, time units")}, {"step", pos("Pause granularity, time units")}}, {"duration"}),
            state_output()},
           [&svc](const json& a) { return svc.run_for(s(a, "simulation_id"), t(a, "duration"), opt_t(a, "step")); });
  add_tool({"schedule_for", "Run asynchronously until absolute time `until`.",
            with_sim({{"until", pos("Absolute stop time")}, {"step", pos("Pause granularity, time units")}}, {"until"}),
            state_output()},
           [&svc](const json& a) { return svc.schedule_for(s(a, "simulation_id"), t(a, "until"), opt_t(a, "step")); });
  add_tool({"wait_simulation_until_ready", "Block until the simulation is not running, or the timeout elapses.",
            with_sim({{"timeout_ms", integer("Timeout in milliseconds (default 60000)", 0)}}), output({"simulation_id", "status", "timed_out"})},
           [&svc](const json& a) {
             auto ms = a.value("timeout_ms", std::int64_t{60000});
             return svc.wait_until_idle(s(a, "simulation_id"), std::chrono::milliseconds(std::min<std::int64_t>(ms, 3600000)));
           });
  add_tool({"pause_simulation", "Request a pause; it takes effect at the next step boundary.", with_sim(json::object()), state_output()},
           [&svc](const json& a) { return svc.pause(s(a, "simulation_id")); });
  add_tool({"resume_simulation", "Continue the remaining scheduled window of a paused simulation.", with_sim(json::object()),
            state_output()},
           [&svc](const json& a) { return svc.resume(s(a, "simulation_id")); });
  add_tool({"stop_simulation", "Stop a simulation; terminal but still queryable.", with_sim(json::object()), state_output()},
           [&svc](const json& a) { return svc.stop(s(a, "simulation_id")); });
  add_tool({"destroy_simulation", "Stop (if needed) and remove a simulation from the registry.", with_sim(json::object()),
            output({"simulation_id", "destroyed"})},
           [&svc](const json& a) { return svc.destroy(s(a, "simulation_id")); });
  add_tool({"fork_simulation",
            "Duplicate the full state of an initialized or paused simulation; the child records its parent and fork "
            "time. A seed reseeds the child's random streams.",
            with_sim({{"name", str("Child name")}, {"seed", integer("Fresh seed for the child")}}), state_output()},
           [&svc](const json& a) { return svc.fork(s(a, "simulation_id"), opt_s(a, "name").value_or(""), opt_u(a, "seed")); });

  // --- introspection ---
  add_tool({"list_simulation_nodes", "Nodes (region, capacity, usage, cost, availability) and inter-cluster links.",
            with_sim(json::object()), output({"simulation_id", "nodes", "links"})},
           [&svc](const json& a) { return svc.list_nodes(s(a, "simulation_id")); });
  add_tool({"list_simulation_deployed_applications", "Applications with their VNF chain, deployment and user counts.",
            with_sim(json::object()), output({"simulation_id", "applications"})},
           [&svc](const json& a) { return svc.list_deployed_applications(s(a, "simulation_id")); });
  add_tool({"list_simulation_application_vnfs", "VNFs of one application with their active deployments.",
            with_sim({{"app", str("Application name")}}, {"app"}), output({"simulation_id", "application", "vnfs"})},
           [&svc](const json& a) { return svc.list_application_vnfs(s(a, "simulation_id"), s(a, "app")); });
  add_tool({"list_simulation_users", "Active users with their node, application and chain binding.", with_sim(json::object()),
            output({"simulation_id", "users"})},
           [&svc](const json& a) { return svc.list_users(s(a, "simulation_id")); });
  add_tool({"list_simulation_processes", "Registered dynamic processes.", with_sim(json::object()),
            output({"simulation_id", "processes"})},
           [&svc](const json& a) { return svc.list_processes(s(a, "simulation_id")); });
  add_tool({"list_simulation_node_placements", "Active deployments grouped by node.", with_sim(json::object()),
            output({"simulation_id", "placements"})},
           [&svc](const json& a) { return svc.list_node_placements(s(a, "simulation_id")); });
  add_tool({"get_simulation_node_distances", "Hop distance from every up node to each target node (-1 when unreachable).",
            with_sim({{"targets", str_list("Target node ids")}}, {"targets"}), output({"simulation_id", "targets", "hops"})},
           [&svc](const json& a) {
             return svc.node_distances(s(a, "simulation_id"), a.at("targets").get<std::vector<std::string>>());
           });
  add_tool({"get_simulation_runtime_snapshot", "Counts of users, deployments, in-flight requests and pending events.",
            with_sim(json::object()), output({"simulation_id", "clock", "trace_hash"})},
           [&svc](const json& a) { return svc.runtime_snapshot(s(a, "simulation_id")); });
  add_tool({"get_simulation_application_metrics",
            "Per-application request counts and response-time statistics over a window (default: the whole run).",
            with_sim([&] {
              json p = window_props;
              p["app"] = str("Restrict to one application");
              return p;
            }()),
            output({"simulation_id", "window", "applications"})},
           [&svc](const json& a) { return svc.app_metrics(s(a, "simulation_id"), opt_s(a, "app"), opt_window(a)); });
  add_tool({"get_simulation_network_metrics",
            "Node, cluster and link utilization, congested links, overloaded nodes and costs over a window.",
            with_sim([&] {
              json p = window_props;
              p["node_threshold"] = num("Overload threshold (number or 'n/d')");
              p["link_threshold"] = num("Congestion threshold (number or 'n/d')");
              return p;
            }()),
            output({"simulation_id", "window", "nodes", "links", "placement_cost"})},
           [&svc](const json& a) {
             return svc.network_metrics(s(a, "simulation_id"), opt_window(a), opt_ratio(a, "node_threshold"),
                                        opt_ratio(a, "link_threshold"));
           });
  add_tool({"get_simulation_trace_hash", "SHA-256 of the simulation's trace export.", with_sim(json::object()),
            output({"simulation_id", "trace_hash"})},
           [&svc](const json& a) {
             std::string id = s(a, "simulation_id");
             return json{{"simulation_id", id}, {"trace_hash", svc.trace_hash(id)}};
           });

  // --- applications & placement ---
  add_tool({"create_simulation_application",
            "Register an application (inline definition, or `app` from the built-in catalogue). Identical "
            "re-creation is a no-op. placement 'random' also deploys every VNF on a random node.",
            with_sim({{"application", object_arg("Application definition: name, latency_requirement, vnfs, messages")},
                      {"app", str("Built-in application name")},
                      {"placement", one_of("Initial placement", {"none", "random"})}}),
            output({"simulation_id", "application", "created"})},
           [&svc](const json& a) {
             json doc;
             if (a.contains("application") == a.contains("app"))
               fail(ErrorCode::invalid_argument, "give exactly one of: application, app");
             if (a.contains("application")) {
               doc = a.at("application");
             } else {
               for (const auto& app : default_applications())
                 if (app.name == s(a, "app")) doc = application_to_json(app);
               if (doc.is_null()) fail(ErrorCode::not_found, "no built-in application '" + s(a, "app") + "'");
             }
             return svc.create_application(s(a, "simulation_id"), doc, opt_s(a, "placement").value_or("none"));
           });
  json vnf_props = {{"app", str("Application name")}, {"vnf", str("VNF name")}};
  add_tool({"deploy_application_vnf", "Deploy one replica of a VNF on a node.",
            with_sim([&] {
              json p = vnf_props;
              p["node"] = str("Node id");
              return p;
            }(), {"app", "vnf", "node"}),
            output({"simulation_id", "deployment_id"})},
           [&svc](const json& a) { return svc.deploy(s(a, "simulation_id"), s(a, "app"), s(a, "vnf"), s(a, "node")); });
  add_tool({"deploy_application_chain",
            "Deploy one private chain instance: nodes[i] hosts VNF i. Users bound by the round_robin policy share "
            "instances in turn (all or nothing).",
            with_sim({{"app", str("Application name")}, {"nodes", str_list("One node id per VNF, in chain order")}},
                     {"app", "nodes"}),
            output({"simulation_id", "instance", "deployment_ids"})},
           [&svc](const json& a) {
             return svc.deploy_chain(s(a, "simulation_id"), s(a, "app"), a.at("nodes").get<std::vector<std::string>>());
           });
  add_tool({"replicate_application_vnf", "Add replicas of a VNF on the given nodes (all or nothing).",
            with_sim([&] {
              json p = vnf_props;
              p["nodes"] = str_list("Destination node ids");
              return p;
            }(), {"app", "vnf", "nodes"}),
            output({"simulation_id", "deployment_ids"})},
           [&svc](const json& a) {
             return svc.replicate(s(a, "simulation_id"), s(a, "app"), s(a, "vnf"), a.at("nodes").get<std::vector<std::string>>());
           });
  add_tool({"move_application_vnf",
            "Move a VNF replica: deploy on `to`, then retire the replica on `from` (it drains its queue).",
            with_sim([&] {
              json p = vnf_props;
              p["from"] = str("Source node id");
              p["to"] = str("Destination node id");
              return p;
            }(), {"app", "vnf", "from", "to"}),
            output({"simulation_id", "deployment_id"})},
           [&svc](const json& a) {
             return svc.move(s(a, "simulation_id"), s(a, "app"), s(a, "vnf"), s(a, "from"), s(a, "to"));
           });
  add_tool({"remove_application_vnf", "Retire a VNF replica from a node.",
            with_sim([&] {
              json p = vnf_props;
              p["node"] = str("Node id");
              return p;
            }(), {"app", "vnf", "node"}),
            output({"simulation_id", "removed"})},
           [&svc](const json& a) { return svc.remove(s(a, "simulation_id"), s(a, "app"), s(a, "vnf"), s(a, "node")); });

  // --- users & processes ---
  add_tool({"create_users", "Create users of an application on a node.",
            with_sim({{"app", str("Application name")},
                      {"node", str("Node id")},
                      {"count", integer("Number of users (default 1)", 1)},
                      {"period", pos("Deterministic request period (default 30)")},
                      {"distribution", object_arg("Request distribution {type: deterministic|exponential|uniform, ...}")},
                      {"message", str("First message name")}},
                     {"app", "node"}),
            output({"simulation_id", "user_ids"})},
           [&svc](const json& a) {
             UserSpec u;
             u.app = s(a, "app");
             u.node = s(a, "node");
             u.first_message = opt_s(a, "message").value_or("");
             if (a.contains("distribution") && a.contains("period"))
               fail(ErrorCode::invalid_argument, "give at most one of: period, distribution");
             if (a.contains("distribution")) u.generation = load_distribution(a.at("distribution"), "$.distribution");
             else u.generation = Distribution::deterministic(opt_t(a, "period").value_or(Time::units(30)));
             return svc.create_users(s(a, "simulation_id"), u, a.value("count", std::size_t{1}));
           });
  add_tool({"move_user", "Move a user to another node.", with_sim({{"user_id", integer("User id")}, {"node", str("Node id")}}, {"user_id", "node"}),
            output({"simulation_id", "user_id"})},
           [&svc](const json& a) { return svc.move_user(s(a, "simulation_id"), a.at("user_id").get<UserId>(), s(a, "node")); });
  add_tool({"remove_user", "Remove a user (idempotent).", with_sim({{"user_id", integer("User id")}}, {"user_id"}),
            output({"simulation_id", "user_id"})},
           [&svc](const json& a) { return svc.remove_user(s(a, "simulation_id"), a.at("user_id").get<UserId>()); });
  add_tool({"create_process",
            "Register a dynamic process (user_mobility_random, hotspot_users, node_failure, node_recovery, custom).",
            with_sim({{"process", object_arg("Process definition: name, kind, enabled, distribution, params")}}, {"process"}),
            output({"simulation_id", "process_id"})},
           [&svc](const json& a) { return svc.create_process(s(a, "simulation_id"), load_process(a.at("process"), "$.process")); });
  add_tool({"set_user_placement_policy", "How new users bind to chain instances: nearest, round_robin or dedicated.",
            with_sim({{"policy", one_of("Policy", {"nearest", "round_robin", "dedicated"})}}, {"policy"}),
            output({"simulation_id", "policy"})},
           [&svc](const json& a) { return svc.set_user_policy(s(a, "simulation_id"), user_policy_from(s(a, "policy"))); });

  // --- topology ---
  add_tool({"add_node", "Add a node to a cluster.",
            with_sim({{"cluster", str("Cluster name")}, {"node", object_arg("Node: name, role, capacity {cpu, memory}, cost")}},
                     {"cluster", "node"}),
            output({"simulation_id", "node"})},
           [&svc](const json& a) {
             return svc.add_node(s(a, "simulation_id"), s(a, "cluster"), load_node_spec(a.at("node"), "$.node"));
           });
  add_tool({"remove_node", "Remove a node that hosts no deployments or users.", with_sim({{"node", str("Node id")}}, {"node"}),
            output({"simulation_id", "node"})},
           [&svc](const json& a) { return svc.remove_node(s(a, "simulation_id"), s(a, "node")); });
  add_tool({"add_cluster", "Add a cluster and its links.",
            with_sim({{"cluster", object_arg("Cluster: name, role, region, nodes")},
                      {"links", {{"type", "array"}, {"description", "Links: endpoints, target_latency, bandwidth, distance_km"}, {"items", {{"type", "object"}}}}}},
                     {"cluster"}),
            output({"simulation_id", "cluster"})},
           [&svc](const json& a) {
             std::vector<LinkSpec> links;
             if (a.contains("links"))
               for (std::size_t i = 0; i < a.at("links").size(); ++i)
                 links.push_back(load_link_spec(a.at("links")[i], "$.links[" + std::to_string(i) + "]"));
             return svc.add_cluster(s(a, "simulation_id"), load_cluster_spec(a.at("cluster"), "$.cluster"), links);
           });
  add_tool({"remove_cluster", "Remove a cluster whose nodes host no deployments or users.",
            with_sim({{"cluster", str("Cluster name")}}, {"cluster"}), output({"simulation_id", "cluster"})},
           [&svc](const json& a) { return svc.remove_cluster(s(a, "simulation_id"), s(a, "cluster")); });
  add_tool({"set_link_attributes", "Change latency, bandwidth or distance of the link between two clusters.",
            with_sim({{"a", str("Cluster name")},
                      {"b", str("Cluster name")},
                      {"latency", pos("Target latency")},
                      {"bandwidth", pos("Bandwidth")},
                      {"distance_km", num("Distance in km")}},
                     {"a", "b"}),
            output({"simulation_id", "link"})},
           [&svc](const json& a) {
             Topology::LinkChange c{opt_t(a, "distance_km"), opt_t(a, "latency"), opt_t(a, "bandwidth")};
             if (!c.distance_km && !c.target_latency && !c.bandwidth)
               fail(ErrorCode::invalid_argument, "nothing to change: give latency, bandwidth or distance_km");
             return svc.set_link(s(a, "simulation_id"), s(a, "a"), s(a, "b"), c);
           });
  add_tool({"set_node_status", "Mark a node up or down; work on a failing node fails with node_failure.",
            with_sim({{"node", str("Node id")}, {"up", boolean("Availability")}}, {"node", "up"}), output({"simulation_id", "node", "up"})},
           [&svc](const json& a) { return svc.set_node_status(s(a, "simulation_id"), s(a, "node"), a.at("up").get<bool>()); });

  // --- audit ---
  add_tool({"export_audit_log", "Tool-call records in sequence order, optionally filtered.",
            input({{"actor", any_str("Actor id")},
                   {"simulation_id", any_str("Simulation id")},
                   {"tool", any_str("Tool name")},
                   {"since_seq", integer("First sequence number", 0)}},
                  {}),
            output({"records"})},
           [this](const json& a) {
             AuditFilter f{opt_s(a, "actor"), opt_s(a, "simulation_id"), opt_s(a, "tool"), opt_u(a, "since_seq")};
             json list = json::array();
             for (const auto& r : audit_log(f)) list.push_back(to_json(r));
             return json{{"records", std::move(list)}};
           });

  for (const auto& [name, entry] : handlers_) catalog_.push_back(entry.first);
}

McpGateway::CallOutcome McpGateway::call_tool(const std::string& actor, const std::string& name, const json& arguments,
                                              std::optional<std::int64_t> window) {
  auto t0 = std::chrono::steady_clock::now();
  CallOutcome out;
  std::string code;
  std::string sim;
  if (arguments.is_object() && arguments.contains("simulation_id") && arguments.at("simulation_id").is_string())
    sim = arguments.at("simulation_id").get<std::string>();
  try {
    if (!arguments.is_object()) fail(ErrorCode::invalid_argument, "arguments must be an object");
    auto it = handlers_.find(name);
    if (it == handlers_.end()) fail(ErrorCode::not_found, "unknown tool '" + name + "'");
    if (auto err = validate_schema(arguments, it->second.first.input_schema))
      fail(ErrorCode::invalid_argument, "schema violation at " + *err);
    out.payload = it->second.second(arguments);
    out.ok = true;
  } catch (const Error& e) {
    code = std::string(to_string(e.code()));
    out.payload = {{"error", {{"code", code}, {"message", e.what()}}}};
  } catch (const json::exception& e) {
    code = std::string(to_string(ErrorCode::invalid_argument));
    out.payload = {{"error", {{"code", code}, {"message", std::string("malformed argument: ") + e.what()}}}};
  } catch (const std::exception& e) {
    code = std::string(to_string(ErrorCode::internal));
    out.payload = {{"error", {{"code", code}, {"message", e.what()}}}};
  }
  if (sim.empty() && out.ok && out.payload.is_object() && out.payload.contains("simulation_id") &&
      out.payload.at("simulation_id").is_string())
    sim = out.payload.at("simulation_id").get<std::string>();

  ToolCallRecord rec;
  rec.actor = actor.empty() ? "anonymous" : actor;
  rec.simulation_id = sim;
  rec.window = window;
  rec.tool = name;
  std::string in = arguments.dump(), outs = out.payload.dump();
  rec.input_summary = summarize(in);
  rec.input_sha256 = sha256_hex(in);
  rec.output_summary = summarize(outs);
  rec.output_sha256 = sha256_hex(outs);
  rec.status = out.ok ? "ok" : "error";
  rec.error_code = code;
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  std::lock_guard lk(audit_mutex_);
  rec.seq = next_seq_++;
  out.seq = rec.seq;
  if (audit_file_.is_open()) audit_file_ << to_json(rec).dump() << '\n' << std::flush;
  audit_.push_back(std::move(rec));
  return out;
}

std::vector<ToolCallRecord> McpGateway::audit_log(const AuditFilter& f) const {
  std::lock_guard lk(audit_mutex_);
  std::vector<ToolCallRecord> out;
  for (const auto& r : audit_) {
    if (f.actor && r.actor != *f.actor) continue;
    if (f.simulation_id && r.simulation_id != *f.simulation_id) continue;
    if (f.tool && r.tool != *f.tool) continue;
    if (f.since_seq && r.seq < *f.since_seq) continue;
    out.push_back(r);
  }
  return out;
}

std::size_t McpGateway::audit_size() const {
  std::lock_guard lk(audit_mutex_);
  return audit_.size();
}

// ---------------------------------------------------------------------------
// JSON-RPC

json McpGateway::rpc_result(const json& id, json result) const {
  return {{"jsonrpc", "2.0"}, {"id", id}, {"result", std::move(result)}};
}

json McpGateway::rpc_error(const json& id, int code, const std::string& message) const {
  return {{"jsonrpc", "2.0"}, {"id", id}, {"error", {{"code", code}, {"message", message}}}};
}

json McpGateway::dispatch(const json& msg, const std::string& default_actor, bool& respond) {
  respond = true;
  if (!msg.is_object() || msg.value("jsonrpc", "") != "2.0" || !msg.contains("method") || !msg.at("method").is_string())
    return rpc_error(msg.is_object() && msg.contains("id") ? msg.at("id") : json(nullptr), -32600, "invalid request");
  const std::string method = msg.at("method").get<std::string>();
  const bool notification = !msg.contains("id");
  const json id = notification ? json(nullptr) : msg.at("id");
  const json params = msg.value("params", json::object());
  if (notification) {
    respond = false;
    return nullptr;
  }
  if (!params.is_object()) return rpc_error(id, -32602, "params must be an object");

  if (method == "initialize") {
    std::string client = params.contains("clientInfo") ? params.at("clientInfo").value("name", "") : "";
    if (!client.empty()) {
      std::lock_guard lk(session_mutex_);
      session_actor_ = client;
    }
    return rpc_result(id, {{"protocolVersion", params.value("protocolVersion", std::string(kMcpProtocolVersion))},
                           {"capabilities", {{"tools", {{"listChanged", false}}}}},
                           {"serverInfo", {{"name", config_.server_name}, {"version", "1.0.0"}}}});
  }
  if (method == "ping") return rpc_result(id, json::object());
  if (method == "tools/list") {
    json list = json::array();
    for (const auto& d : catalog_)
      list.push_back({{"name", d.name}, {"description", d.description}, {"inputSchema", d.input_schema}, {"outputSchema", d.output_schema}});
    return rpc_result(id, {{"tools", std::move(list)}});
  }
  if (method == "tools/call") {
    if (!params.contains("name") || !params.at("name").is_string()) return rpc_error(id, -32602, "tools/call requires params.name");
    json meta = params.value("_meta", json::object());
    std::string actor = meta.is_object() ? meta.value("actor", "") : "";
    if (actor.empty()) actor = default_actor;
    if (actor.empty()) {
      std::lock_guard lk(session_mutex_);
      actor = session_actor_;
    }
    std::optional<std::int64_t> window;
    if (meta.is_object() && meta.contains("window") && meta.at("window").is_number_integer()) window = meta.at("window").get<std::int64_t>();
    CallOutcome r = call_tool(actor, params.at("name").get<std::string>(), params.value("arguments", json::object()), window);
    return rpc_result(id, {{"content", {{{"type", "text"}, {"text", r.payload.dump()}}}},
                           {"structuredContent", r.payload},
                           {"isError", !r.ok},
                           {"_meta", {{"audit_seq", r.seq}}}});
  }
  return rpc_error(id, -32601, "method not found: " + method);
}

std::optional<json> McpGateway::handle(const json& message, const std::string& default_actor) {
  bool respond = false;
  if (message.is_array()) {
    if (message.empty()) return rpc_error(nullptr, -32600, "empty batch");
    json out = json::array();
    for (const auto& m : message) {
      json r = dispatch(m, default_actor, respond);
      if (respond) out.push_back(std::move(r));
    }
    if (out.empty()) return std::nullopt;
    return out;
  }
  json r = dispatch(message, default_actor, respond);
  if (!respond) return std::nullopt;
  return r;
}

std::string McpGateway::handle_text(const std::string& body, const std::string& default_actor) {
  json msg;
  try {
    msg = json::parse(body);
  } catch (const json::parse_error& e) {
    return rpc_error(nullptr, -32700, std::string("parse error: ") + e.what()).dump();
  }
  auto r = handle(msg, default_actor);
  return r ? r->dump() : std::string();
}

void McpGateway::serve_stdio(std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string reply = handle_text(line);
    if (!reply.empty()) out << reply << '\n' << std::flush;
  }
}

// ---------------------------------------------------------------------------
// HTTP transport

HttpMcpServer::HttpMcpServer(McpGateway& gateway) : gateway_(gateway), server_(std::make_unique<httplib::Server>()) {
  // Idle keep-alive connections hold stop() for this long; clients reconnect.
  server_->set_keep_alive_timeout(1);
  server_->Post("/mcp", [this](const httplib::Request& req, httplib::Response& res) {
    std::string reply = gateway_.handle_text(req.body, req.get_header_value("Mcp-Actor"));
    if (reply.empty()) {
      res.status = 202;
      return;
    }
    res.set_content(reply, "application/json");
  });
  server_->Get("/health", [](const httplib::Request&, httplib::Response& res) { res.set_content("{\"ok\":true}", "application/json"); });
}

HttpMcpServer::~HttpMcpServer() { stop(); }

int HttpMcpServer::start(const std::string& host, int port) {
  if (port == 0) port_ = server_->bind_to_any_port(host);
  else port_ = server_->bind_to_port(host, port) ? port : -1;
  if (port_ < 0) fail(ErrorCode::internal, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void HttpMcpServer::listen(const std::string& host, int port) {
  port_ = port;
  if (!server_->listen(host, port)) fail(ErrorCode::internal, "cannot listen on " + host + ":" + std::to_string(port));
}

void HttpMcpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace cesim
