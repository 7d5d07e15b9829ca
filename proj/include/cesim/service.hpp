#pragma once
// Registry of managed simulations.
//
// Each record owns one Engine and a lifecycle state. Operations on one
// record are serialized by its mutex; execution windows run on a worker
// thread that owns the engine exclusively while the record is `running`,
// so every engine-touching operation is rejected in that state. Views are
// returned as JSON so the embedded API and the MCP gateway emit identical
// payloads.

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cesim/engine.hpp"
#include "cesim/metrics.hpp"
#include "cesim/scenario.hpp"

namespace cesim {

enum class Lifecycle { created, initialized, running, paused, stopped, failed };

std::string_view to_string(Lifecycle s);
// created->initialized->running<->paused, initialized->running, any
// non-terminal->stopped|failed.
bool legal_transition(Lifecycle from, Lifecycle to);

struct ServiceConfig {
  std::uint64_t seed = 0x5eed;              // id generator
  Ratio node_threshold{8, 100};             // overloaded_nodes in network metrics
  Ratio link_threshold{1, 2};               // congested_links in network metrics
  std::optional<std::filesystem::path> run_dir;  // write-through of scenario + traces on destroy
};

class SimulationService {
 public:
  using json = nlohmann::json;

  explicit SimulationService(ServiceConfig config = {});
  ~SimulationService();
  SimulationService(const SimulationService&) = delete;
  SimulationService& operator=(const SimulationService&) = delete;

  // --- creation ------------------------------------------------------------
  // Validates by instantiating; a failing scenario leaves no record.
  std::string create_simulation(const Scenario& scenario, const std::string& name = {});
  std::string create_simulation(const json& documents, const std::string& name = {});
  std::string create_simulation_from_dir(const std::filesystem::path& dir, const std::string& name = {});
  json create_default_simulation(const std::string& name = {}, std::optional<std::uint64_t> seed = {});
  json create_grid_simulation(std::size_t clusters, std::size_t nodes_per_cluster, const std::string& name = {});

  // --- lifecycle -----------------------------------------------------------
  json initialize(const std::string& id);
  // `created` is initialized implicitly. step defaults to duration / 10.
  json run_for(const std::string& id, Time duration, std::optional<Time> step = {});
  json schedule_for(const std::string& id, Time until, std::optional<Time> step = {});
  json pause(const std::string& id);
  json resume(const std::string& id);
  json wait_until_idle(const std::string& id, std::chrono::milliseconds timeout);
  json stop(const std::string& id);
  json destroy(const std::string& id);
  // Deep copy; a fresh seed reseeds the child's RNG streams.
  json fork(const std::string& id, const std::string& name = {}, std::optional<std::uint64_t> seed = {});

  // --- views ---------------------------------------------------------------
  json list_simulations() const;
  json get_state(const std::string& id) const;
  Lifecycle state(const std::string& id) const;
  std::vector<Lifecycle> state_history(const std::string& id) const;
  json list_nodes(const std::string& id) const;
  json list_deployed_applications(const std::string& id) const;
  json list_application_vnfs(const std::string& id, const std::string& app) const;
  json list_users(const std::string& id) const;
  json list_processes(const std::string& id) const;
  json list_node_placements(const std::string& id) const;
  json node_distances(const std::string& id, const std::vector<std::string>& targets) const;
  json runtime_snapshot(const std::string& id) const;
  // Window defaults to [0, clock).
  json app_metrics(const std::string& id, const std::optional<std::string>& app = {},
                   const std::optional<Window>& window = {}) const;
  json network_metrics(const std::string& id, const std::optional<Window>& window = {},
                       std::optional<Ratio> node_threshold = {}, std::optional<Ratio> link_threshold = {}) const;
  std::string trace_hash(const std::string& id) const;
  void export_traces(const std::string& id, std::ostream& out) const;

  // --- mutations (created, initialized, paused only) -----------------------
  // Re-creating an identical application is a no-op. placement "random"
  // deploys each VNF on a seeded random up node that fits.
  json create_application(const std::string& id, const json& app_doc, const std::string& placement = "none");
  json deploy(const std::string& id, const std::string& app, const std::string& vnf, const std::string& node);
  // New chain instance with nodes[i] hosting VNF i; validated as a batch.
  json deploy_chain(const std::string& id, const std::string& app, const std::vector<std::string>& nodes);
  json replicate(const std::string& id, const std::string& app, const std::string& vnf, const std::vector<std::string>& nodes);
  json move(const std::string& id, const std::string& app, const std::string& vnf, const std::string& from,
            const std::string& to);
  json remove(const std::string& id, const std::string& app, const std::string& vnf, const std::string& node);
  json create_users(const std::string& id, const UserSpec& spec, std::size_t count);
  json move_user(const std::string& id, UserId user, const std::string& node);
  json remove_user(const std::string& id, UserId user);
  json create_process(const std::string& id, const ProcessSpec& spec);
  json add_node(const std::string& id, const std::string& cluster, const NodeSpec& node);
  json remove_node(const std::string& id, const std::string& node);
  json add_cluster(const std::string& id, const ClusterSpec& cluster, const std::vector<LinkSpec>& links);
  json remove_cluster(const std::string& id, const std::string& cluster);
  json set_link(const std::string& id, const std::string& a, const std::string& b, const Topology::LinkChange& change);
  json set_node_status(const std::string& id, const std::string& node, bool up);
  json set_user_policy(const std::string& id, UserPolicy policy);

  // Handlers are installed in every simulation created afterwards.
  void register_handler(const std::string& name, CustomHandler handler);

  // Read-only engine access outside `running` (tests, harness).
  void inspect(const std::string& id, const std::function<void(const Engine&)>& fn) const;

 private:
  struct Record;
  std::shared_ptr<Record> find(const std::string& id) const;
  std::string new_id();
  std::string insert(std::unique_ptr<Engine> engine, Scenario scenario, const std::string& name,
                     Lifecycle initial, std::optional<std::string> parent, Time fork_clock);
  json mutate(const std::string& id, const char* op, const std::function<json(Engine&)>& fn);
  json view(const std::string& id, const std::function<json(const Engine&, const Record&)>& fn) const;
  json start_window(const std::shared_ptr<Record>& r, std::unique_lock<std::mutex>& lock, Time target, Time step);
  static void worker(std::shared_ptr<Record> r);
  static void set_state(Record& r, Lifecycle s);
  static json state_json(const Record& r);
  void halt(Record& r, std::unique_lock<std::mutex>& lock);
  Window default_window(const Engine& e, const std::optional<Window>& w) const;

  ServiceConfig config_;
  mutable std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Record>> records_;
  std::mt19937_64 id_rng_;
  std::map<std::string, CustomHandler> handlers_;
};

}  // namespace cesim
