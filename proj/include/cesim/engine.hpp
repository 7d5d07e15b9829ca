#pragma once
// Discrete-event core.
//
// An Engine is a plain value: copying it duplicates the clock, pending
// events, RNG streams, placement maps and traces, which is exactly what a
// fork needs. It is driven from one thread at a time.
//
// Request lifecycle: a user emits a request at its current node; message i
// of the application's chain is routed hop by hop to the deployment serving
// VNF i, queued FIFO there, served, and the next message departs from that
// node. The optional trailing message returns to the user's origin node.

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "cesim/fixed.hpp"
#include "cesim/link_channel.hpp"
#include "cesim/routing.hpp"
#include "cesim/topology.hpp"
#include "cesim/trace.hpp"
#include "cesim/workload.hpp"

namespace cesim {

using ProcessId = std::uint64_t;
using InstanceId = std::int64_t;

enum class EventKind { request_emit, message_arrival, transfer_complete, service_complete, process_tick };

struct Event {
  Time time;
  std::uint64_t sequence = 0;
  EventKind kind = EventKind::request_emit;
  std::uint64_t subject = 0;  // user / request / deployment / process id
  std::uint64_t token = 0;    // generation, channel version or request id
  std::string link;           // transfer_complete only

  // Min-heap order on (time, sequence).
  bool operator>(const Event& o) const {
    return time != o.time ? time > o.time : sequence > o.sequence;
  }
};

struct Deployment {
  DeploymentId id = 0;
  std::string app;
  std::string vnf;
  std::size_t stage = 0;
  std::string node;
  std::optional<InstanceId> instance;  // chain instance this replica belongs to
  Time created_at;
  bool active = true;  // inactive: retired by move/remove, still drains its queue
  std::deque<RequestId> queue;
  std::optional<RequestId> serving;
};

struct User {
  UserId id = 0;
  UserSpec spec;
  std::string origin;  // "api", process name, ...
  bool active = true;
  std::optional<InstanceId> instance;
  std::uint64_t generation = 0;  // invalidates stale emit events after moves
  Rng rng;
};

// How users are attached to chain instances when they appear.
enum class UserPolicy {
  nearest,      // no binding; every stage picks the closest replica
  round_robin,  // bind to the app's existing instances in turn
  dedicated,    // deploy a private chain on the user's node
};
std::string_view to_string(UserPolicy p);
UserPolicy user_policy_from(std::string_view name);

struct RuntimeSnapshot {
  std::size_t users = 0;
  std::size_t deployments = 0;
  std::size_t in_flight = 0;
  std::size_t down_nodes = 0;
  std::size_t unreachable_links = 0;
  std::size_t pending_events = 0;
  Time clock;
};

class Engine;
// Custom processes: return human-readable descriptions of what was applied.
using CustomHandler = std::function<std::vector<std::string>(Engine&, const ProcessSpec&, Rng&)>;

struct EngineConfig {
  std::uint64_t seed = 1;
  // Look-back window used for utilization when a placement fallback is scored.
  Time utilization_window = Time::units(100);
};

class Engine {
 public:
  Engine(Topology topology, std::vector<Application> apps, EngineConfig config = {});

  // --- model -------------------------------------------------------------
  const Topology& topology() const { return topology_; }
  const std::vector<Application>& applications() const { return apps_; }
  const Application& application(std::string_view name) const;
  void add_application(Application app);
  const EngineConfig& config() const { return config_; }
  void reseed(std::uint64_t seed);

  // --- topology mutation (rejects removal of nodes that host deployments or users)
  void add_node(const std::string& cluster, const NodeSpec& node);
  void remove_node(const std::string& node_id);
  void add_cluster(const ClusterSpec& cluster, const std::vector<LinkSpec>& links);
  void remove_cluster(const std::string& cluster);
  void set_link(const std::string& a, const std::string& b, const Topology::LinkChange& change);
  void set_node_up(const std::string& node_id, bool up);
  bool node_up(std::string_view node_id) const;
  const Availability& availability() const { return avail_; }

  // --- users ---------------------------------------------------------------
  UserId spawn_user(const UserSpec& spec, const std::string& origin = "api");
  void move_user(UserId id, const std::string& node);
  // Idempotent; a repeated removal only records a warning.
  void remove_user(UserId id);
  const std::map<UserId, User>& users() const { return users_; }
  std::size_t active_user_count() const;
  void set_user_policy(UserPolicy policy);
  UserPolicy user_policy() const { return policy_; }

  // --- deployments ---------------------------------------------------------
  DeploymentId deploy(const std::string& app, const std::string& vnf, const std::string& node,
                      std::optional<InstanceId> instance = std::nullopt);
  std::vector<DeploymentId> replicate(const std::string& app, const std::string& vnf,
                                      const std::vector<std::string>& nodes);
  // Replicate-then-remove of the lowest-id active deployment of (app, vnf) on
  // `from`; the new replica keeps the instance binding.
  DeploymentId move(const std::string& app, const std::string& vnf, const std::string& from, const std::string& to);
  // Returns true when this removed the last active deployment of the stage.
  bool remove(const std::string& app, const std::string& vnf, const std::string& node);
  void remove_deployment(DeploymentId id);
  const std::map<DeploymentId, Deployment>& deployments() const { return deployments_; }
  std::vector<const Deployment*> active_deployments() const;
  Resources used_resources(const std::string& node) const;
  bool fits(const std::string& node, const Resources& need) const;
  InstanceId new_instance_id() { return next_instance_++; }

  // --- processes -----------------------------------------------------------
  ProcessId register_process(const ProcessSpec& spec);
  void register_handler(const std::string& name, CustomHandler handler);
  struct ProcessState {
    ProcessId id = 0;
    ProcessSpec spec;
    bool active = true;
    std::size_t next_step = 0;          // hotspot
    std::vector<UserId> spawned_users;  // hotspot
    std::int64_t spawned_total = 0;
    std::uint64_t token = 0;
    Rng rng;
  };
  const std::map<ProcessId, ProcessState>& processes() const { return processes_; }
  // Applies one activation now; exposed for direct testing.
  std::vector<std::string> tick_process(ProcessId id);

  // --- execution -----------------------------------------------------------
  // Executes every event with time < t_stop, then sets the clock to t_stop.
  Time run_until(Time t_stop);
  Time clock() const { return clock_; }
  std::uint64_t executed_events() const { return executed_; }
  std::size_t pending_events() const { return events_.size(); }

  // --- observation ---------------------------------------------------------
  const TraceStore& traces() const { return traces_; }
  RuntimeSnapshot snapshot_runtime() const;
  const std::vector<std::string>& warnings() const { return warnings_; }
  // Shortest path between node ids under current availability.
  std::optional<std::vector<std::string>> route(const std::string& from, const std::string& to);
  PathCost route_cost(const std::string& from, const std::string& to);
  // Hop distance between every up node and each target (unreachable = -1).
  std::map<std::string, std::vector<std::int32_t>> hop_distances(const std::vector<std::string>& targets);
  std::uint64_t routing_recomputations() const { return routing_.recomputations(); }

 private:
  struct Inflight {
    std::size_t message = 0;
    std::string at;                       // node currently holding the message
    std::vector<std::string> path;        // remaining hops, path.front() == at
    std::optional<DeploymentId> target;   // nullopt on the response leg
    std::string hop_link;                 // link of the hop in progress
    Time hop_start;
    Time hop_serialized;
  };

  void schedule(Time t, EventKind kind, std::uint64_t subject, std::uint64_t token = 0, std::string link = {});
  void dispatch(const Event& e);
  void on_emit(UserId user, std::uint64_t generation);
  void begin_message(RequestId r);
  void continue_hops(RequestId r);
  void on_transfer_complete(const std::string& link, std::uint64_t version);
  void on_arrival(RequestId r);
  void arrive_at_target(RequestId r);
  void start_service(Deployment& d, RequestId r);
  void on_service_complete(DeploymentId d, RequestId r);
  bool reroute(RequestId r, const std::string& from);
  void fail_request(RequestId r, const std::string& reason);
  void complete_request(RequestId r);
  void reschedule_channel(const std::string& link);
  std::optional<DeploymentId> select_deployment(const RequestTrace& trace, std::size_t stage, const std::string& from);
  void on_user_created(User& u);
  void bind_round_robin(User& u);
  void deploy_dedicated_chain(User& u);
  void invalidate_routes();
  void refresh_routes();
  void replace_topology(Topology t);
  void log_perturbation(const std::string& process, const std::string& what);
  void schedule_process(ProcessState& p, Time at);

  Topology topology_;
  std::vector<Application> apps_;
  EngineConfig config_;

  Time clock_;
  std::uint64_t sequence_ = 0;
  std::uint64_t executed_ = 0;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;

  Availability avail_;
  std::uint64_t avail_revision_ = 0;
  RoutingCache routing_;
  std::map<std::string, LinkChannel> channels_;
  std::map<std::uint64_t, RequestId> transfers_;  // channel transfer id -> request
  std::uint64_t next_transfer_ = 0;

  std::map<UserId, User> users_;
  UserId next_user_ = 0;
  UserPolicy policy_ = UserPolicy::nearest;
  std::map<std::string, std::size_t> round_robin_cursor_;

  std::map<DeploymentId, Deployment> deployments_;
  DeploymentId next_deployment_ = 0;
  InstanceId next_instance_ = 0;

  std::map<ProcessId, ProcessState> processes_;
  ProcessId next_process_ = 0;
  std::map<std::string, CustomHandler> handlers_;

  TraceStore traces_;
  std::map<RequestId, Inflight> inflight_;
  std::vector<std::string> warnings_;
};

}  // namespace cesim
