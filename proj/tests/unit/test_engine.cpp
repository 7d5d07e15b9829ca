#include <nlohmann/json.hpp>

#include <map>
#include <sstream>

#include "cesim/engine.hpp"
#include "cesim/error.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace cesim;
using namespace cesim::testing;
using nlohmann::json;

namespace {

Topology pair_topology(std::int64_t latency, std::int64_t bw) {
  return Topology::build({cluster("a", 1), cluster("b", 1)}, {cluster_link("a", "b", latency, bw)});
}

}  // namespace

TEST_CASE("empty queue fast-forwards") {
  Engine e(line_topology(1, 1), {});
  CHECK(e.run_until(Time::units(100)) == Time::units(100));
  CHECK(e.executed_events() == 0);
  CHECK_THROWS(e.run_until(Time::units(50)));
}

TEST_CASE("deterministic user emits on an arithmetic progression") {
  Engine e(line_topology(1, 1), {chain_app("app", 1, Fixed::units(1), Fixed::units(1))});
  e.deploy("app", "v0", "c0-cp");
  e.spawn_user(user("app", "c0-w0", 30));
  e.run_until(Time::units(100));
  std::vector<Time> emitted;
  for (const auto& r : e.traces().requests) emitted.push_back(r.emitted);
  CHECK(emitted == std::vector<Time>{Time::units(0), Time::units(30), Time::units(60), Time::units(90)});
}

TEST_CASE("transmission time is serialization plus propagation") {
  SUBCASE("sole occupancy") {
    Engine e(pair_topology(5, 10), {chain_app("app", 1, Fixed{}, Fixed::units(10), false)});
    e.deploy("app", "v0", "b-cp");
    e.spawn_user(user("app", "a-cp", 1000));
    e.run_until(Time::units(50));
    const auto& r = e.traces().requests.at(0);
    REQUIRE(r.hops.size() == 1);
    CHECK(r.hops[0].duration() == Time::units(6));
    CHECK(r.hops[0].serialized == Time::units(1));
  }
  SUBCASE("two equal transfers starting together") {
    Engine e(pair_topology(5, 10), {chain_app("app", 1, Fixed{}, Fixed::units(10), false)});
    e.deploy("app", "v0", "b-cp");
    e.spawn_user(user("app", "a-cp", 1000));
    e.spawn_user(user("app", "a-cp", 1000));
    e.run_until(Time::units(50));
    for (const auto& r : e.traces().requests) CHECK(r.hops.at(0).duration() == Time::units(7));
  }
  SUBCASE("zero-size control message") {
    Engine e(pair_topology(5, 10), {chain_app("app", 1, Fixed{}, Fixed{}, false)});
    e.deploy("app", "v0", "b-cp");
    e.spawn_user(user("app", "a-cp", 1000));
    e.run_until(Time::units(50));
    CHECK(e.traces().requests.at(0).hops.at(0).duration() == Time::units(5));
  }
}

TEST_CASE("single-server FIFO queue") {
  Engine e(line_topology(1, 0), {chain_app("app", 1, Fixed::units(2), Fixed{}, false)});
  e.deploy("app", "v0", "c0-cp");
  e.spawn_user(user("app", "c0-cp", 1000));
  e.spawn_user(user("app", "c0-cp", 1000));
  e.run_until(Time::units(10));
  const auto& rs = e.traces().requests;
  REQUIRE(rs.size() == 2);
  CHECK(*rs[0].completed == Time::units(2));
  CHECK(*rs[1].completed == Time::units(4));
  CHECK(rs[0].waiting_time() == Time{});
  CHECK(rs[1].waiting_time() == Time::units(2));
}

TEST_CASE("nearest replica is selected") {
  Engine e(line_topology(4, 1), {chain_app("app", 1, Fixed::units(1), Fixed::units(1))});
  e.deploy("app", "v0", "c3-w0");
  e.deploy("app", "v0", "c1-cp");
  e.spawn_user(user("app", "c0-w0"));
  e.run_until(Time::units(20));
  const auto& r = e.traces().requests.at(0);
  REQUIRE(r.completed);
  CHECK(r.services.at(0).node == "c1-cp");
  // Response leg returns to the origin.
  CHECK(r.path.back() == "c0-w0");
  CHECK(r.path == std::vector<std::string>{"c0-w0", "c0-cp", "c1-cp", "c0-cp", "c0-w0"});
}

TEST_CASE("mid-flight failure reroutes once to another replica") {
  Topology t = Topology::build({cluster("a", 1), cluster("b", 0), cluster("c", 0)},
                               {cluster_link("a", "b", 5), cluster_link("a", "c", 20), cluster_link("b", "c", 20)});
  Engine e(t, {chain_app("app", 2, Fixed::units(1), Fixed{}, false)});
  e.deploy("app", "v0", "a-cp");
  e.deploy("app", "v1", "b-cp");
  e.deploy("app", "v1", "c-cp");
  e.spawn_user(user("app", "a-w0", 1000));
  // a-w0 -> a-cp arrives at 1, served until 2, then a-cp -> b-cp lands at 7.
  e.run_until(Time::units(4));
  e.set_node_up("b-cp", false);
  e.run_until(Time::units(100));
  const auto& r = e.traces().requests.at(0);
  INFO(r.failure_reason);
  REQUIRE(r.completed);
  CHECK(r.rerouted);
  CHECK(r.services.at(1).node == "c-cp");
  CHECK(r.hops.size() == 3);  // a-w0->a-cp, a-cp->b-cp (wasted), a-cp->c-cp
  CHECK(*r.completed == Time::units(7 + 20 + 1));
  CHECK(r.response_time() == r.network_time() + r.processing_time() + r.waiting_time());
}

TEST_CASE("second failure after a reroute is a loss") {
  Topology t = Topology::build({cluster("a", 1), cluster("b", 0), cluster("c", 0)},
                               {cluster_link("a", "b", 5), cluster_link("a", "c", 20)});
  Engine e(t, {chain_app("app", 2, Fixed::units(1), Fixed{}, false)});
  e.deploy("app", "v0", "a-cp");
  e.deploy("app", "v1", "b-cp");
  e.deploy("app", "v1", "c-cp");
  e.spawn_user(user("app", "a-w0", 1000));
  e.run_until(Time::units(4));
  e.set_node_up("b-cp", false);
  e.run_until(Time::units(10));
  e.set_node_up("c-cp", false);
  e.run_until(Time::units(100));
  const auto& r = e.traces().requests.at(0);
  REQUIRE(r.failed);
  CHECK(r.failure_reason == "loss");
}

TEST_CASE("missing stage and unreachable stage are distinguished") {
  Engine e(Topology::build({cluster("a", 1), cluster("b", 1)}, {}), {chain_app("app", 2, Fixed::units(1), Fixed{})});
  e.deploy("app", "v0", "a-cp");
  e.spawn_user(user("app", "a-w0", 1000));
  e.run_until(Time::units(10));
  CHECK(e.traces().requests.at(0).failure_reason == "missing_stage");
  e.deploy("app", "v1", "b-cp");
  e.spawn_user(user("app", "a-w0", 1000));
  e.run_until(Time::units(20));
  CHECK(e.traces().requests.at(1).failure_reason == "no_path");
}

TEST_CASE("deployment operations") {
  Engine e(line_topology(2, 1), {chain_app("app", 2, Fixed::units(1), Fixed::units(1))});
  auto id = e.deploy("app", "v0", "c0-w0");
  CHECK(e.active_deployments().size() == 1);

  SUBCASE("replicate onto empty node") {
    auto ids = e.replicate("app", "v0", {"c1-w0"});
    CHECK(ids.size() == 1);
    CHECK(e.active_deployments().size() == 2);
  }
  SUBCASE("capacity") {
    Application big = chain_app("big", 1, Fixed::units(1), Fixed::units(1));
    big.vnfs[0].footprint.cpu = Fixed::units(101);
    e.add_application(big);
    CHECK_THROWS_WITH(e.deploy("big", "v0", "c0-w0"), doctest::Contains("insufficient capacity"));
    try {
      e.deploy("big", "v0", "c0-w0");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::capacity);
    }
  }
  SUBCASE("move keeps the count and changes the node") {
    e.move("app", "v0", "c0-w0", "c1-w0");
    auto act = e.active_deployments();
    REQUIRE(act.size() == 1);
    CHECK(act[0]->node == "c1-w0");
    CHECK_FALSE(e.deployments().at(id).active);
  }
  SUBCASE("removing the sole replica is flagged") {
    CHECK(e.remove("app", "v0", "c0-w0"));
    CHECK_FALSE(e.warnings().empty());
    CHECK_THROWS_AS(e.remove("app", "v0", "c0-w0"), Error);
  }
  SUBCASE("nodes hosting deployments cannot be removed") {
    CHECK_THROWS_WITH(e.remove_node("c0-w0"), doctest::Contains("hosts deployments"));
    e.remove_node("c1-w0");
    CHECK_FALSE(e.topology().find_node("c1-w0"));
  }
  SUBCASE("down nodes accept neither deployments nor users") {
    e.set_node_up("c1-w0", false);
    CHECK_THROWS_WITH(e.deploy("app", "v0", "c1-w0"), doctest::Contains("node unavailable"));
    CHECK_THROWS_WITH(e.spawn_user(user("app", "c1-w0")), doctest::Contains("node unavailable"));
  }
}

TEST_CASE("in-flight work on a moved deployment completes at the old node") {
  Engine e(line_topology(1, 1), {chain_app("app", 1, Fixed::units(10), Fixed{}, false)});
  e.deploy("app", "v0", "c0-cp");
  e.spawn_user(user("app", "c0-cp", 1000));
  e.run_until(Time::units(5));
  e.move("app", "v0", "c0-cp", "c0-w0");
  e.run_until(Time::units(20));
  const auto& r = e.traces().requests.at(0);
  REQUIRE(r.completed);
  CHECK(r.services.at(0).node == "c0-cp");
}

TEST_CASE("snapshot counters") {
  Engine e(line_topology(3, 1), {chain_app("app", 1, Fixed::units(1), Fixed::units(1))});
  auto s0 = e.snapshot_runtime();
  CHECK(s0.users == 0);
  CHECK(s0.deployments == 0);
  CHECK(s0.in_flight == 0);
  CHECK(s0.down_nodes == 0);
  CHECK(s0.unreachable_links == 0);
  e.set_node_up("c1-cp", false);
  auto s1 = e.snapshot_runtime();
  CHECK(s1.down_nodes == 1);
  CHECK(s1.unreachable_links > 0);
  CHECK(e.route_cost("c0-w0", "c2-w0").reachable() == false);
}

TEST_CASE("conservation of requests at every instant") {
  Engine e(line_topology(3, 2), {chain_app("app", 2, Fixed::units(3), Fixed::units(20))});
  e.deploy("app", "v0", "c1-w0");
  e.deploy("app", "v1", "c2-w1");
  for (int i = 0; i < 5; ++i) e.spawn_user(user("app", "c0-w" + std::to_string(i % 2), 7 + i));
  for (int t = 1; t <= 60; ++t) {
    e.run_until(Time::units(t * 5));
    std::size_t ok = 0, failed = 0, open = 0;
    for (const auto& r : e.traces().requests) {
      if (r.completed) ++ok;
      else if (r.failed) ++failed;
      else ++open;
    }
    CHECK(e.traces().requests.size() == ok + failed + open);
    CHECK(open == e.snapshot_runtime().in_flight);
    if (t == 30) e.set_node_up("c1-w0", false);
  }
}

TEST_CASE("hotspot timeline adds, relocates and removes the lowest ids") {
  Engine e(line_topology(2, 2), {chain_app("app", 1, Fixed::units(1), Fixed::units(1))});
  e.deploy("app", "v0", "c0-cp");
  ProcessSpec p;
  p.name = "hot";
  p.kind = ProcessKind::hotspot_users;
  p.params = json::parse(R"({"app_ref": "app", "steps": [
    {"time": 10, "action": "add", "count": 60, "node": "c1-w0"},
    {"time": 18, "action": "relocate", "node": "c1-w1"},
    {"time": 26, "action": "remove", "fraction": 0.4}]})");
  e.register_process(p);
  e.run_until(Time::units(11));
  CHECK(e.active_user_count() == 60);
  CHECK(e.snapshot_runtime().users == 60);
  e.run_until(Time::units(19));
  for (const auto& [id, u] : e.users()) CHECK(u.spec.node == "c1-w1");
  e.run_until(Time::units(27));
  CHECK(e.active_user_count() == 36);
  std::vector<UserId> removed;
  for (const auto& [id, u] : e.users())
    if (!u.active) removed.push_back(id);
  REQUIRE(removed.size() == 24);
  CHECK(removed.front() == 0);
  CHECK(removed.back() == 23);
}

TEST_CASE("mobility outcome frequencies follow the configured probabilities") {
  Engine e(line_topology(3, 1), {chain_app("app", 1, Fixed::units(1), Fixed::units(1))}, EngineConfig{77});
  e.spawn_user(user("app", "c0-w0"));
  ProcessSpec p;
  p.name = "mob";
  p.kind = ProcessKind::user_mobility_random;
  p.distribution = Distribution::deterministic(Time::units(30));
  p.params = json::parse(R"({"app_ref": "app", "nodes": ["c0-w0", "c1-w0", "c2-w0"],
                             "create_probability": 0.10, "move_probability": 0.80})");
  ProcessId id = e.register_process(p);
  std::map<std::string, int> freq;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto applied = e.tick_process(id);
    REQUIRE(applied.size() == 1);
    freq[applied[0].substr(0, applied[0].find(' '))]++;
  }
  CHECK(std::abs(freq["create"] / double(n) - 0.10) <= 0.02);
  CHECK(std::abs(freq["move"] / double(n) - 0.80) <= 0.02);
  CHECK(std::abs(freq["no-op"] / double(n) - 0.10) <= 0.02);
}

TEST_CASE("remove_user is idempotent with a warning") {
  Engine e(line_topology(1, 1), {chain_app("app", 1, Fixed::units(1), Fixed::units(1))});
  auto u = e.spawn_user(user("app", "c0-w0"));
  e.remove_user(u);
  auto w = e.warnings().size();
  e.remove_user(u);
  CHECK(e.warnings().size() == w + 1);
  CHECK(e.active_user_count() == 0);
}

TEST_CASE("user placement policies") {
  SUBCASE("dedicated chain per user on the user's node") {
    Engine e(line_topology(2, 1), {chain_app("app", 3, Fixed::units(1), Fixed::units(1))});
    e.set_user_policy(UserPolicy::dedicated);
    e.spawn_user(user("app", "c1-w0"));
    auto act = e.active_deployments();
    REQUIRE(act.size() == 3);
    for (auto* d : act) CHECK(d->node == "c1-w0");
    for (int i = 0; i < 9; ++i) e.spawn_user(user("app", "c0-w0"));
    CHECK(e.active_deployments().size() == 30);
  }
  SUBCASE("dedicated chain falls back when the user's node is full") {
    Application a = chain_app("app", 2, Fixed::units(1), Fixed::units(1));
    a.vnfs[1].footprint.cpu = Fixed::units(150);
    auto t = Topology::build({cluster("a", 1)}, {});
    auto cs = t.clusters();
    cs[0].nodes[0].cpu = Fixed::units(200);
    Engine e(Topology::build(cs, {}), {a});
    e.set_user_policy(UserPolicy::dedicated);
    e.spawn_user(user("app", "a-w0"));
    auto act = e.active_deployments();
    REQUIRE(act.size() == 2);
    CHECK(act[0]->node == "a-w0");
    CHECK(act[1]->node == "a-cp");
  }
  SUBCASE("round robin over shared instances") {
    Engine e(line_topology(2, 1), {chain_app("app", 1, Fixed::units(1), Fixed::units(1))});
    e.deploy("app", "v0", "c0-w0", 0);
    e.deploy("app", "v0", "c1-w0", 1);
    e.set_user_policy(UserPolicy::round_robin);
    std::vector<InstanceId> got;
    for (int i = 0; i < 3; ++i) got.push_back(*e.users().at(e.spawn_user(user("app", "c0-w0"))).instance);
    CHECK(got == std::vector<InstanceId>{0, 1, 0});
    e.run_until(Time::units(25));
    // The user bound to instance 1 is served by the far replica.
    CHECK(e.traces().requests.at(1).services.at(0).node == "c1-w0");
  }
}

TEST_CASE("identical seeds give identical trace hashes; copies replay identically") {
  auto build = [](std::uint64_t seed) {
    Engine e(line_topology(3, 2), {chain_app("app", 2, Fixed::units(2), Fixed::units(15))}, EngineConfig{seed});
    e.deploy("app", "v0", "c1-w0");
    e.deploy("app", "v1", "c2-w1");
    for (int i = 0; i < 4; ++i)
      e.spawn_user(UserSpec{"app", "c0-w" + std::to_string(i % 2), Distribution::exponential(0.1), ""});
    ProcessSpec p;
    p.name = "mob";
    p.kind = ProcessKind::user_mobility_random;
    p.distribution = Distribution::exponential(0.05);
    p.params = json::parse(R"({"app_ref": "app", "nodes": ["c0-w0", "c0-w1", "c1-w1"],
                               "create_probability": 0.3, "move_probability": 0.5})");
    e.register_process(p);
    return e;
  };
  Engine a = build(5), b = build(5), c = build(6);
  a.run_until(Time::units(500));
  b.run_until(Time::units(250));
  Engine twin = b;
  b.run_until(Time::units(500));
  twin.run_until(Time::units(500));
  c.run_until(Time::units(500));
  CHECK(a.traces().hash() == b.traces().hash());
  CHECK(twin.traces().hash() == b.traces().hash());
  CHECK(a.traces().hash() != c.traces().hash());
  CHECK(!a.traces().perturbations.empty());
}

TEST_CASE("topology changes invalidate cached routes") {
  Engine e(line_topology(2, 1), {});
  auto r0 = e.routing_recomputations();
  e.route("c0-w0", "c1-w0");
  e.route("c0-w0", "c1-w0");
  CHECK(e.routing_recomputations() == r0 + 1);
  e.add_node("c1", node("w9"));
  auto p = e.route("c0-w0", "c1-w9");
  REQUIRE(p);
  CHECK(p->size() == 4);
  CHECK(e.routing_recomputations() == r0 + 2);
}

TEST_CASE("custom process handlers") {
  Engine e(line_topology(1, 1), {});
  ProcessSpec p;
  p.name = "c";
  p.kind = ProcessKind::custom;
  p.distribution = Distribution::deterministic(Time::units(10));
  p.params = {{"handler", "mark"}};
  CHECK_THROWS_AS(e.register_process(p), Error);
  int calls = 0;
  e.register_handler("mark", [&](Engine&, const ProcessSpec&, Rng&) {
    ++calls;
    return std::vector<std::string>{"marked"};
  });
  e.register_process(p);
  e.run_until(Time::units(35));
  CHECK(calls == 3);
  CHECK(e.traces().perturbations.size() == 3);
}
