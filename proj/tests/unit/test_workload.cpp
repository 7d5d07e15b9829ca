#include <nlohmann/json.hpp>

#include <map>

#include "cesim/error.hpp"
#include "cesim/workload.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace cesim;
using namespace cesim::testing;
using nlohmann::json;

namespace {

json table_apps() {
  return json::parse(R"({"applications": [
    {"name": "Perception Pipeline", "latency_requirement": 120,
     "vnfs": [{"name": "ingest", "service_time": 0.5, "resources": {"cpu": 1, "memory": "256Mi"}},
              {"name": "detect", "service_time": 1.5, "resources": {"cpu": 2, "memory": "512Mi"}},
              {"name": "fuse", "service_time": 0.5, "resources": {"cpu": 1, "memory": "256Mi"}}],
     "messages": [{"name": "frame", "src": "user", "dst": "ingest", "size": 40},
                  {"name": "features", "src": "ingest", "dst": "detect", "size": 20},
                  {"name": "objects", "src": "detect", "dst": "fuse", "size": 10},
                  {"name": "result", "src": "fuse", "dst": "user", "size": 5}]},
    {"name": "Coordination Pipeline", "latency_requirement": 75,
     "vnfs": [{"name": "plan", "service_time": 0.5}, {"name": "sync", "service_time": 0.25}],
     "messages": [{"name": "req", "src": "user", "dst": "plan", "size": 8},
                  {"name": "plan-out", "src": "plan", "dst": "sync", "size": 8},
                  {"name": "ack", "src": "sync", "dst": "user", "size": 2}]},
    {"name": "Telemetry Monitoring", "latency_requirement": 50,
     "vnfs": [{"name": "collect", "service_time": 0.125}],
     "messages": [{"name": "sample", "src": "user", "dst": "collect", "size": 2},
                  {"name": "ack", "src": "collect", "dst": "user", "size": 1}]}
  ]})");
}

}  // namespace

TEST_CASE("three-application catalogue loads with the expected chain arity") {
  auto apps = load_applications(table_apps());
  REQUIRE(apps.size() == 3);
  CHECK(apps[0].vnfs.size() == 3);
  CHECK(apps[0].messages.size() == 4);
  CHECK(apps[0].latency_requirement == Fixed::units(120));
  CHECK(apps[0].has_response_path());
  CHECK(apps[2].vnfs.size() == 1);
  CHECK(apps[2].messages.size() == 2);
  CHECK(apps[2].latency_requirement == Fixed::units(50));
}

TEST_CASE("applications round-trip through serialization") {
  json doc = applications_to_json(load_applications(table_apps()));
  CHECK(applications_to_json(load_applications(doc)) == doc);
}

TEST_CASE("chain inconsistency is reported") {
  Application a = chain_app("x", 2, Fixed::units(1), Fixed::units(1));
  for (int i = 0; i < 2; ++i) a.messages.push_back(a.messages.back());
  REQUIRE(a.messages.size() == 5);
  CHECK_THROWS_WITH(validate_application(a), doctest::Contains("chain inconsistency"));
  Application b = chain_app("y", 2, Fixed::units(1), Fixed::units(1));
  std::swap(b.messages[0].dst, b.messages[1].dst);
  CHECK_THROWS_WITH(validate_application(b), doctest::Contains("chain inconsistency"));
}

TEST_CASE("distributions validate and sample strictly positive values") {
  CHECK_THROWS(Distribution::deterministic(Time{}).validate());
  CHECK_THROWS(Distribution::exponential(0.0).validate());
  CHECK_THROWS(Distribution::uniform(Time::units(3), Time::units(3)).validate());
  Rng r = make_stream(1, "d");
  auto e = Distribution::exponential(1000.0);
  for (int i = 0; i < 1000; ++i) CHECK(e.sample(r) >= Time::from_raw(1));
  auto u = Distribution::uniform(Time::units(2), Time::units(4));
  for (int i = 0; i < 1000; ++i) {
    Time t = u.sample(r);
    CHECK(t >= Time::units(2));
    CHECK(t <= Time::units(4));
  }
  CHECK(load_distribution(json::parse(R"({"type": "exponential", "mean": 4})"), "$").rate == doctest::Approx(0.25));
}

TEST_CASE("streams are independent by key and reproducible by seed") {
  Rng a = make_stream(9, "user:1"), b = make_stream(9, "user:1"), c = make_stream(9, "user:2"), d = make_stream(10, "user:1");
  auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
  Rng r = make_stream(3, "idx");
  std::map<std::size_t, int> seen;
  for (int i = 0; i < 3000; ++i) ++seen[uniform_index(r, 3)];
  CHECK(seen.size() == 3);
  for (auto& [k, v] : seen) CHECK(std::abs(v - 1000) < 150);
}

TEST_CASE("mobility process descriptor with documented values") {
  json doc = json::parse(R"J({
    "name": "user-mobility-ar", "kind": "user_mobility_random", "enabled": true,
    "distribution": {"type": "deterministic", "time": 30},
    "params": {"app_ref": "Augmented Reality (AR)",
               "nodes": ["mec-0-worker-1", "edc-1-worker-1", "edc-2-worker-1"],
               "create_probability": 0.10, "move_probability": 0.80}})J");
  ProcessSpec p = load_process(doc);
  CHECK(p.kind == ProcessKind::user_mobility_random);
  CHECK(p.distribution.period == Time::units(30));
  MobilityParams m = parse_mobility(p.params);
  CHECK(m.nodes.size() == 3);
  CHECK(m.create_probability == doctest::Approx(0.10));
  CHECK(process_to_json(load_process(process_to_json(p))) == process_to_json(p));

  doc["params"]["move_probability"] = 1.5;
  CHECK_THROWS_WITH(load_process(doc), doctest::Contains("move_probability"));
}

TEST_CASE("hotspot timeline must be strictly increasing") {
  json params = json::parse(R"({"app_ref": "a", "steps": [
    {"time": 10, "action": "add", "count": 3, "node": "n"},
    {"time": 10, "action": "remove", "fraction": 0.4}]})");
  CHECK_THROWS_WITH(parse_hotspot(params), doctest::Contains("strictly increasing"));
  params["steps"][1]["time"] = 11;
  CHECK(parse_hotspot(params).steps.size() == 2);
}

TEST_CASE("users document expands counts") {
  auto us = load_users(json::parse(R"({"users": [
    {"app": "a", "node": "n", "distribution": {"type": "deterministic", "time": 30}, "count": 3}]})"));
  CHECK(us.size() == 3);
  CHECK_THROWS(load_users(json::parse(R"({"users": [{"app": "a", "node": "n"}]})")));
}
