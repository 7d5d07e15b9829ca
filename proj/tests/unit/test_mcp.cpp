#include <algorithm>
#include <set>
#include <sstream>
#include <thread>

#include "cesim/json_schema.hpp"
#include "cesim/mcp.hpp"
#include "cesim/mcp_client.hpp"
#include "doctest.h"

using namespace cesim;
using json = nlohmann::json;

namespace {

const std::vector<std::string> kNamedTools = {
    "create_default_simulation",          "list_simulations",
    "create_simulation_application",      "get_simulation_state",
    "list_simulation_processes",          "list_simulation_deployed_applications",
    "list_simulation_application_vnfs",   "list_simulation_users",
    "run_simulation_for",                 "wait_simulation_until_ready",
    "get_simulation_application_metrics", "get_simulation_network_metrics",
    "replicate_application_vnf",          "move_application_vnf",
    "list_simulation_node_placements",    "schedule_for",
    "create_users",                       "create_process",
    "pause_simulation",                   "resume_simulation",
    "stop_simulation",                    "destroy_simulation",
    "fork_simulation",                    "create_simulation",
    "export_audit_log"};

const std::set<std::string> kCodes = {"not_found", "invalid_state", "invalid_argument", "capacity", "internal"};

McpClient loopback(McpGateway& gw, const std::string& actor = "test") {
  McpClient c(std::make_unique<LoopbackTransport>(gw), actor);
  c.initialize();
  return c;
}

}  // namespace

TEST_CASE("catalog is sorted, stable and covers every named tool") {
  SimulationService svc;
  McpGateway gw(svc);
  McpClient c = loopback(gw);
  json tools = c.list_tools();
  CHECK(tools == c.list_tools());
  std::vector<std::string> names;
  for (const auto& t : tools) {
    names.push_back(t["name"]);
    CHECK_FALSE(t["description"].get<std::string>().empty());
    CHECK(t["inputSchema"]["type"] == "object");
    CHECK(t["outputSchema"]["type"] == "object");
  }
  CHECK(std::is_sorted(names.begin(), names.end()));
  CHECK(std::set<std::string>(names.begin(), names.end()).size() == names.size());
  for (const auto& n : kNamedTools) CHECK_MESSAGE(std::count(names.begin(), names.end(), n) == 1, n);
}

TEST_CASE("property: every tool round-trips minimal schema-valid input") {
  SimulationService svc;
  McpGateway gw(svc);
  McpClient c = loopback(gw);
  for (const auto& d : gw.tools()) {
    std::string id = svc.create_default_simulation()["simulation_id"];
    json args = minimal_instance(d.input_schema);
    REQUIRE_FALSE(validate_schema(args, d.input_schema));
    if (args.contains("simulation_id")) args["simulation_id"] = id;
    try {
      json out = c.call(d.name, args);
      CHECK_MESSAGE(!validate_schema(out, d.output_schema), d.name, " ", out.dump());
    } catch (const McpToolError& e) {
      CHECK(kCodes.count(std::string(to_string(e.code()))));
    }
  }
  CHECK(gw.audit_size() == c.calls());
}

TEST_CASE("missing required argument is an audited error with no state change") {
  SimulationService svc;
  McpGateway gw(svc);
  McpClient c = loopback(gw);
  std::string id = c.call("create_default_simulation")["simulation_id"];
  json before = svc.list_node_placements(id);
  try {
    c.call("deploy_application_vnf", {{"simulation_id", id}, {"app", "mIoTs"}, {"vnf", "iot-aggregate"}});
    FAIL("expected error");
  } catch (const McpToolError& e) {
    CHECK(e.code() == ErrorCode::invalid_argument);
    CHECK(std::string(e.what()).find("node") != std::string::npos);
  }
  CHECK(svc.list_node_placements(id) == before);
  auto log = gw.audit_log();
  REQUIRE(log.size() == 2);
  CHECK(log[1].status == "error");
  CHECK(log[1].error_code == "invalid_argument");
  CHECK(log[1].simulation_id == id);
  CHECK(log[1].actor == "test");
  CHECK_THROWS_AS(c.call("no_such_tool"), McpToolError);
  CHECK(gw.audit_size() == 3);
}

TEST_CASE("grid creation over HTTP reports the node total") {
  SimulationService svc;
  McpGateway gw(svc);
  HttpMcpServer server(gw);
  int port = server.start();
  McpClient c(std::make_unique<HttpTransport>("127.0.0.1", port), "chat");
  c.initialize();
  json created = c.call("create_simulation", {{"clusters", 3}, {"nodes_per_cluster", 10}, {"name", "clusters3_nodes10"}});
  CHECK(created["summary"].get<std::string>().find("30 nodes total") != std::string::npos);
  CHECK(created["status_detail"] == "created (not started yet)");
  json state = c.call("get_simulation_state", {{"simulation_id", created["simulation_id"]}});
  CHECK(state["name"] == "clusters3_nodes10");
  CHECK(gw.audit_size() == 2);
  server.stop();
}

TEST_CASE("transport equivalence: wire payload bytes equal the embedded API") {
  SimulationService svc;
  McpGateway gw(svc);
  HttpMcpServer server(gw);
  int port = server.start();
  McpClient c(std::make_unique<HttpTransport>("127.0.0.1", port), "eq");
  std::string id = svc.create_default_simulation()["simulation_id"];
  svc.run_for(id, Time::units(400));
  svc.wait_until_idle(id, std::chrono::seconds(10));
  json a = {{"simulation_id", id}};
  CHECK(c.call("list_simulation_users", a).dump() == svc.list_users(id).dump());
  CHECK(c.call("list_simulation_node_placements", a).dump() == svc.list_node_placements(id).dump());
  CHECK(c.call("get_simulation_application_metrics", a).dump() == svc.app_metrics(id).dump());
  CHECK(c.call("get_simulation_network_metrics", a).dump() == svc.network_metrics(id).dump());
  CHECK(c.call("list_simulation_application_vnfs", {{"simulation_id", id}, {"app", "mIoTs"}}).dump() ==
        svc.list_application_vnfs(id, "mIoTs").dump());
  server.stop();
}

TEST_CASE("the exploratory thirteen-call sequence ends with the full metric field set") {
  SimulationService svc;
  McpGateway gw(svc);
  McpClient c = loopback(gw, "llm");
  std::string id = c.call("create_default_simulation")["simulation_id"];
  c.call("list_simulations");
  json sim = {{"simulation_id", id}};
  c.call("create_simulation_application", {{"simulation_id", id}, {"app", "Augmented Reality (AR)"}});
  c.call("create_simulation_application", {{"simulation_id", id}, {"app", "mIoTs"}});
  c.call("get_simulation_state", sim);
  c.call("list_simulation_processes", sim);
  c.call("list_simulation_deployed_applications", sim);
  c.call("list_simulation_application_vnfs", {{"simulation_id", id}, {"app", "Augmented Reality (AR)"}});
  c.call("list_simulation_application_vnfs", {{"simulation_id", id}, {"app", "mIoTs"}});
  c.call("list_simulation_users", sim);
  c.call("run_simulation_for", {{"simulation_id", id}, {"duration", 1000}});
  c.call("wait_simulation_until_ready", sim);
  json m = c.call("get_simulation_application_metrics", sim);
  CHECK(gw.audit_size() == 13);
  for (const auto& r : gw.audit_log()) CHECK(r.status == "ok");
  REQUIRE(m["applications"].size() == 2);
  for (const auto& app : m["applications"])
    for (const char* f : {"requests", "successful", "failed", "response_mean", "response_p50", "response_p95",
                          "response_max", "processing_mean", "waiting_mean"})
      CHECK_MESSAGE(app.contains(f), f);
}

TEST_CASE("audit log filters and bounded summaries") {
  SimulationService svc;
  McpGateway gw(svc);
  McpClient a = loopback(gw, "alice"), b = loopback(gw, "bob");
  std::string id = a.call("create_default_simulation")["simulation_id"];
  b.call("list_simulations");
  b.call("get_simulation_state", {{"simulation_id", id}}, 3);
  std::string big(5000, 'x');
  try {
    a.call("get_simulation_state", {{"simulation_id", big}});
  } catch (const McpToolError&) {
  }
  CHECK(gw.audit_log(AuditFilter{std::string("bob"), {}, {}, {}}).size() == 2);
  CHECK(gw.audit_log(AuditFilter{{}, id, {}, {}}).size() == 2);
  CHECK(gw.audit_log(AuditFilter{{}, {}, std::string("list_simulations"), {}}).size() == 1);
  CHECK(gw.audit_log(AuditFilter{{}, {}, {}, std::uint64_t{3}}).size() == 2);
  auto log = gw.audit_log();
  CHECK(log[2].window == 3);
  CHECK(log[3].input_summary.size() == kAuditSummaryLimit);
  CHECK(log[3].input_sha256 == sha256_hex(json{{"simulation_id", big}}.dump()));
  for (std::size_t i = 0; i < log.size(); ++i) CHECK(log[i].seq == i + 1);
  json exported = a.call("export_audit_log", {{"actor", "alice"}});
  CHECK(exported["records"].size() == 2);
  CHECK(a.last_seq() == 5);
}

TEST_CASE("JSON-RPC envelope handling") {
  SimulationService svc;
  McpGateway gw(svc);
  CHECK(json::parse(gw.handle_text("{not json"))["error"]["code"] == -32700);
  CHECK(json::parse(gw.handle_text(R"({"jsonrpc":"2.0","id":1,"method":"nope"})"))["error"]["code"] == -32601);
  CHECK(json::parse(gw.handle_text(R"({"id":1,"method":"ping"})"))["error"]["code"] == -32600);
  CHECK(gw.handle_text(R"({"jsonrpc":"2.0","method":"notifications/initialized"})").empty());
  json init = json::parse(gw.handle_text(R"({"jsonrpc":"2.0","id":"a","method":"initialize","params":{"clientInfo":{"name":"cli"}}})"));
  CHECK(init["id"] == "a");
  CHECK(init["result"]["capabilities"].contains("tools"));
  json batch = json::parse(gw.handle_text(
      R"([{"jsonrpc":"2.0","id":1,"method":"ping"},{"jsonrpc":"2.0","method":"notifications/initialized"},{"jsonrpc":"2.0","id":2,"method":"tools/call","params":{"name":"list_simulations"}}])"));
  REQUIRE(batch.size() == 2);
  CHECK(batch[1]["result"]["isError"] == false);
  CHECK(gw.audit_log().back().actor == "cli");  // session actor from initialize
}

TEST_CASE("stdio transport is line-delimited") {
  SimulationService svc;
  McpGateway gw(svc);
  std::istringstream in(
      "{\"jsonrpc\":\"2.0\",\"id\":1,\"method\":\"initialize\",\"params\":{}}\n"
      "\n"
      "{\"jsonrpc\":\"2.0\",\"method\":\"notifications/initialized\"}\n"
      "{\"jsonrpc\":\"2.0\",\"id\":2,\"method\":\"tools/call\",\"params\":{\"name\":\"create_default_simulation\"}}\n");
  std::ostringstream out;
  gw.serve_stdio(in, out);
  std::istringstream lines(out.str());
  std::string l;
  std::vector<json> replies;
  while (std::getline(lines, l)) replies.push_back(json::parse(l));
  REQUIRE(replies.size() == 2);
  CHECK(replies[1]["result"]["structuredContent"]["status"] == "created");
  CHECK(replies[1]["result"]["content"][0]["text"] == replies[1]["result"]["structuredContent"].dump());
}

TEST_CASE("concurrent callers get a total order of audit sequence numbers") {
  SimulationService svc;
  McpGateway gw(svc);
  std::vector<std::thread> ts;
  for (int i = 0; i < 8; ++i)
    ts.emplace_back([&, i] {
      McpClient c = loopback(gw, "t" + std::to_string(i));
      std::string id = c.call("create_default_simulation", {{"seed", i + 1}})["simulation_id"];
      c.call("run_simulation_for", {{"simulation_id", id}, {"duration", 100}});
      c.call("wait_simulation_until_ready", {{"simulation_id", id}});
      c.call("get_simulation_application_metrics", {{"simulation_id", id}});
    });
  for (auto& t : ts) t.join();
  auto log = gw.audit_log();
  REQUIRE(log.size() == 32);
  for (std::size_t i = 0; i < log.size(); ++i) CHECK(log[i].seq == i + 1);
  for (const auto& r : log) CHECK(r.status == "ok");
}
