// cesim command line: build, run, compare, export and serve.
#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "cesim/error.hpp"
#include "cesim/harness.hpp"
#include "cesim/mcp.hpp"
#include "cesim/mcp_client.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace cesim;

namespace {

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) fail(ErrorCode::not_found, "cannot open " + p.string());
  return json::parse(in);
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) fail(ErrorCode::internal, "cannot write " + p.string());
  out << text;
}

ScenarioSpec spec_from(const std::string& profile, const std::string& spec_file) {
  if (!spec_file.empty()) {
    json doc = read_json(spec_file);
    if (!doc.contains("profile")) doc["profile"] = profile;
    return ScenarioSpec::from_json(doc);
  }
  if (profile == "full") return full_profile();
  if (profile == "reduced") return reduced_profile();
  fail(ErrorCode::invalid_argument, "unknown profile '" + profile + "' (full or reduced)");
}

json time_value(Time t) {
  return t.raw() % Fixed::kScale == 0 ? json(t.raw() / Fixed::kScale) : json(t.to_double());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cloud-edge continuum simulator"};
  app.require_subcommand(1);

  // build
  std::string profile = "reduced", spec_file, out_dir = "scenario";
  std::uint64_t seed = 1;
  std::optional<std::size_t> total_nodes;
  auto* build = app.add_subcommand("build", "Generate the comparison scenario directory");
  build->add_option("--profile", profile, "full or reduced")->capture_default_str();
  build->add_option("--spec", spec_file, "Scenario spec JSON overriding the profile");
  build->add_option("--seed", seed)->capture_default_str();
  build->add_option("--total-nodes", total_nodes);
  build->add_option("--out", out_dir)->capture_default_str();

  // run
  std::string scenario_dir, report_path;
  std::string until = "100";
  auto* run = app.add_subcommand("run", "Run one scenario directory and print its metrics");
  run->add_option("--scenario", scenario_dir)->required();
  run->add_option("--until", until, "Simulated time to stop at")->capture_default_str();
  run->add_option("--out", report_path, "Write the metrics JSON here instead of stdout");

  // compare
  std::string horizon, window, agent_file, compare_out = "results";
  std::vector<std::string> strategies = {"random", "greedy", "multi-agent"};
  bool control = false;
  std::uint64_t placement_seed = 1;
  auto* compare = app.add_subcommand("compare", "Random, greedy and multi-agent from forks of one parent");
  compare->add_option("--scenario", scenario_dir, "Scenario directory; built from --profile when absent");
  compare->add_option("--profile", profile)->capture_default_str();
  compare->add_option("--seed", seed)->capture_default_str();
  compare->add_option("--horizon", horizon);
  compare->add_option("--window", window);
  compare->add_option("--strategies", strategies)->delimiter(',')->capture_default_str();
  compare->add_option("--agent-config", agent_file, "AgentConfig JSON");
  compare->add_option("--placement-seed", placement_seed)->capture_default_str();
  compare->add_flag("--control", control, "Add a multi-agent run with thresholds disabled");
  compare->add_option("--out", compare_out)->capture_default_str();

  // export
  std::string export_report, export_out = "plots";
  auto* exp = app.add_subcommand("export", "Write plot-ready CSV tables from a comparison report");
  exp->add_option("--report", export_report)->required();
  exp->add_option("--out", export_out)->capture_default_str();

  // serve
  bool stdio = false;
  int http_port = -1;
  std::string host = "127.0.0.1", scenario_root = ".", audit_path;
  auto* serve = app.add_subcommand("serve", "Expose the MCP gateway");
  serve->add_flag("--stdio", stdio, "Line-delimited JSON-RPC on stdin/stdout");
  serve->add_option("--http", http_port, "Serve POST /mcp on this port (0 picks one)");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--scenario-root", scenario_root)->capture_default_str();
  serve->add_option("--audit", audit_path, "Append audit records to this JSONL file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build) {
      ScenarioSpec spec = spec_from(profile, spec_file);
      if (total_nodes) spec.total_nodes = *total_nodes;
      BuiltScenario b = build_scenario(spec, seed);
      write_built_scenario(b, out_dir);
      std::cout << "wrote " << out_dir << " (" << b.scenario.topology.node_count() << " nodes, hotspot "
                << b.hotspot_node << " -> " << b.neighbor_node << ")\n";
      return 0;
    }

    if (*run) {
      SimulationService service;
      McpGateway gw(service);
      McpClient c(std::make_unique<LoopbackTransport>(gw), "cli");
      c.initialize();
      fs::path dir = fs::absolute(scenario_dir);
      std::string sim = c.call("create_simulation", {{"scenario_dir", dir.string()}}).at("simulation_id");
      json s = {{"simulation_id", sim}};
      c.call("initialize_simulation", s);
      Time t = Time::parse(until);
      c.call("schedule_for", {{"simulation_id", sim}, {"until", time_value(t)}});
      c.call("wait_simulation_until_ready", {{"simulation_id", sim}, {"timeout_ms", 3600000}});
      json w = {{"simulation_id", sim}, {"window_start", 0}, {"window_end", t.str()}};
      json out = {{"state", c.call("get_simulation_state", s)},
                  {"applications", c.call("get_simulation_application_metrics", w).at("applications")},
                  {"network", c.call("get_simulation_network_metrics", w)},
                  {"trace_hash", c.call("get_simulation_trace_hash", s).at("trace_hash")}};
      if (report_path.empty())
        std::cout << out.dump(2) << '\n';
      else
        write_text(report_path, out.dump(2) + "\n");
      return 0;
    }

    if (*compare) {
      BuiltScenario b = scenario_dir.empty() ? build_scenario(spec_from(profile, ""), seed) : load_built_scenario(scenario_dir);
      ComparisonOptions opt;
      opt.strategies = strategies;
      opt.control = control;
      opt.placement_seed = placement_seed;
      if (!horizon.empty()) opt.horizon = Time::parse(horizon);
      if (!window.empty()) opt.window = Time::parse(window);
      if (!agent_file.empty()) opt.agent = AgentConfig::from_json(read_json(agent_file));
      SimulationService service;
      GatewayConfig gc;
      gc.audit_path = fs::path(compare_out) / "audit.jsonl";
      fs::create_directories(compare_out);
      McpGateway gw(service, gc);
      auto t0 = std::chrono::steady_clock::now();
      ComparisonReport r = run_comparison(gw, b, seed, opt);
      double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_text(fs::path(compare_out) / "report.json", r.to_json().dump(2) + "\n");
      for (const auto& res : r.results) {
        std::cout << res.strategy << ": replicas " << res.replicas << ", placement cost " << res.placement_cost;
        for (const auto& [name, t] : res.totals.items())
          std::cout << ", " << name << " mean " << (t.at("response_mean").is_number() ? t.at("response_mean").dump() : "-");
        if (res.loop) std::cout << ", actions " << res.loop->action_count();
        std::cout << '\n';
      }
      std::cout << "wrote " << compare_out << "/report.json in " << secs << " s\n";
      return 0;
    }

    if (*exp) {
      for (const auto& [name, text] : export_plots_data(read_json(export_report)))
        write_text(fs::path(export_out) / name, text);
      std::cout << "wrote " << export_out << '\n';
      return 0;
    }

    if (*serve) {
      if (stdio == (http_port >= 0)) fail(ErrorCode::invalid_argument, "serve needs exactly one of --stdio or --http PORT");
      SimulationService service;
      GatewayConfig gc;
      gc.scenario_root = scenario_root;
      if (!audit_path.empty()) gc.audit_path = audit_path;
      McpGateway gw(service, gc);
      if (stdio) {
        gw.serve_stdio(std::cin, std::cout);
        return 0;
      }
      HttpMcpServer server(gw);
      std::cerr << "serving POST /mcp on " << host << ":" << http_port << '\n';
      server.listen(host, http_port);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
