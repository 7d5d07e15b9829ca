#pragma once
// A scenario is everything needed to instantiate an Engine: the topology,
// application catalogue, initial placement, users and processes, plus a
// few run settings. On disk it is a directory of JSON documents.

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cesim/engine.hpp"
#include "cesim/metrics.hpp"
#include "cesim/topology.hpp"
#include "cesim/workload.hpp"

namespace cesim {

struct Scenario {
  std::string name;
  Topology topology;
  std::vector<Application> applications;
  std::vector<PlacementEntry> placements;
  std::vector<UserSpec> users;
  std::vector<ProcessSpec> processes;
  UserPolicy policy = UserPolicy::nearest;
  std::uint64_t seed = 1;
  RegionRates egress_rates;
  RegionRates ingress_rates;
  nlohmann::json extra = nlohmann::json::object();  // free-form settings carried through config.json
};

// Builds an engine and applies placements, policy, users and processes in
// that order. Throws on any referential error.
Engine instantiate(const Scenario& s, const std::map<std::string, CustomHandler>& handlers = {});

// Documents keyed "topology", "services", "placements", "users",
// "processes" and "config"; only "topology" is required.
Scenario load_scenario_documents(const nlohmann::json& docs, const std::string& name = "scenario");
nlohmann::json scenario_documents(const Scenario& s);

// topology.json, services.json, placements.json, users.json, processes.json, config.json.
Scenario load_scenario_dir(const std::filesystem::path& dir);
void write_scenario_dir(const Scenario& s, const std::filesystem::path& dir);

// Small ready-to-run scenario: six clusters in three tiers, two
// applications ("Augmented Reality (AR)", "mIoTs"), one user each, seeded
// random placement.
Scenario default_scenario(std::uint64_t seed = 1);
// `clusters` clusters of `nodes_per_cluster` nodes (one control plane
// each) in a full mesh, default application catalogue, nothing deployed.
Scenario grid_scenario(std::size_t clusters, std::size_t nodes_per_cluster, std::uint64_t seed = 1);
std::vector<Application> default_applications();

}  // namespace cesim
