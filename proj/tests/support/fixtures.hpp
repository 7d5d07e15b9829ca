#pragma once
// Small hand-built models shared by unit and acceptance tests.

#include <string>
#include <vector>

#include "cesim/engine.hpp"
#include "cesim/topology.hpp"
#include "cesim/workload.hpp"

namespace cesim::testing {

inline NodeSpec node(const std::string& name, NodeRole role = NodeRole::worker, std::int64_t cpu = 100,
                     Fixed cost = Fixed::from_raw(10)) {
  return NodeSpec{name, role, Fixed::units(cpu), Fixed::units(1024), cost};
}

// Cluster with one control plane ("cp") and `workers` workers ("w0", ...).
inline ClusterSpec cluster(const std::string& name, std::size_t workers, const std::string& region = "r0") {
  ClusterSpec c{name, "EDGE", region, {}};
  c.nodes.push_back(node("cp", NodeRole::control_plane));
  for (std::size_t i = 0; i < workers; ++i) c.nodes.push_back(node("w" + std::to_string(i)));
  return c;
}

inline LinkSpec cluster_link(const std::string& a, const std::string& b, std::int64_t latency = 5, std::int64_t bw = 100,
                     std::int64_t km = 10) {
  return LinkSpec{a, b, Fixed::units(km), Fixed::units(latency), Fixed::units(bw)};
}

// Clusters c0 - c1 - ... - c{n-1} in a line.
inline Topology line_topology(std::size_t clusters, std::size_t workers, std::int64_t latency = 5,
                              std::int64_t bw = 100) {
  std::vector<ClusterSpec> cs;
  std::vector<LinkSpec> ls;
  for (std::size_t i = 0; i < clusters; ++i) cs.push_back(cluster("c" + std::to_string(i), workers));
  for (std::size_t i = 0; i + 1 < clusters; ++i)
    ls.push_back(cluster_link("c" + std::to_string(i), "c" + std::to_string(i + 1), latency, bw));
  return Topology::build(cs, ls);
}

// Chain app with `vnfs` stages (service time `demand` each), optional
// response message, message size `size`.
inline Application chain_app(const std::string& name, std::size_t vnfs, Fixed demand, Fixed size,
                             bool response = true, Fixed latency_req = Fixed::units(100)) {
  Application a;
  a.name = name;
  a.latency_requirement = latency_req;
  for (std::size_t i = 0; i < vnfs; ++i)
    a.vnfs.push_back(VnfSpec{"v" + std::to_string(i), demand, Resources{Fixed::units(1), Fixed::units(64)}});
  for (std::size_t i = 0; i < vnfs; ++i) {
    std::string src = i == 0 ? std::string(kUserEndpoint) : a.vnfs[i - 1].name;
    a.messages.push_back(MessageSpec{"m" + std::to_string(i), src, a.vnfs[i].name, size});
  }
  if (response) a.messages.push_back(MessageSpec{"resp", a.vnfs.back().name, std::string(kUserEndpoint), size});
  return a;
}

inline UserSpec user(const std::string& app, const std::string& node, std::int64_t period = 30) {
  return UserSpec{app, node, Distribution::deterministic(Time::units(period)), ""};
}

}  // namespace cesim::testing
