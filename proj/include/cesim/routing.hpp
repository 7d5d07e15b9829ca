#pragma once
// Shortest-path routing over the expanded node graph.
//
// Metric: hop count, then summed edge latency, then the lexicographically
// smallest next node. The all-pairs distance table is the one data-parallel
// kernel in the simulator: each source row is an independent Dijkstra, so the
// OpenMP version splits rows across threads. The serial version is the
// reference the parallel one is tested against.

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "cesim/topology.hpp"

namespace cesim {

struct PathCost {
  std::int32_t hops = std::numeric_limits<std::int32_t>::max();
  Fixed latency;

  bool reachable() const { return hops != std::numeric_limits<std::int32_t>::max(); }
  auto operator<=>(const PathCost&) const = default;
};

// Which nodes and links currently carry traffic. Empty vectors mean "all up".
struct Availability {
  std::vector<bool> node_up;
  std::vector<bool> link_up;

  bool node(NodeIndex i) const { return node_up.empty() || node_up[i]; }
  bool link(LinkIndex i) const { return link_up.empty() || link_up[i]; }
};

class DistanceTable {
 public:
  DistanceTable() = default;
  explicit DistanceTable(std::size_t n) : n_(n), cells_(n * n) {}

  std::size_t size() const { return n_; }
  const PathCost& at(NodeIndex src, NodeIndex dst) const { return cells_[src * n_ + dst]; }
  PathCost& at(NodeIndex src, NodeIndex dst) { return cells_[src * n_ + dst]; }
  bool operator==(const DistanceTable&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<PathCost> cells_;
};

// Single-source row; shared by both table kernels.
void fill_distance_row(const Topology& topo, const Availability& avail, NodeIndex src, DistanceTable& table);

DistanceTable distance_table_serial(const Topology& topo, const Availability& avail = {});
DistanceTable distance_table_parallel(const Topology& topo, const Availability& avail = {});

// Reconstructs the tie-broken path from a filled table. nullopt = no path.
std::optional<std::vector<NodeIndex>> extract_path(const Topology& topo, const Availability& avail,
                                                   const DistanceTable& table, NodeIndex src, NodeIndex dst);

// Convenience for one-off queries on a fully available topology.
std::optional<std::vector<NodeIndex>> shortest_path(const Topology& topo, NodeIndex src, NodeIndex dst);

// Memoizing router owned by a simulation. Invalidated whenever the topology
// revision or availability revision changes.
class RoutingCache {
 public:
  void invalidate() { valid_ = false; }
  // Recomputes the table if stale.
  void refresh(const Topology& topo, const Availability& avail, std::uint64_t availability_revision);

  const DistanceTable& table() const { return table_; }
  PathCost cost(NodeIndex src, NodeIndex dst) const { return table_.at(src, dst); }
  const std::optional<std::vector<NodeIndex>>& path(const Topology& topo, const Availability& avail, NodeIndex src,
                                                    NodeIndex dst);
  std::uint64_t recomputations() const { return recomputations_; }

 private:
  bool valid_ = false;
  std::uint64_t topo_revision_ = 0;
  std::uint64_t avail_revision_ = 0;
  std::size_t node_count_ = 0;
  DistanceTable table_;
  std::map<std::pair<NodeIndex, NodeIndex>, std::optional<std::vector<NodeIndex>>> paths_;
  std::uint64_t recomputations_ = 0;
};

}  // namespace cesim
