#include "cesim/routing.hpp"

#include <queue>

#ifdef CESIM_HAVE_OPENMP
#include <omp.h>
#endif

namespace cesim {

void fill_distance_row(const Topology& topo, const Availability& avail, NodeIndex src, DistanceTable& table) {
  const std::size_t n = topo.node_count();
  for (NodeIndex d = 0; d < n; ++d) table.at(src, d) = PathCost{};
  if (!avail.node(src)) return;

  using Item = std::pair<PathCost, NodeIndex>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> frontier;
  std::vector<bool> done(n, false);
  table.at(src, src) = PathCost{0, Fixed{}};
  frontier.push({table.at(src, src), src});
  while (!frontier.empty()) {
    auto [cost, u] = frontier.top();
    frontier.pop();
    if (done[u]) continue;
    done[u] = true;
    for (const Adjacent& adj : topo.adjacent(u)) {
      if (done[adj.node] || !avail.node(adj.node) || !avail.link(adj.link)) continue;
      PathCost next{cost.hops + 1, cost.latency + topo.link(adj.link).latency};
      if (next < table.at(src, adj.node)) {
        table.at(src, adj.node) = next;
        frontier.push({next, adj.node});
      }
    }
  }
}

DistanceTable distance_table_serial(const Topology& topo, const Availability& avail) {
  DistanceTable table(topo.node_count());
  for (NodeIndex s = 0; s < topo.node_count(); ++s) fill_distance_row(topo, avail, s, table);
  return table;
}

DistanceTable distance_table_parallel(const Topology& topo, const Availability& avail) {
  DistanceTable table(topo.node_count());
  const auto n = static_cast<std::int64_t>(topo.node_count());
#ifdef CESIM_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 4)
#endif
  for (std::int64_t s = 0; s < n; ++s) fill_distance_row(topo, avail, static_cast<NodeIndex>(s), table);
  return table;
}

std::optional<std::vector<NodeIndex>> extract_path(const Topology& topo, const Availability& avail,
                                                   const DistanceTable& table, NodeIndex src, NodeIndex dst) {
  if (!table.at(src, dst).reachable()) return std::nullopt;
  std::vector<NodeIndex> path{src};
  NodeIndex u = src;
  while (u != dst) {
    const PathCost& remaining = table.at(dst, u);
    std::optional<NodeIndex> next;
    for (const Adjacent& adj : topo.adjacent(u)) {  // ascending node index == lexicographic id
      if (!avail.node(adj.node) || !avail.link(adj.link)) continue;
      const PathCost& rest = table.at(dst, adj.node);
      if (!rest.reachable()) continue;
      PathCost via{rest.hops + 1, rest.latency + topo.link(adj.link).latency};
      if (via == remaining) {
        next = adj.node;
        break;
      }
    }
    if (!next) return std::nullopt;
    u = *next;
    path.push_back(u);
  }
  return path;
}

std::optional<std::vector<NodeIndex>> shortest_path(const Topology& topo, NodeIndex src, NodeIndex dst) {
  Availability all;
  DistanceTable table(topo.node_count());
  // Only the destination row is needed for reconstruction.
  fill_distance_row(topo, all, dst, table);
  if (!table.at(dst, src).reachable()) return std::nullopt;
  fill_distance_row(topo, all, src, table);
  return extract_path(topo, all, table, src, dst);
}

void RoutingCache::refresh(const Topology& topo, const Availability& avail, std::uint64_t availability_revision) {
  if (valid_ && topo_revision_ == topo.revision() && avail_revision_ == availability_revision &&
      node_count_ == topo.node_count())
    return;
  table_ = distance_table_parallel(topo, avail);
  paths_.clear();
  topo_revision_ = topo.revision();
  avail_revision_ = availability_revision;
  node_count_ = topo.node_count();
  valid_ = true;
  ++recomputations_;
}

const std::optional<std::vector<NodeIndex>>& RoutingCache::path(const Topology& topo, const Availability& avail,
                                                                NodeIndex src, NodeIndex dst) {
  auto key = std::make_pair(src, dst);
  auto it = paths_.find(key);
  if (it == paths_.end()) it = paths_.emplace(key, extract_path(topo, avail, table_, src, dst)).first;
  return it->second;
}

}  // namespace cesim
