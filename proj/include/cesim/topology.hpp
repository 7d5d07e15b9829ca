#pragma once
// Infrastructure graph: regions contain clusters, clusters contain nodes,
// links join clusters. A validated Topology is an immutable value; every
// mutation returns a new value with a bumped revision, which is what routing
// caches key on.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cesim/fixed.hpp"

namespace cesim {

enum class NodeRole { control_plane, worker };

struct NodeSpec {
  std::string name;
  NodeRole role = NodeRole::worker;
  Fixed cpu;
  Fixed memory_mib;
  Fixed cost;
};

struct ClusterSpec {
  std::string name;
  std::string role;  // free-form label (CDC, EDC, MEC, ...), never interpreted
  std::string region;
  std::vector<NodeSpec> nodes;
};

struct LinkSpec {
  std::string a;
  std::string b;
  Fixed distance_km;
  Fixed target_latency;
  Fixed bandwidth;
};

// Attributes of the implicit complete graph inside each cluster.
struct IntraClusterSettings {
  Fixed latency = Fixed::units(1);
  // Defaults to 10x the largest inter-cluster bandwidth (or 1000 when there
  // are no links).
  std::optional<Fixed> bandwidth;
};

using NodeIndex = std::size_t;
using LinkIndex = std::size_t;

struct Node {
  std::string id;  // globally unique "<cluster>-<name>"
  std::size_t cluster = 0;
  NodeSpec spec;
};

// An edge of the expanded node-level graph. Inter-cluster links connect the
// two clusters' gateway (control-plane) nodes.
struct Link {
  std::string id;
  NodeIndex a = 0;
  NodeIndex b = 0;
  Fixed distance_km;
  Fixed latency;
  Fixed bandwidth;
  bool inter_cluster = false;
};

struct Adjacent {
  NodeIndex node;
  LinkIndex link;
};

class Topology {
 public:
  Topology() = default;

  // Validates and expands. Throws Error(invalid_argument) on any violation.
  static Topology build(std::vector<ClusterSpec> clusters, std::vector<LinkSpec> links,
                        IntraClusterSettings intra = {});

  const std::vector<ClusterSpec>& clusters() const { return clusters_; }
  const std::vector<LinkSpec>& link_specs() const { return link_specs_; }
  const IntraClusterSettings& intra_settings() const { return intra_; }
  std::vector<std::string> regions() const;
  std::uint64_t revision() const { return revision_; }

  std::size_t node_count() const { return nodes_.size(); }
  const Node& node(NodeIndex i) const { return nodes_[i]; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::optional<NodeIndex> find_node(std::string_view id) const;
  NodeIndex node_index(std::string_view id) const;  // throws not_found
  std::optional<std::size_t> find_cluster(std::string_view name) const;
  const ClusterSpec& cluster_of(NodeIndex i) const { return clusters_[nodes_[i].cluster]; }
  const std::string& region_of(NodeIndex i) const { return clusters_[nodes_[i].cluster].region; }
  NodeIndex gateway(std::size_t cluster) const { return gateways_[cluster]; }

  const std::vector<Link>& links() const { return links_; }
  const Link& link(LinkIndex i) const { return links_[i]; }
  std::optional<LinkIndex> find_link(NodeIndex a, NodeIndex b) const;
  std::optional<LinkIndex> find_link_by_id(std::string_view id) const;
  const std::vector<Adjacent>& adjacent(NodeIndex i) const { return adjacency_[i]; }
  // Index into links() of the expanded edge for link_specs()[i].
  LinkIndex inter_link(std::size_t spec_index) const { return inter_links_[spec_index]; }

  // Sum of per-edge latencies; throws invalid_argument on non-adjacent hops.
  Fixed path_latency(const std::vector<NodeIndex>& path) const;
  Fixed path_distance(const std::vector<NodeIndex>& path) const;

  // Mutations (each returns a fresh, revalidated value).
  Topology with_node_added(const std::string& cluster, const NodeSpec& node) const;
  Topology with_node_removed(const std::string& node_id) const;
  Topology with_cluster_added(const ClusterSpec& cluster, const std::vector<LinkSpec>& links) const;
  Topology with_cluster_removed(const std::string& cluster) const;
  struct LinkChange {
    std::optional<Fixed> distance_km;
    std::optional<Fixed> target_latency;
    std::optional<Fixed> bandwidth;
  };
  Topology with_link_changed(const std::string& a, const std::string& b, const LinkChange& change) const;

 private:
  std::vector<ClusterSpec> clusters_;
  std::vector<LinkSpec> link_specs_;
  IntraClusterSettings intra_;
  std::uint64_t revision_ = 0;

  std::vector<Node> nodes_;  // sorted by id
  std::vector<NodeIndex> gateways_;
  std::vector<Link> links_;
  std::vector<LinkIndex> inter_links_;
  std::map<std::string, LinkIndex, std::less<>> link_by_id_;
  std::vector<std::vector<Adjacent>> adjacency_;  // sorted by neighbour index
};

std::string global_node_id(const std::string& cluster, const std::string& node_name);

// Cluster and link JSON documents ("clusters"/"links").
Topology load_topology(const nlohmann::json& doc);
// Single elements of a topology document; `path` prefixes schema errors.
NodeSpec load_node_spec(const nlohmann::json& doc, const std::string& path);
ClusterSpec load_cluster_spec(const nlohmann::json& doc, const std::string& path);
LinkSpec load_link_spec(const nlohmann::json& doc, const std::string& path);
nlohmann::json topology_to_json(const Topology& topo);

// Memory quantities: "100000m" (thousandths), "512Mi", "2Gi", or a plain
// number of mebibytes.
Fixed parse_memory(const nlohmann::json& v, const std::string& path);
std::string format_memory(Fixed mib);

}  // namespace cesim
