#include "cesim/topology.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "cesim/error.hpp"
#include "cesim/json_util.hpp"

namespace cesim {

using nlohmann::json;

std::string global_node_id(const std::string& cluster, const std::string& node_name) {
  std::string prefix = cluster + "-";
  if (node_name.rfind(prefix, 0) == 0) return node_name;
  return prefix + node_name;
}

Topology Topology::build(std::vector<ClusterSpec> clusters, std::vector<LinkSpec> links,
                         IntraClusterSettings intra) {
  if (clusters.empty()) fail(ErrorCode::invalid_argument, "at least one cluster required");

  Topology t;
  std::map<std::string, std::size_t> cluster_index;
  std::set<std::string> global_ids;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const ClusterSpec& cl = clusters[c];
    if (cl.name.empty()) fail(ErrorCode::invalid_argument, "cluster name must not be empty");
    if (cl.region.empty()) fail(ErrorCode::invalid_argument, "cluster '" + cl.name + "' has no region");
    if (!cluster_index.emplace(cl.name, c).second)
      fail(ErrorCode::invalid_argument, "duplicate cluster name '" + cl.name + "'");
    if (cl.nodes.empty()) fail(ErrorCode::invalid_argument, "cluster '" + cl.name + "' has no nodes");
    std::set<std::string> local;
    for (const NodeSpec& n : cl.nodes) {
      if (n.name.empty()) fail(ErrorCode::invalid_argument, "node name must not be empty in cluster '" + cl.name + "'");
      if (!local.insert(n.name).second)
        fail(ErrorCode::invalid_argument, "duplicate node name '" + n.name + "' in cluster '" + cl.name + "'");
      std::string gid = global_node_id(cl.name, n.name);
      if (!global_ids.insert(gid).second) fail(ErrorCode::invalid_argument, "duplicate node name '" + gid + "'");
      if (n.cpu.raw() <= 0) fail(ErrorCode::invalid_argument, "node '" + gid + "': capacity cpu must be > 0");
      if (n.memory_mib.raw() <= 0) fail(ErrorCode::invalid_argument, "node '" + gid + "': capacity memory must be > 0");
      if (n.cost.raw() < 0) fail(ErrorCode::invalid_argument, "node '" + gid + "': cost must be >= 0");
      t.nodes_.push_back(Node{gid, c, n});
    }
  }

  std::set<std::pair<std::string, std::string>> pairs;
  Fixed max_bw;
  for (const LinkSpec& l : links) {
    for (const std::string* end : {&l.a, &l.b}) {
      if (!cluster_index.count(*end)) fail(ErrorCode::invalid_argument, "link references unknown cluster '" + *end + "'");
    }
    if (l.a == l.b) fail(ErrorCode::invalid_argument, "link endpoints must be distinct ('" + l.a + "')");
    auto key = std::minmax(l.a, l.b);
    if (!pairs.emplace(key.first, key.second).second)
      fail(ErrorCode::invalid_argument, "duplicate link between '" + l.a + "' and '" + l.b + "'");
    if (l.bandwidth.raw() <= 0) fail(ErrorCode::invalid_argument, "link " + l.a + "<->" + l.b + ": bandwidth must be > 0");
    if (l.distance_km.raw() < 0) fail(ErrorCode::invalid_argument, "link " + l.a + "<->" + l.b + ": distance must be >= 0");
    if (l.target_latency.raw() < 0)
      fail(ErrorCode::invalid_argument, "link " + l.a + "<->" + l.b + ": target_latency must be >= 0");
    max_bw = std::max(max_bw, l.bandwidth);
  }
  if (intra.latency.raw() < 0) fail(ErrorCode::invalid_argument, "intra-cluster latency must be >= 0");
  Fixed intra_bw = intra.bandwidth.value_or(links.empty() ? Fixed::units(1000) : max_bw * 10);
  if (intra_bw.raw() <= 0) fail(ErrorCode::invalid_argument, "intra-cluster bandwidth must be > 0");

  std::sort(t.nodes_.begin(), t.nodes_.end(), [](const Node& x, const Node& y) { return x.id < y.id; });
  t.adjacency_.assign(t.nodes_.size(), {});

  // Gateway: lexicographically first control-plane node, else first node.
  t.gateways_.assign(clusters.size(), SIZE_MAX);
  for (NodeIndex i = 0; i < t.nodes_.size(); ++i) {
    std::size_t c = t.nodes_[i].cluster;
    bool cp = t.nodes_[i].spec.role == NodeRole::control_plane;
    NodeIndex& g = t.gateways_[c];
    if (g == SIZE_MAX || (cp && t.nodes_[g].spec.role != NodeRole::control_plane)) g = i;
  }

  auto add_link = [&](NodeIndex a, NodeIndex b, Link l) {
    l.a = a;
    l.b = b;
    LinkIndex li = t.links_.size();
    t.link_by_id_.emplace(l.id, li);
    t.links_.push_back(std::move(l));
    t.adjacency_[a].push_back({b, li});
    t.adjacency_[b].push_back({a, li});
    return li;
  };

  std::vector<std::vector<NodeIndex>> members(clusters.size());
  for (NodeIndex i = 0; i < t.nodes_.size(); ++i) members[t.nodes_[i].cluster].push_back(i);
  for (const auto& m : members) {
    for (std::size_t x = 0; x < m.size(); ++x) {
      for (std::size_t y = x + 1; y < m.size(); ++y) {
        Link l;
        l.id = t.nodes_[m[x]].id + "<->" + t.nodes_[m[y]].id;
        l.latency = intra.latency;
        l.bandwidth = intra_bw;
        add_link(m[x], m[y], std::move(l));
      }
    }
  }
  for (const LinkSpec& ls : links) {
    Link l;
    l.id = ls.a + "<->" + ls.b;
    l.distance_km = ls.distance_km;
    l.latency = ls.target_latency;
    l.bandwidth = ls.bandwidth;
    l.inter_cluster = true;
    t.inter_links_.push_back(add_link(t.gateways_[cluster_index[ls.a]], t.gateways_[cluster_index[ls.b]], std::move(l)));
  }
  for (auto& adj : t.adjacency_)
    std::sort(adj.begin(), adj.end(), [](const Adjacent& x, const Adjacent& y) { return x.node < y.node; });

  t.clusters_ = std::move(clusters);
  t.link_specs_ = std::move(links);
  t.intra_ = intra;
  return t;
}

std::vector<std::string> Topology::regions() const {
  std::set<std::string> r;
  for (const auto& c : clusters_) r.insert(c.region);
  return {r.begin(), r.end()};
}

std::optional<NodeIndex> Topology::find_node(std::string_view id) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id, [](const Node& n, std::string_view v) { return n.id < v; });
  if (it == nodes_.end() || it->id != id) return std::nullopt;
  return static_cast<NodeIndex>(it - nodes_.begin());
}

NodeIndex Topology::node_index(std::string_view id) const {
  auto i = find_node(id);
  if (!i) fail(ErrorCode::not_found, "unknown node '" + std::string(id) + "'");
  return *i;
}

std::optional<std::size_t> Topology::find_cluster(std::string_view name) const {
  for (std::size_t c = 0; c < clusters_.size(); ++c)
    if (clusters_[c].name == name) return c;
  return std::nullopt;
}

std::optional<LinkIndex> Topology::find_link(NodeIndex a, NodeIndex b) const {
  const auto& adj = adjacency_[a];
  auto it = std::lower_bound(adj.begin(), adj.end(), b, [](const Adjacent& x, NodeIndex v) { return x.node < v; });
  if (it == adj.end() || it->node != b) return std::nullopt;
  return it->link;
}

std::optional<LinkIndex> Topology::find_link_by_id(std::string_view id) const {
  auto it = link_by_id_.find(id);
  if (it == link_by_id_.end()) return std::nullopt;
  return it->second;
}

Fixed Topology::path_latency(const std::vector<NodeIndex>& path) const {
  Fixed total;
  for (std::size_t i = 1; i < path.size(); ++i) {
    auto l = find_link(path[i - 1], path[i]);
    if (!l) fail(ErrorCode::invalid_argument, "nodes '" + nodes_[path[i - 1]].id + "' and '" + nodes_[path[i]].id + "' are not adjacent");
    total += links_[*l].latency;
  }
  return total;
}

Fixed Topology::path_distance(const std::vector<NodeIndex>& path) const {
  Fixed total;
  for (std::size_t i = 1; i < path.size(); ++i) {
    auto l = find_link(path[i - 1], path[i]);
    if (!l) fail(ErrorCode::invalid_argument, "nodes '" + nodes_[path[i - 1]].id + "' and '" + nodes_[path[i]].id + "' are not adjacent");
    total += links_[*l].distance_km;
  }
  return total;
}

namespace {
Topology rebuilt(const Topology& base, std::vector<ClusterSpec> clusters, std::vector<LinkSpec> links) {
  Topology t = Topology::build(std::move(clusters), std::move(links), base.intra_settings());
  return t;
}
}  // namespace

Topology Topology::with_node_added(const std::string& cluster, const NodeSpec& node) const {
  auto c = find_cluster(cluster);
  if (!c) fail(ErrorCode::not_found, "unknown cluster '" + cluster + "'");
  auto clusters = clusters_;
  clusters[*c].nodes.push_back(node);
  Topology t = rebuilt(*this, std::move(clusters), link_specs_);
  t.revision_ = revision_ + 1;
  return t;
}

Topology Topology::with_node_removed(const std::string& node_id) const {
  NodeIndex i = node_index(node_id);
  auto clusters = clusters_;
  auto& nodes = clusters[nodes_[i].cluster].nodes;
  if (nodes.size() == 1)
    fail(ErrorCode::invalid_argument, "cannot remove the last node of cluster '" + clusters[nodes_[i].cluster].name + "'");
  nodes.erase(std::find_if(nodes.begin(), nodes.end(), [&](const NodeSpec& n) {
    return global_node_id(clusters[nodes_[i].cluster].name, n.name) == node_id;
  }));
  Topology t = rebuilt(*this, std::move(clusters), link_specs_);
  t.revision_ = revision_ + 1;
  return t;
}

Topology Topology::with_cluster_added(const ClusterSpec& cluster, const std::vector<LinkSpec>& links) const {
  auto clusters = clusters_;
  clusters.push_back(cluster);
  auto all_links = link_specs_;
  all_links.insert(all_links.end(), links.begin(), links.end());
  Topology t = rebuilt(*this, std::move(clusters), std::move(all_links));
  t.revision_ = revision_ + 1;
  return t;
}

Topology Topology::with_cluster_removed(const std::string& cluster) const {
  auto c = find_cluster(cluster);
  if (!c) fail(ErrorCode::not_found, "unknown cluster '" + cluster + "'");
  auto clusters = clusters_;
  clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(*c));
  std::vector<LinkSpec> links;
  for (const auto& l : link_specs_)
    if (l.a != cluster && l.b != cluster) links.push_back(l);
  Topology t = rebuilt(*this, std::move(clusters), std::move(links));
  t.revision_ = revision_ + 1;
  return t;
}

Topology Topology::with_link_changed(const std::string& a, const std::string& b, const LinkChange& change) const {
  auto links = link_specs_;
  auto it = std::find_if(links.begin(), links.end(),
                         [&](const LinkSpec& l) { return (l.a == a && l.b == b) || (l.a == b && l.b == a); });
  if (it == links.end()) fail(ErrorCode::not_found, "no link between '" + a + "' and '" + b + "'");
  if (change.bandwidth && change.bandwidth->raw() <= 0) fail(ErrorCode::invalid_argument, "bandwidth must be > 0");
  if (change.distance_km) it->distance_km = *change.distance_km;
  if (change.target_latency) it->target_latency = *change.target_latency;
  if (change.bandwidth) it->bandwidth = *change.bandwidth;
  Topology t = rebuilt(*this, clusters_, std::move(links));
  t.revision_ = revision_ + 1;
  return t;
}

// ---------------------------------------------------------------------------
// JSON

Fixed parse_memory(const json& v, const std::string& path) {
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    auto ends_with = [&](const char* suf) {
      std::string_view sv(s), x(suf);
      return sv.size() > x.size() && sv.substr(sv.size() - x.size()) == x;
    };
    try {
      if (ends_with("Gi")) return Fixed::parse(s.substr(0, s.size() - 2)) * 1024;
      if (ends_with("Mi")) return Fixed::parse(s.substr(0, s.size() - 2));
      if (ends_with("m")) {
        Fixed thousandths = Fixed::parse(s.substr(0, s.size() - 1));
        if (thousandths.raw() % Fixed::kScale != 0)
          jsonu::schema_error(path, "milli-suffixed quantity must be an integer");
        return Fixed::from_raw(thousandths.raw() / Fixed::kScale);
      }
    } catch (const Error& e) {
      jsonu::schema_error(path, e.what());
    }
  }
  return jsonu::to_fixed(v, path);
}

std::string format_memory(Fixed mib) { return std::to_string(mib.raw()) + "m"; }

namespace {
std::string format_cpu(Fixed cpu) {
  std::string s = cpu.str();
  if (s.find('.') == std::string::npos) s += ".0";
  return s;
}
}  // namespace

NodeSpec load_node_spec(const json& doc, const std::string& np) {
  using namespace jsonu;
  NodeSpec ns;
  ns.name = get_string(doc, "name", np);
  std::string role = get_string_or(doc, "role", np, "worker");
  if (role == "control-plane") ns.role = NodeRole::control_plane;
  else if (role == "worker") ns.role = NodeRole::worker;
  else schema_error(np + ".role", "expected 'control-plane' or 'worker'");
  const json& cap = member(doc, "capacity", np);
  ns.cpu = get_fixed(cap, "cpu", np + ".capacity");
  ns.memory_mib = parse_memory(member(cap, "memory", np + ".capacity"), np + ".capacity.memory");
  ns.cost = get_fixed_opt(doc, "cost", np).value_or(Fixed{});
  return ns;
}

ClusterSpec load_cluster_spec(const json& doc, const std::string& p) {
  using namespace jsonu;
  ClusterSpec spec;
  spec.name = get_string(doc, "name", p);
  spec.role = get_string_or(doc, "role", p, "");
  spec.region = get_string(doc, "region", p);
  const json& nodes = get_array(doc, "nodes", p);
  for (std::size_t n = 0; n < nodes.size(); ++n)
    spec.nodes.push_back(load_node_spec(nodes[n], p + ".nodes[" + std::to_string(n) + "]"));
  return spec;
}

LinkSpec load_link_spec(const json& doc, const std::string& p) {
  using namespace jsonu;
  const json& ends = get_array(doc, "endpoints", p);
  if (ends.size() != 2 || !ends[0].is_string() || !ends[1].is_string())
    schema_error(p + ".endpoints", "expected two cluster names");
  LinkSpec l;
  l.a = ends[0].get<std::string>();
  l.b = ends[1].get<std::string>();
  l.distance_km = get_fixed_opt(doc, "distance_km", p).value_or(Fixed{});
  l.target_latency = get_fixed(doc, "target_latency", p);
  l.bandwidth = get_fixed(doc, "bandwidth", p);
  return l;
}

Topology load_topology(const json& doc) {
  using namespace jsonu;
  if (!doc.is_object()) schema_error("$", "topology document must be an object");
  if (!doc.contains("clusters")) schema_error("$.clusters", "required field missing");
  const json& cl = get_array(doc, "clusters", "$");
  if (cl.empty()) fail(ErrorCode::invalid_argument, "at least one cluster required");
  std::vector<ClusterSpec> clusters;
  for (std::size_t c = 0; c < cl.size(); ++c) clusters.push_back(load_cluster_spec(cl[c], "$.clusters[" + std::to_string(c) + "]"));
  std::vector<LinkSpec> links;
  if (doc.contains("links")) {
    const json& ls = get_array(doc, "links", "$");
    for (std::size_t i = 0; i < ls.size(); ++i) links.push_back(load_link_spec(ls[i], "$.links[" + std::to_string(i) + "]"));
  }
  IntraClusterSettings intra;
  if (doc.contains("intra_cluster")) {
    const json& ic = doc.at("intra_cluster");
    if (auto lat = get_fixed_opt(ic, "latency", "$.intra_cluster")) intra.latency = *lat;
    intra.bandwidth = get_fixed_opt(ic, "bandwidth", "$.intra_cluster");
  }
  return Topology::build(std::move(clusters), std::move(links), intra);
}

json topology_to_json(const Topology& topo) {
  json clusters = json::array();
  for (const auto& c : topo.clusters()) {
    json nodes = json::array();
    for (const auto& n : c.nodes) {
      nodes.push_back({{"name", n.name},
                       {"role", n.role == NodeRole::control_plane ? "control-plane" : "worker"},
                       {"capacity", {{"cpu", format_cpu(n.cpu)}, {"memory", format_memory(n.memory_mib)}}},
                       {"cost", jsonu::fixed_json(n.cost)}});
    }
    clusters.push_back({{"name", c.name}, {"role", c.role}, {"region", c.region}, {"nodes", std::move(nodes)}});
  }
  json links = json::array();
  for (const auto& l : topo.link_specs()) {
    links.push_back({{"endpoints", {l.a, l.b}},
                     {"distance_km", jsonu::fixed_json(l.distance_km)},
                     {"target_latency", jsonu::fixed_json(l.target_latency)},
                     {"bandwidth", jsonu::fixed_json(l.bandwidth)}});
  }
  json doc = {{"clusters", std::move(clusters)}, {"links", std::move(links)}};
  json intra = {{"latency", jsonu::fixed_json(topo.intra_settings().latency)}};
  if (topo.intra_settings().bandwidth) intra["bandwidth"] = jsonu::fixed_json(*topo.intra_settings().bandwidth);
  doc["intra_cluster"] = std::move(intra);
  return doc;
}

}  // namespace cesim
