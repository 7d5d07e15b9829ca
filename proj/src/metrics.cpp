#include "cesim/metrics.hpp"

#include <algorithm>
#include <sstream>

#include "cesim/error.hpp"
#include "cesim/scoring.hpp"

namespace cesim {

using nlohmann::json;

void Window::validate() const {
  if (!(start < end)) fail(ErrorCode::invalid_argument, "window end must exceed start ([" + start.str() + ", " + end.str() + "))");
}

std::optional<Time> percentile_nearest_rank(std::vector<Time> samples, int pct) {
  if (samples.empty()) return std::nullopt;
  if (pct <= 0 || pct > 100) fail(ErrorCode::invalid_argument, "percentile must lie in (0, 100]");
  std::sort(samples.begin(), samples.end());
  auto n = static_cast<std::int64_t>(samples.size());
  std::int64_t rank = (pct * n + 99) / 100;  // ceil(pct * n / 100)
  return samples[static_cast<std::size_t>(rank - 1)];
}

namespace {

std::vector<const RequestTrace*> completed_in(const TraceStore& traces, const std::string& app, const Window& w) {
  std::vector<const RequestTrace*> out;
  for (const auto& r : traces.requests)
    if (r.app == app && r.completed && w.contains(*r.completed)) out.push_back(&r);
  return out;
}

std::int64_t emitted_in(const TraceStore& traces, const std::string& app, const Window& w) {
  std::int64_t n = 0;
  for (const auto& r : traces.requests)
    if (r.app == app && w.contains(r.emitted)) ++n;
  return n;
}

Ratio mean_of(const std::vector<const RequestTrace*>& rs, Time (RequestTrace::*f)() const) {
  __int128 sum = 0;
  for (auto* r : rs) sum += (r->*f)().raw();
  return make_ratio(sum, static_cast<__int128>(rs.size()) * Fixed::kScale);
}

}  // namespace

std::optional<Time> response_p95(const TraceStore& traces, const std::string& app, const Window& w) {
  w.validate();
  std::vector<Time> samples;
  for (auto* r : completed_in(traces, app, w)) samples.push_back(r->response_time());
  return percentile_nearest_rank(std::move(samples), 95);
}

std::int64_t unsuccessful_requests(const TraceStore& traces, const std::string& app, const Window& w) {
  w.validate();
  std::int64_t total = emitted_in(traces, app, w);
  auto ok = static_cast<std::int64_t>(completed_in(traces, app, w).size());
  return std::max<std::int64_t>(total - ok, 0);
}

Ratio node_utilization(const TraceStore& traces, const std::string& node, const Window& w) {
  w.validate();
  __int128 busy = 0;
  for (const auto& r : traces.requests)
    for (const auto& s : r.services)
      if (s.finished && s.node == node && w.contains(s.end)) busy += s.processing().raw();
  return make_ratio(busy, w.length().raw());
}

Ratio link_utilization(const TraceStore& traces, const std::string& link, Fixed bandwidth, const Window& w) {
  w.validate();
  if (bandwidth.raw() <= 0) fail(ErrorCode::invalid_argument, "bandwidth must be > 0");
  __int128 bytes = 0;
  for (const auto& r : traces.requests)
    for (const auto& h : r.hops)
      if (h.link == link && w.contains(h.end)) bytes += h.size.raw();
  // (bytes / |W|) / bandwidth, all three in thousandths.
  return make_ratio(bytes * Fixed::kScale, static_cast<__int128>(w.length().raw()) * bandwidth.raw());
}

Fixed placement_cost(const Engine& engine, const std::string& app) {
  Fixed total;
  const Topology& t = engine.topology();
  for (const Deployment* d : engine.active_deployments()) {
    if (!app.empty() && d->app != app) continue;
    total += t.node(t.node_index(d->node)).spec.cost;
  }
  return total;
}

AppMetrics app_metrics_summary(const TraceStore& traces, const std::string& app, const Window& w) {
  w.validate();
  AppMetrics m;
  m.app = app;
  auto ok = completed_in(traces, app, w);
  m.requests_total = emitted_in(traces, app, w);
  m.requests_successful = static_cast<std::int64_t>(ok.size());
  m.requests_unsuccessful = std::max<std::int64_t>(m.requests_total - m.requests_successful, 0);
  if (ok.empty()) return m;
  std::vector<Time> rt;
  __int128 hops = 0, km = 0;
  for (auto* r : ok) {
    rt.push_back(r->response_time());
    hops += static_cast<__int128>(r->hops.size());
    km += r->distance.raw();
  }
  m.response_mean = mean_of(ok, &RequestTrace::response_time);
  m.response_p50 = percentile_nearest_rank(rt, 50);
  m.response_p95 = percentile_nearest_rank(rt, 95);
  m.response_max = *std::max_element(rt.begin(), rt.end());
  m.network_mean = mean_of(ok, &RequestTrace::network_time);
  m.processing_mean = mean_of(ok, &RequestTrace::processing_time);
  m.waiting_mean = mean_of(ok, &RequestTrace::waiting_time);
  m.hops_mean = make_ratio(hops, static_cast<__int128>(ok.size()));
  m.distance_mean = make_ratio(km, static_cast<__int128>(ok.size()) * Fixed::kScale);
  return m;
}

std::map<std::pair<std::string, std::string>, Ratio> egress_cost(const TraceStore& traces, const Window& w,
                                                                 const RegionRates& rates) {
  w.validate();
  std::map<std::pair<std::string, std::string>, __int128> volume;
  for (const auto& r : traces.requests)
    for (const auto& h : r.hops)
      if (h.crosses_region && w.contains(h.end)) volume[{h.from_region, h.to_region}] += h.size.raw();
  std::map<std::pair<std::string, std::string>, Ratio> out;
  for (const auto& [pair, v] : volume) {
    auto it = rates.find(pair);
    std::int64_t rate = it == rates.end() ? 0 : it->second.raw();
    out[pair] = make_ratio(v * rate, static_cast<__int128>(Fixed::kScale) * Fixed::kScale);
  }
  return out;
}

CostMetrics cost_metrics(const Engine& engine, const Window& w, const RegionRates& egress_rates,
                         const RegionRates& ingress_rates) {
  CostMetrics c;
  for (const auto& a : engine.applications()) c.placement[a.name] = placement_cost(engine, a.name);
  c.total_placement = placement_cost(engine);
  c.egress = egress_cost(engine.traces(), w, egress_rates);
  // Ingress is charged to the receiving side with its own table; keyed the
  // same way (source region, destination region).
  c.ingress = egress_cost(engine.traces(), w, ingress_rates);
  return c;
}

InfraMetrics infra_metrics(const Engine& engine, const Window& w, Ratio node_threshold, Ratio link_threshold) {
  w.validate();
  const Topology& t = engine.topology();
  const TraceStore& traces = engine.traces();
  InfraMetrics m;

  // One pass over the traces, then divide.
  std::map<std::string, __int128> busy;
  std::map<std::string, __int128> bytes;
  for (const auto& r : traces.requests) {
    for (const auto& s : r.services)
      if (s.finished && w.contains(s.end)) busy[s.node] += s.processing().raw();
    for (const auto& h : r.hops)
      if (w.contains(h.end)) bytes[h.link] += h.size.raw();
  }
  std::map<std::string, std::pair<Ratio, std::int64_t>> per_cluster;
  for (const auto& n : t.nodes()) {
    Ratio u = make_ratio(busy[n.id], w.length().raw());
    m.node_utilization[n.id] = u;
    auto& [sum, count] = per_cluster[t.clusters()[n.cluster].name];
    sum += u;
    ++count;
    if (u > node_threshold) m.overloaded_nodes.push_back(n.id);
  }
  for (const auto& [name, acc] : per_cluster) m.cluster_utilization[name] = acc.first / acc.second;
  for (const auto& [id, u] : engine.users())
    if (u.active) ++m.users_per_node[u.spec.node];
  for (const auto& l : t.links()) {
    if (!l.inter_cluster) continue;
    Ratio u = make_ratio(bytes[l.id] * Fixed::kScale, static_cast<__int128>(w.length().raw()) * l.bandwidth.raw());
    m.link_utilization[l.id] = u;
    if (u > link_threshold) m.congested_links.push_back(l.id);
  }
  return m;
}

std::string format_decimal(const Ratio& r, int digits) {
  __int128 scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  __int128 num = static_cast<__int128>(r.numerator()) * scale;
  __int128 den = r.denominator();
  bool neg = num < 0;
  if (neg) num = -num;
  __int128 q = (2 * num + den) / (2 * den);  // half away from zero
  auto whole = static_cast<std::int64_t>(q / scale);
  auto frac = static_cast<std::int64_t>(q % scale);
  std::string s = (neg && q != 0 ? "-" : "") + std::to_string(whole);
  if (digits > 0) {
    std::string f = std::to_string(frac);
    s += "." + std::string(static_cast<std::size_t>(digits) - f.size(), '0') + f;
  }
  return s;
}

namespace {

std::string or_na(const std::optional<Ratio>& r, int digits = 2) { return r ? format_decimal(*r, digits) : "n/a"; }
std::string or_na(const std::optional<Time>& t) { return t ? format_decimal(t->to_ratio(), 2) : "n/a"; }

json exact(const std::optional<Ratio>& r) { return r ? json(format_ratio(*r)) : json(nullptr); }
json approx(const std::optional<Ratio>& r) { return r ? json(to_double(*r)) : json(nullptr); }
json approx(const std::optional<Time>& t) { return t ? json(t->to_double()) : json(nullptr); }

}  // namespace

std::string format_app_metrics_text(const AppMetrics& m) {
  std::ostringstream o;
  o << "- Requests: " << m.requests_total << " (successful: " << m.requests_successful
    << " / failed: " << m.requests_unsuccessful << ")\n";
  o << "- response_mean: " << or_na(m.response_mean) << '\n';
  o << "- response_p50: " << or_na(m.response_p50) << '\n';
  o << "- response_p95: " << or_na(m.response_p95) << '\n';
  o << "- response_max: " << or_na(m.response_max) << '\n';
  o << "- processing_mean: " << or_na(m.processing_mean) << '\n';
  o << "- waiting_mean: " << or_na(m.waiting_mean, 1) << '\n';
  return o.str();
}

json app_metrics_to_json(const AppMetrics& m) {
  return {{"app", m.app},
          {"requests", m.requests_total},
          {"successful", m.requests_successful},
          {"failed", m.requests_unsuccessful},
          {"response_mean", approx(m.response_mean)},
          {"response_p50", approx(m.response_p50)},
          {"response_p95", approx(m.response_p95)},
          {"response_max", approx(m.response_max)},
          {"network_mean", approx(m.network_mean)},
          {"processing_mean", approx(m.processing_mean)},
          {"waiting_mean", approx(m.waiting_mean)},
          {"hops_mean", approx(m.hops_mean)},
          {"distance_mean", approx(m.distance_mean)},
          {"exact",
           {{"response_mean", exact(m.response_mean)},
            {"response_p50", m.response_p50 ? json(m.response_p50->str()) : json(nullptr)},
            {"response_p95", m.response_p95 ? json(m.response_p95->str()) : json(nullptr)},
            {"response_max", m.response_max ? json(m.response_max->str()) : json(nullptr)},
            {"network_mean", exact(m.network_mean)},
            {"processing_mean", exact(m.processing_mean)},
            {"waiting_mean", exact(m.waiting_mean)},
            {"hops_mean", exact(m.hops_mean)},
            {"distance_mean", exact(m.distance_mean)}}}};
}

json infra_metrics_to_json(const InfraMetrics& m) {
  auto ratios = [](const std::map<std::string, Ratio>& src) {
    json out = json::object();
    for (const auto& [k, v] : src) out[k] = {{"utilization", to_double(v)}, {"utilization_exact", format_ratio(v)}};
    return out;
  };
  json users = json::object();
  for (const auto& [k, v] : m.users_per_node) users[k] = v;
  return {{"nodes", ratios(m.node_utilization)},
          {"clusters", ratios(m.cluster_utilization)},
          {"links", ratios(m.link_utilization)},
          {"users_per_node", std::move(users)},
          {"congested_links", m.congested_links},
          {"overloaded_nodes", m.overloaded_nodes}};
}

std::vector<MetricRecord> metric_records(const std::string& simulation, const Window& w, const AppMetrics& m) {
  std::vector<MetricRecord> out;
  auto add = [&](const std::string& metric, const std::string& value) {
    out.push_back({simulation, w, metric, m.app, value});
  };
  auto opt = [](const auto& v) -> std::string {
    if (!v) return "";
    if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, Time>) return v->str();
    else return format_decimal(*v, 3);
  };
  add("requests", std::to_string(m.requests_total));
  add("successful", std::to_string(m.requests_successful));
  add("failed", std::to_string(m.requests_unsuccessful));
  add("response_mean", opt(m.response_mean));
  add("response_p50", opt(m.response_p50));
  add("response_p95", opt(m.response_p95));
  add("response_max", opt(m.response_max));
  add("network_mean", opt(m.network_mean));
  add("processing_mean", opt(m.processing_mean));
  add("waiting_mean", opt(m.waiting_mean));
  add("hops_mean", opt(m.hops_mean));
  add("distance_mean", opt(m.distance_mean));
  return out;
}

std::string metric_records_csv(const std::vector<MetricRecord>& records) {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  std::ostringstream o;
  o << "simulation,window_start,window_end,metric,key,value\n";
  for (const auto& r : records)
    o << quote(r.simulation) << ',' << r.window.start.str() << ',' << r.window.end.str() << ',' << quote(r.metric) << ','
      << quote(r.key) << ',' << quote(r.value) << '\n';
  return o.str();
}

}  // namespace cesim
