#include "cesim/mcp_client.hpp"

#include <httplib.h>

#include "cesim/mcp.hpp"

namespace cesim {

using json = nlohmann::json;

std::string LoopbackTransport::exchange(const std::string& request) { return gateway_.handle_text(request); }

struct HttpTransport::Impl {
  httplib::Client client;
  Impl(const std::string& host, int port) : client(host, port) {}
};

HttpTransport::HttpTransport(std::string host, int port) : impl_(std::make_unique<Impl>(host, port)) {
  impl_->client.set_read_timeout(3600, 0);
  impl_->client.set_keep_alive(true);
}

HttpTransport::~HttpTransport() = default;

std::string HttpTransport::exchange(const std::string& request) {
  auto res = impl_->client.Post("/mcp", request, "application/json");
  if (!res) fail(ErrorCode::internal, "HTTP transport error: " + httplib::to_string(res.error()));
  if (res->status == 202) return {};
  if (res->status != 200) fail(ErrorCode::internal, "HTTP status " + std::to_string(res->status));
  return res->body;
}

ErrorCode error_code_from(std::string_view name) {
  for (ErrorCode c : {ErrorCode::not_found, ErrorCode::invalid_state, ErrorCode::invalid_argument, ErrorCode::capacity,
                      ErrorCode::internal})
    if (to_string(c) == name) return c;
  return ErrorCode::internal;
}

McpClient::McpClient(std::unique_ptr<McpTransport> transport, std::string actor)
    : transport_(std::move(transport)), actor_(std::move(actor)) {}

json McpClient::rpc(const std::string& method, json params) {
  json req = {{"jsonrpc", "2.0"}, {"id", next_id_++}, {"method", method}, {"params", std::move(params)}};
  std::string reply = transport_->exchange(req.dump());
  json res = json::parse(reply);
  if (res.contains("error")) fail(ErrorCode::internal, "JSON-RPC error: " + res.at("error").dump());
  return res.at("result");
}

json McpClient::initialize() {
  json r = rpc("initialize", {{"protocolVersion", kMcpProtocolVersion},
                              {"capabilities", json::object()},
                              {"clientInfo", {{"name", actor_}, {"version", "1.0.0"}}}});
  transport_->exchange(json{{"jsonrpc", "2.0"}, {"method", "notifications/initialized"}}.dump());
  return r;
}

json McpClient::list_tools() { return rpc("tools/list", json::object()).at("tools"); }

json McpClient::call(const std::string& tool, const json& arguments, std::optional<std::int64_t> window) {
  json meta = {{"actor", actor_}};
  if (window) meta["window"] = *window;
  json r = rpc("tools/call", {{"name", tool}, {"arguments", arguments}, {"_meta", std::move(meta)}});
  ++calls_;
  last_seq_ = r.at("_meta").at("audit_seq").get<std::uint64_t>();
  const json& payload = r.at("structuredContent");
  if (r.at("isError").get<bool>()) {
    const json& e = payload.at("error");
    throw McpToolError(error_code_from(e.at("code").get<std::string>()), e.at("message").get<std::string>(), last_seq_);
  }
  return payload;
}

}  // namespace cesim
