#pragma once
// MCP tool gateway over the simulation service.
//
// JSON-RPC 2.0 methods: initialize, notifications/initialized, ping,
// tools/list, tools/call. A tool result carries the service payload
// verbatim in `structuredContent` (and serialized in a text content block);
// failures set `isError` and carry {"error": {"code", "message"}} with a
// code from the ErrorCode taxonomy. Every tools/call appends exactly one
// audit record whose sequence number is returned in `_meta.audit_seq`.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cesim/service.hpp"

namespace httplib {
class Server;
}

namespace cesim {

inline constexpr const char* kMcpProtocolVersion = "2025-03-26";
inline constexpr std::size_t kAuditSummaryLimit = 1024;

struct ToolDescriptor {
  std::string name;
  std::string description;
  nlohmann::json input_schema;
  nlohmann::json output_schema;
};

struct ToolCallRecord {
  std::uint64_t seq = 0;
  std::string actor;
  std::string simulation_id;  // empty when the call names none
  std::optional<std::int64_t> window;
  std::string tool;
  std::string input_summary;  // first 1 KiB of the serialized arguments
  std::string input_sha256;
  std::string output_summary;
  std::string output_sha256;
  std::string status;      // "ok" | "error"
  std::string error_code;  // empty on success
  double wall_ms = 0.0;
};
nlohmann::json to_json(const ToolCallRecord& r);

struct AuditFilter {
  std::optional<std::string> actor;
  std::optional<std::string> simulation_id;
  std::optional<std::string> tool;
  std::optional<std::uint64_t> since_seq;  // inclusive
};

struct GatewayConfig {
  std::filesystem::path scenario_root = ".";  // base for relative scenario_dir arguments
  std::optional<std::filesystem::path> audit_path;  // line-delimited write-through
  std::string server_name = "cesim";
};

class McpGateway {
 public:
  using json = nlohmann::json;

  explicit McpGateway(SimulationService& service, GatewayConfig config = {});
  ~McpGateway();

  // Sorted by name.
  const std::vector<ToolDescriptor>& tools() const { return catalog_; }

  struct CallOutcome {
    bool ok = false;
    json payload;  // service payload, or {"error": {...}}
    std::uint64_t seq = 0;
  };
  CallOutcome call_tool(const std::string& actor, const std::string& name, const json& arguments,
                        std::optional<std::int64_t> window = {});

  // One JSON-RPC message (object or batch). nullopt for notifications.
  std::optional<json> handle(const json& message, const std::string& default_actor = {});
  // Serialized form; parse failures answer with error -32700. Empty string
  // when there is nothing to send back.
  std::string handle_text(const std::string& body, const std::string& default_actor = {});
  // Line-delimited JSON-RPC until EOF.
  void serve_stdio(std::istream& in, std::ostream& out);

  std::vector<ToolCallRecord> audit_log(const AuditFilter& filter = {}) const;
  std::size_t audit_size() const;

  SimulationService& service() { return service_; }

 private:
  using Handler = std::function<json(const json& args)>;
  void add_tool(ToolDescriptor d, Handler h);
  void build_catalog();
  json rpc_result(const json& id, json result) const;
  json rpc_error(const json& id, int code, const std::string& message) const;
  json dispatch(const json& msg, const std::string& default_actor, bool& respond);

  SimulationService& service_;
  GatewayConfig config_;
  std::map<std::string, std::pair<ToolDescriptor, Handler>> handlers_;
  std::vector<ToolDescriptor> catalog_;

  mutable std::mutex audit_mutex_;
  std::vector<ToolCallRecord> audit_;
  std::uint64_t next_seq_ = 1;
  std::ofstream audit_file_;

  std::mutex session_mutex_;
  std::string session_actor_;
};

// HTTP transport: POST /mcp with a JSON-RPC body.
class HttpMcpServer {
 public:
  explicit HttpMcpServer(McpGateway& gateway);
  ~HttpMcpServer();
  // Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();
  int port() const { return port_; }

 private:
  McpGateway& gateway_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace cesim
