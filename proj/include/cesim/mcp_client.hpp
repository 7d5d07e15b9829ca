#pragma once
// MCP client. Agents and tools talk to a gateway exclusively through this
// class; the transport is either a serialized in-process loopback or HTTP.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "cesim/error.hpp"

namespace cesim {

class McpGateway;

class McpTransport {
 public:
  virtual ~McpTransport() = default;
  // Sends one serialized JSON-RPC message, returns the serialized reply.
  virtual std::string exchange(const std::string& request) = 0;
};

// Serializes every message, exactly as a wire transport would.
class LoopbackTransport : public McpTransport {
 public:
  explicit LoopbackTransport(McpGateway& gateway) : gateway_(gateway) {}
  std::string exchange(const std::string& request) override;

 private:
  McpGateway& gateway_;
};

class HttpTransport : public McpTransport {
 public:
  HttpTransport(std::string host, int port);
  ~HttpTransport() override;
  std::string exchange(const std::string& request) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

ErrorCode error_code_from(std::string_view name);

// A tool returned isError; code and message come from the payload.
class McpToolError : public Error {
 public:
  McpToolError(ErrorCode code, const std::string& message, std::uint64_t seq) : Error(code, message), seq_(seq) {}
  std::uint64_t seq() const { return seq_; }

 private:
  std::uint64_t seq_;
};

class McpClient {
 public:
  using json = nlohmann::json;

  McpClient(std::unique_ptr<McpTransport> transport, std::string actor);

  json initialize();
  json list_tools();
  // Returns structuredContent; throws McpToolError when the tool failed and
  // Error(internal) on protocol errors.
  json call(const std::string& tool, const json& arguments = json::object(), std::optional<std::int64_t> window = {});

  const std::string& actor() const { return actor_; }
  std::uint64_t last_seq() const { return last_seq_; }
  std::uint64_t calls() const { return calls_; }

 private:
  json rpc(const std::string& method, json params);

  std::unique_ptr<McpTransport> transport_;
  std::string actor_;
  std::int64_t next_id_ = 1;
  std::uint64_t last_seq_ = 0;
  std::uint64_t calls_ = 0;
};

}  // namespace cesim
