#include "cesim/trace.hpp"

#include <openssl/evp.h>

#include <sstream>

#include "cesim/error.hpp"

namespace cesim {

Time RequestTrace::network_time() const {
  Time t;
  for (const auto& h : hops) t += h.duration();
  return t;
}

Time RequestTrace::processing_time() const {
  Time t;
  for (const auto& s : services) t += s.processing();
  return t;
}

Time RequestTrace::waiting_time() const {
  Time t;
  for (const auto& s : services) t += s.waiting();
  return t;
}

void TraceStore::export_lines(std::ostream& out) const {
  for (const auto& r : requests) {
    const char* status = r.completed ? "completed" : r.failed ? "failed" : "in_flight";
    std::string end = r.completed ? r.completed->str() : r.failed ? r.failed->str() : "";
    out << "request\t" << r.id << '\t' << r.app << '\t' << r.user << '\t' << r.origin << '\t' << r.emitted.str() << '\t'
        << status << '\t' << end << '\t' << r.failure_reason << '\t'
        << (r.completed ? r.response_time().str() : "") << '\t' << r.network_time().str() << '\t'
        << r.processing_time().str() << '\t' << r.waiting_time().str() << '\t' << r.hops.size() << '\t'
        << r.distance.str() << '\n';
    for (const auto& h : r.hops) {
      out << "transfer\t" << r.id << '\t' << h.link << '\t' << h.from << '\t' << h.to << '\t' << h.size.str() << '\t'
          << h.start.str() << '\t' << h.serialized.str() << '\t' << h.end.str() << '\n';
    }
    for (const auto& s : r.services) {
      out << "service\t" << r.id << '\t' << s.deployment << '\t' << s.node << '\t' << r.app << '\t' << s.vnf << '\t'
          << s.arrival.str() << '\t' << s.start.str() << '\t' << s.end.str() << '\n';
    }
  }
  for (const auto& p : perturbations) out << "perturbation\t" << p.at.str() << '\t' << p.process << '\t' << p.description << '\n';
}

std::string TraceStore::hash() const {
  std::ostringstream s;
  export_lines(s);
  return sha256_hex(s.str());
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorCode::internal, "sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace cesim
