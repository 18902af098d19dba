#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tracer/proxy/certificate_authority.hpp"
#include "tracer/util/json.hpp"
#include "tracer/warc/writer.hpp"

namespace tracer::proxy {

class BindError : public Error {
  public:
    using Error::Error;
};

enum class Disposition { recorded, duplicate_skipped, connect_tunnel, error };

std::string_view to_string(Disposition d);

struct ExchangeSummary {
    std::string target_uri;
    std::string method;
    int status = 0;
    std::string payload_digest;
    std::uint64_t bytes = 0;
    std::string started;
    std::string finished;
    std::int64_t duration_ms = 0;
    Disposition disposition = Disposition::error;
    std::string error;

    Json to_json() const;
};

struct CaptureLog {
    std::optional<std::filesystem::path> warc_path;
    // Record id of the leading warcinfo record; unset in discard mode.
    std::optional<std::string> warcinfo_id;
    std::vector<ExchangeSummary> exchanges;

    std::size_t count(Disposition d) const;
    Json to_json() const;
};

struct IdleState {
    bool idle = false;
    int in_flight = 0;
    // Milliseconds since the last request start or response completion.
    std::int64_t since_ms = 0;
};

struct ProxyConfig {
    std::string host = "127.0.0.1";
    int port = 0;
    // No output path means discard mode: traffic is relayed and tracked for
    // idleness but nothing is archived.
    std::optional<std::filesystem::path> warc_output_path;
    warc::Compression compression = warc::Compression::gzip_per_record;
    // Generated when unset.
    std::optional<CertificateAuthority> ca;
    // Written as PEM (certificate only) after startup when set.
    std::optional<std::filesystem::path> ca_out;
    bool verify_upstream = false;
    std::optional<std::string> upstream_ca_file;
    std::size_t spill_threshold = 8u << 20;
    std::chrono::milliseconds drain_timeout{30000};
    std::chrono::milliseconds io_timeout{60000};
    std::string software = "tracer-capture-proxy/1.0";
};

// Forward HTTP/1.1 proxy with CONNECT interception that archives every
// exchange. Exchanges run on their own threads; the WARC writer is shared
// behind a lock.
class CaptureProxy {
  public:
    // Throws BindError, CaError or IoError.
    static std::unique_ptr<CaptureProxy> start(ProxyConfig config);
    ~CaptureProxy();
    CaptureProxy(const CaptureProxy&) = delete;
    CaptureProxy& operator=(const CaptureProxy&) = delete;

    int port() const;
    std::string endpoint() const;
    std::string ca_certificate_pem() const;
    const CertificateAuthority& ca() const;

    IdleState idle_state(int quiet_ms) const;
    // Same as above evaluated at an explicit monotonic_ms() reading.
    IdleState idle_state(int quiet_ms, std::int64_t now_ms) const;
    int in_flight() const;
    std::int64_t last_activity_ms() const;

    std::vector<ExchangeSummary> capture_log() const;

    // Closes the listener, drains open exchanges (bounded by the drain
    // timeout), finalizes the WARC. Idempotent.
    CaptureLog stop();

    // Process-wide count of running proxies and its high-water mark.
    static int live_count();
    static int peak_live_count();
    static void reset_peak_live_count();

    struct Impl;

  private:
    explicit CaptureProxy(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

} // namespace tracer::proxy
