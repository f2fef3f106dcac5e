#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "relaykit/store.hpp"

namespace relaykit {

struct ServiceConfig {
    std::string bind_address = "0.0.0.0";
    int port = 8080;                        // 0 picks an ephemeral port
    std::string ingest_path = "/main.php";
    std::string fetch_path = "/maina.dat";
    std::string store_file = "maina.dat";
    Persistence persistence = Persistence::FileBacked;

    /// Empty when valid: paths must be non-empty, distinct, and absolute
    /// (leading '/').
    std::string validate() const;
};

/// The web host node: GET {ingest_path}?Editbox1=..&Editbox2=..&Editbox3=..
/// &Button1=Submit overwrites the last-value store; GET {fetch_path} returns
/// the stored bytes verbatim; GET /healthz reports store status.
///
/// Ingest semantics: a request without Button1 is silently ignored (200,
/// nothing written); malformed Editbox fields are rejected with 400; a
/// failed file commit yields 500 with the store unchanged. Non-GET methods
/// on the two paths yield 405.
class TelemetryService {
  public:
    explicit TelemetryService(const ServiceConfig& config);
    ~TelemetryService();

    TelemetryService(const TelemetryService&) = delete;
    TelemetryService& operator=(const TelemetryService&) = delete;

    /// Bind and serve on a background thread. Returns false if the port
    /// cannot be bound.
    bool start();

    /// Ask the listener to exit; safe to call from a signal handler path.
    void request_stop();

    /// Block until the background listener has exited.
    void wait();

    /// request_stop() + wait().
    void stop();

    /// Port actually bound (resolves port 0); -1 before start().
    int port() const;

    const ServiceConfig& config() const;
    const LastValueStore& store() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace relaykit
