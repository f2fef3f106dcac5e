#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "relaykit/codec.hpp"
#include "relaykit/trace.hpp"

namespace relaykit {

enum class ChannelMode {
    Synchronous,   // next request cannot start until the previous completes
    Asynchronous,  // a request starts at every tick, overlap permitted
};

std::string_view to_string(ChannelMode m);

struct RelayConfig {
    std::string endpoint = "http://127.0.0.1:8080";
    std::string ingest_path = "/main.php";
    std::uint64_t interval_ms = 350;
    ChannelMode mode = ChannelMode::Synchronous;

    /// Run length: grid ticks to cover. If zero, derived from duration_ms.
    std::uint64_t tick_limit = 0;
    std::uint64_t duration_ms = 0;

    /// Asynchronous in-flight cap; 0 = unbounded (the failure regime).
    std::uint64_t max_inflight = 0;

    std::uint64_t request_timeout_ms = 5000;

    /// Exponential backoff after failed requests (off = fire on schedule).
    bool backoff = false;

    std::string validate() const;
    std::uint64_t effective_ticks() const;
};

struct RequestRecord {
    std::uint64_t tick = 0;
    double start_ms = 0.0;    // relative to loop start
    double end_ms = 0.0;      // completion or failure time
    double latency_ms = 0.0;
    int http_status = 0;      // 0 on transport failure
    bool success = false;     // 2xx
    std::string record;       // encoded record this request carried
};

struct RelayMetrics {
    std::uint64_t ticks_fired = 0;
    std::uint64_t ticks_skipped = 0;  // sync: fired mid-flight; async: cap drops
    std::uint64_t requests_started = 0;
    std::uint64_t requests_completed = 0;  // 2xx responses
    std::uint64_t requests_failed = 0;     // transport errors and non-2xx
    std::uint64_t overlap_events = 0;      // starts with >= 1 request in flight
    std::uint64_t max_observed_inflight = 0;
    std::vector<RequestRecord> requests;   // in send order

    std::vector<double> latencies_ms() const;
};

/// Synchronous tick discipline: the next send happens at the later of the
/// next scheduled tick and the completion of the previous request. Ticks
/// that elapse while a request is in flight are skipped, not queued.
inline double next_sync_send_ms(double prev_send_ms, double prev_completion_ms,
                                double interval_ms) {
    const double next_grid =
        (std::floor(prev_send_ms / interval_ms + 1e-9) + 1.0) * interval_ms;
    return next_grid > prev_completion_ms ? next_grid : prev_completion_ms;
}

/// Grid tick index a send at time t consumes.
inline std::uint64_t tick_index_at(double t_ms, double interval_ms) {
    return static_cast<std::uint64_t>(std::floor(t_ms / interval_ms + 1e-9));
}

/// One display line per relayed sample; the values are format_number texts.
std::string echo_line(const AccelSample& s);

/// Drive the relay loop against a live endpoint. `echo` receives one line
/// per relayed sample when non-null.
RelayMetrics run_relay(const RelayConfig& config, TraceGenerator& source,
                       std::ostream* echo = nullptr);
RelayMetrics run_relay(const RelayConfig& config, const TraceSpec& trace,
                       std::ostream* echo = nullptr);

/// Per-request CSV rows followed by a [summary] key=value block.
void write_relay_metrics(std::ostream& out, const RelayConfig& config, const RelayMetrics& m);

}  // namespace relaykit
