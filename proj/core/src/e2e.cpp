#include "relaykit/e2e.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "relaykit/service.hpp"
#include "relaykit/trace.hpp"

namespace relaykit {

namespace {

/// Step trace with per-tick-distinct values: consecutive records are
/// always byte-distinct, so every relayed record is a new version.
std::vector<Triple> ramp_trace(std::uint64_t ticks) {
    std::vector<Triple> out;
    out.reserve(ticks);
    for (std::uint64_t k = 0; k < ticks; ++k) {
        out.push_back(Triple{1.0 + static_cast<double>(k), 0.25 * static_cast<double>(k), 9.81});
    }
    return out;
}

bool is_subsequence(const std::vector<std::string>& needle,
                    const std::vector<std::string>& haystack, std::string* first_violation) {
    std::size_t h = 0;
    for (std::size_t n = 0; n < needle.size(); ++n) {
        while (h < haystack.size() && haystack[h] != needle[n]) ++h;
        if (h == haystack.size()) {
            if (first_violation) *first_violation = needle[n];
            return false;
        }
        ++h;
    }
    return true;
}

}  // namespace

E2eReport run_e2e(const E2eConfig& config, std::ostream* log) {
    E2eReport report;
    const auto wall_start = std::chrono::steady_clock::now();

    ServiceConfig service_config;
    service_config.bind_address = "127.0.0.1";
    service_config.port = 0;
    service_config.persistence = Persistence::MemoryOnly;
    TelemetryService service(service_config);
    if (!service.start()) {
        report.failures.push_back("service failed to bind a loopback port");
        if (log) *log << "[e2e] FAIL: " << report.failures.back() << '\n';
        return report;
    }
    const std::string endpoint = "http://127.0.0.1:" + std::to_string(service.port());

    // Startup probe: the health endpoint must answer within a second.
    {
        httplib::Client probe("127.0.0.1", service.port());
        probe.set_connection_timeout(std::chrono::milliseconds(200));
        probe.set_read_timeout(std::chrono::milliseconds(200));
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(1);
        bool healthy = false;
        while (!healthy && std::chrono::steady_clock::now() < deadline) {
            const auto res = probe.Get("/healthz");
            healthy = res && res->status == 200;
            if (!healthy) std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        if (!healthy) {
            report.failures.push_back("health endpoint not reachable within 1 s of start");
            if (log) *log << "[e2e] FAIL: " << report.failures.back() << '\n';
            return report;
        }
    }

    RelayConfig relay_config;
    relay_config.endpoint = endpoint;
    relay_config.ingest_path = service_config.ingest_path;
    relay_config.interval_ms = config.relay_interval_ms;
    relay_config.mode = ChannelMode::Synchronous;
    relay_config.tick_limit = config.ticks;

    PollConfig poll_config;
    poll_config.source_url = endpoint + service_config.fetch_path;
    poll_config.interval_ms = config.poll_interval_ms;
    std::atomic<bool> stop_poller{false};
    poll_config.stop = &stop_poller;

    TraceSpec trace;
    trace.kind = TraceKind::Replay;
    TraceGenerator source(trace, ramp_trace(config.ticks));

    std::vector<RetrievedSample> retrieved;
    std::thread poller([&] { report.poll = run_poll(poll_config, nullptr, &retrieved); });

    report.relay = run_relay(relay_config, source, config.echo ? &std::cout : nullptr);

    // Let the poller take a final look at the last committed record.
    std::this_thread::sleep_for(std::chrono::milliseconds(3 * config.poll_interval_ms + 50));
    stop_poller = true;
    poller.join();
    service.stop();

    // Relayed versions: records distinct from their predecessor, send order.
    std::vector<std::string> relayed;
    for (const RequestRecord& r : report.relay.requests) {
        if (!r.success) continue;
        if (relayed.empty() || relayed.back() != r.record) relayed.push_back(r.record);
    }
    std::vector<std::string> observed;
    for (const RetrievedSample& s : retrieved) {
        if (s.changed) observed.push_back(s.raw);
    }
    report.versions_relayed = relayed.size();
    report.versions_observed = observed.size();
    report.decode_failures = report.poll.decode_failures_total;
    report.ratio_inverted = config.poll_interval_ms > config.relay_interval_ms;

    std::string violation;
    if (!is_subsequence(observed, relayed, &violation)) {
        report.failures.push_back("retrieved sequence is not an order-preserving subsequence "
                                  "of the relayed sequence; first violating record: " +
                                  violation);
    }
    if (report.decode_failures > 0) {
        report.failures.push_back("poller saw " + std::to_string(report.decode_failures) +
                                  " decode failure(s)");
    }
    if (report.relay.requests_failed > 0) {
        report.failures.push_back(std::to_string(report.relay.requests_failed) +
                                  " relay request(s) failed");
    }
    const auto required = static_cast<std::uint64_t>(
        std::ceil(config.observed_fraction_required * static_cast<double>(relayed.size())));
    if (report.versions_observed < required) {
        std::ostringstream os;
        os << "observed " << report.versions_observed << " of " << report.versions_relayed
           << " distinct versions (need " << required << ")";
        if (report.ratio_inverted) {
            report.warnings.push_back(os.str() +
                                      " [expected: poll interval exceeds relay interval]");
        } else {
            report.failures.push_back(os.str());
        }
    }

    report.pass = report.failures.empty();
    report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                               wall_start)
                         .count();

    if (log) {
        *log << "[e2e] relayed_versions=" << report.versions_relayed
             << " observed_versions=" << report.versions_observed
             << " decode_failures=" << report.decode_failures
             << " relay_failures=" << report.relay.requests_failed << '\n';
        for (const std::string& w : report.warnings) *log << "[e2e] warn: " << w << '\n';
        for (const std::string& f : report.failures) *log << "[e2e] FAIL: " << f << '\n';
        *log << "[e2e] " << (report.pass ? "PASS" : "FAIL") << " ("
             << static_cast<std::uint64_t>(report.wall_ms) << " ms)\n";
    }
    return report;
}

}  // namespace relaykit
