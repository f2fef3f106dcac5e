#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "relaykit/codec.hpp"

namespace relaykit {

struct PollConfig {
    std::string source_url = "http://127.0.0.1:8080/maina.dat";
    std::uint64_t interval_ms = 100;

    /// Run length: poll ticks to cover. If zero, derived from duration_ms.
    std::uint64_t poll_limit = 0;
    std::uint64_t duration_ms = 0;

    std::uint64_t request_timeout_ms = 5000;

    /// Optional external stop request, checked once per tick.
    const std::atomic<bool>* stop = nullptr;

    std::string validate() const;
    std::uint64_t effective_polls() const;
};

struct RetrievedSample {
    Triple triple{};
    double received_at_ms = 0.0;  // relative to loop start
    bool changed = false;         // raw bytes differ from previous successful poll
    std::string raw;              // record bytes as fetched
};

struct PollMetrics {
    std::uint64_t polls_attempted = 0;
    std::uint64_t transport_failures = 0;  // unreachable source or non-2xx
    std::uint64_t empty_body_polls = 0;
    std::uint64_t decode_failures_total = 0;
    std::map<std::string, std::uint64_t> decode_failures;  // by error kind
    std::uint64_t polls_succeeded = 0;                     // decoded cleanly
    std::uint64_t distinct_versions_observed = 0;          // changed == true
    std::uint64_t unchanged_polls = 0;

    /// Per-poll time since the last observed change; empty before the
    /// first observation.
    std::vector<double> staleness_ms;

    std::uint64_t polls_completed() const { return polls_attempted - transport_failures; }
    double max_staleness_ms() const;
};

using SampleSink = std::function<void(const RetrievedSample&)>;

/// Poll the fetch endpoint on the configured cadence, decode each body,
/// and report freshness. Ticks are synchronous: at most one fetch in
/// flight; a late response delays the next tick.
PollMetrics run_poll(const PollConfig& config, const SampleSink& sink = nullptr,
                     std::vector<RetrievedSample>* collected = nullptr);

enum class StreamFormat { Csv, Lines };

/// CSV columns: received_at_ms, x, y, z, changed. Lines format mirrors the
/// relay echo.
void emit_stream(std::ostream& out, const std::vector<RetrievedSample>& samples,
                 StreamFormat format);

/// One CSV row (no newline) for live streaming; pairs with emit_csv_header.
std::string csv_row(const RetrievedSample& s);
std::string csv_header();

/// [summary] key=value block for --metrics-out.
void write_poll_metrics(std::ostream& out, const PollConfig& config, const PollMetrics& m);

}  // namespace relaykit
