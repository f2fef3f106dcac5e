#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "relaykit/poll.hpp"
#include "relaykit/relay.hpp"
#include "relaykit/trace.hpp"

namespace relaykit {

enum class LatencyKind { Fixed, Uniform, Lognormal };

/// Per-request round-trip latency. The drawn value covers the full round
/// trip; server processing time is folded into it.
struct LatencyModel {
    LatencyKind kind = LatencyKind::Fixed;
    double fixed_ms = 0.0;
    double lo_ms = 0.0;
    double hi_ms = 0.0;
    double mu = 0.0;     // lognormal: exp(mu + sigma * z)
    double sigma = 0.0;

    static std::optional<LatencyModel> parse(std::string_view text);
    std::string text() const;  // fixed:L | uniform:lo,hi | lognormal:mu,sigma
    std::string validate() const;
};

enum class WriteModelKind { Atomic, TruncateThenStream };

/// How an arriving record becomes store content.
///
///  - atomic: the record replaces the visible store instantaneously when
///    the request completes.
///  - truncate_then_stream: the write occupies the tail of its request: it
///    starts at completion - record_len/bytes_per_ms (never before the
///    send instant) and streams one byte at a time until completion, with
///    the store truncated to length zero at write start. A write whose
///    window overlaps no other write is still observed atomically at its
///    end: an uncontended writer is far faster than any reader's sampling
///    cadence, so its intermediate states are unobservable. Overlapping
///    windows are the contended regime: from the moment a second window
///    opens until the last of the overlapping windows closes, reads return
///    the raw byte-level interleaving (latest truncate wins, each offset
///    holds the most recently written byte, unwritten gaps read as 0x00),
///    and the state frozen at the end of the overlap persists until the
///    next commit.
struct WriteModel {
    WriteModelKind kind = WriteModelKind::Atomic;
    double bytes_per_ms = 0.05;  // truncate_then_stream only

    static std::optional<WriteModel> parse(std::string_view text);
    std::string text() const;  // atomic | torn:RATE
    std::string validate() const;
};

/// A deterministic virtual-time model of the full pipeline: relay ticks,
/// per-request latency, store writes, and poll reads. Polls never affect
/// the relay or the store, so the relay timeline is computed first and the
/// poll timeline is evaluated against it.
struct SimConfig {
    std::uint64_t relay_interval_ms = 350;
    ChannelMode mode = ChannelMode::Synchronous;
    std::uint64_t poll_interval_ms = 100;
    LatencyModel latency;
    WriteModel write_model;
    TraceSpec trace;
    std::uint64_t duration_ms = 10000;
    std::uint64_t seed = 1;

    std::string validate() const;
};

struct SimMetrics {
    RelayMetrics relay;  // virtual-time request records included
    PollMetrics poll;

    /// Polls whose body fails to decode (after the store was first
    /// written) or decodes to a triple never relayed.
    std::uint64_t torn_read_count = 0;

    /// Commits that replaced the record of a later-sent request.
    std::uint64_t out_of_order_commits = 0;

    /// Byte-distinct committed records, and how many of them at least one
    /// poll observed cleanly.
    std::uint64_t versions_relayed = 0;
    std::uint64_t versions_observed = 0;
    std::uint64_t versions_missed = 0;

    double max_staleness_ms = 0.0;
};

/// Throws std::invalid_argument when config.validate() is non-empty.
/// Identical configs (seed included) produce identical metrics.
SimMetrics run_sim(const SimConfig& config);

}  // namespace relaykit
