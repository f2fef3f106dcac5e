#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "relaykit/poll.hpp"
#include "relaykit/relay.hpp"

namespace relaykit {

/// Whole-pipeline loopback check: service, synchronous relay, and poller
/// run concurrently over real sockets at scaled-down intervals that keep
/// the poll < relay ratio.
struct E2eConfig {
    std::uint64_t relay_interval_ms = 50;
    std::uint64_t poll_interval_ms = 20;
    std::uint64_t ticks = 100;
    double observed_fraction_required = 0.95;
    bool echo = false;  // print relayed samples as they go
};

struct E2eReport {
    bool pass = false;
    bool ratio_inverted = false;  // poll interval > relay interval: missed
                                  // versions are warned about, not fatal
    std::vector<std::string> failures;
    std::vector<std::string> warnings;

    std::uint64_t versions_relayed = 0;
    std::uint64_t versions_observed = 0;
    std::uint64_t decode_failures = 0;
    double wall_ms = 0.0;

    RelayMetrics relay;
    PollMetrics poll;
};

/// Returns the verification report; pass requires the observed distinct
/// sequence to be an order-preserving subsequence of the relayed sequence,
/// zero decode failures, and (ratio permitting) the observed-version
/// threshold. One human-readable result block is written to `log` when
/// non-null.
E2eReport run_e2e(const E2eConfig& config, std::ostream* log);

}  // namespace relaykit
