#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "relaykit/sim.hpp"

namespace relaykit {

struct SweepCell {
    SimConfig config;
    SimMetrics metrics;
};

/// Grid text: one `key=value[,value,...]` line per axis; '#' starts a
/// comment. Keys mirror the sim flags: relay-interval-ms, mode,
/// poll-interval-ms, latency, write-model, trace, duration-ms, seed.
/// Multi-valued keys expand to the cartesian product, later lines varying
/// fastest. Missing keys keep the base config's values.
std::vector<SimConfig> parse_grid(const std::string& text, const SimConfig& base,
                                  std::string* error);

/// Run every cell. Throws std::invalid_argument naming the offending cell
/// when one has an invalid config.
std::vector<SweepCell> sweep(const std::vector<SimConfig>& cells);

enum class ReportFormat { Csv, Markdown };

/// Columns: mode, latency, write model, overlap/torn/ordering counters,
/// version counts, max staleness. Deterministic byte-for-byte for
/// identical metrics.
void write_report(std::ostream& out, const std::vector<SweepCell>& cells, ReportFormat format);

}  // namespace relaykit
