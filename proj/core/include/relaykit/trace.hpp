#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relaykit/codec.hpp"

namespace relaykit {

enum class TraceKind {
    Constant,
    Sinusoid,
    RandomWalk,
    Replay,
};

/// Parameters of a synthetic accelerometer stream. Streams are a
/// deterministic function of (spec, seed, tick): two generators built from
/// the same spec produce byte-identical sample sequences.
struct TraceSpec {
    TraceKind kind = TraceKind::Constant;
    std::uint64_t seed = 0;

    /// Every emitted component is clamped to [-clamp_bound, clamp_bound].
    double clamp_bound = kDefaultClampBound;

    // constant
    Triple constant{0.0, 0.0, 9.81};

    // sinusoid: per-axis amplitude (m/s^2), frequency (Hz), phase (rad);
    // gravity_z is added to the z axis.
    double amplitude[3] = {2.0, 2.0, 1.0};
    double frequency_hz[3] = {0.4, 0.25, 0.15};
    double phase_rad[3] = {0.0, 1.0471975511965976, 0.5235987755982988};
    double gravity_z = 9.81;

    // random_walk: per-tick step scale (stddev, m/s^2)
    double step_stddev = 0.5;

    // replay: newline-separated encoded records; wrap or stop on exhaustion
    std::string replay_path;
    bool replay_wrap = false;

    /// Trace spec parse/validation error, empty when the spec is usable.
    std::string validate() const;
};

/// Parse the CLI trace syntax: constant | sinusoid | walk | replay:PATH.
std::optional<TraceSpec> parse_trace_spec(std::string_view text);

/// Load a replay file: one encoded record per line, decoded via the codec.
/// Returns std::nullopt (and fills error) on unreadable file, empty file,
/// or any undecodable line.
std::optional<std::vector<Triple>> load_replay_file(const std::string& path,
                                                    std::string* error = nullptr);

/// Write triples as a replay file, one encoded record per line.
bool write_replay_file(const std::string& path, const std::vector<Triple>& triples);

/// Deterministic sample source. Single-owner: advanced from one logical
/// loop with strictly increasing ticks. Skipped ticks still advance the
/// underlying walk state, so the value at tick n does not depend on which
/// earlier ticks were actually observed.
class TraceGenerator {
  public:
    explicit TraceGenerator(const TraceSpec& spec);

    /// In-memory replay source (what load_replay_file produces).
    TraceGenerator(const TraceSpec& spec, std::vector<Triple> replay);

    /// Sample for the given tick; seq == tick, t_ms echoed back.
    /// Returns std::nullopt only for an exhausted non-wrapping replay.
    std::optional<AccelSample> sample_at(std::uint64_t tick, std::uint64_t t_ms);

    std::size_t replay_length() const { return replay_.size(); }

  private:
    double next_uniform();  // in [0, 1)

    TraceSpec spec_;
    std::vector<Triple> replay_;
    std::uint64_t rng_state_;
    std::uint64_t next_walk_tick_ = 0;
    Triple walk_{0.0, 0.0, 0.0};
};

}  // namespace relaykit
