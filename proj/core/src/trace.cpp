#include "relaykit/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace relaykit {

namespace {

// splitmix64; chosen for portability, see docs/wire-format.md.
std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

bool all_finite(const Triple& t) {
    return std::isfinite(t.x) && std::isfinite(t.y) && std::isfinite(t.z);
}

}  // namespace

std::string TraceSpec::validate() const {
    if (!(clamp_bound > 0.0) || !std::isfinite(clamp_bound)) {
        return "clamp bound must be positive and finite";
    }
    switch (kind) {
        case TraceKind::Constant:
            if (!all_finite(constant)) return "constant trace values must be finite";
            break;
        case TraceKind::Sinusoid:
            for (int i = 0; i < 3; ++i) {
                if (!std::isfinite(amplitude[i]) || amplitude[i] < 0.0) {
                    return "sinusoid amplitude must be finite and >= 0";
                }
                if (!std::isfinite(frequency_hz[i]) || !std::isfinite(phase_rad[i])) {
                    return "sinusoid frequency and phase must be finite";
                }
            }
            if (!std::isfinite(gravity_z)) return "gravity offset must be finite";
            break;
        case TraceKind::RandomWalk:
            if (!std::isfinite(step_stddev) || step_stddev < 0.0) {
                return "walk step stddev must be finite and >= 0";
            }
            break;
        case TraceKind::Replay:
            if (replay_path.empty()) return "replay trace requires a file path";
            break;
    }
    return {};
}

std::optional<TraceSpec> parse_trace_spec(std::string_view text) {
    TraceSpec spec;
    if (text == "constant") {
        spec.kind = TraceKind::Constant;
    } else if (text == "sinusoid") {
        spec.kind = TraceKind::Sinusoid;
    } else if (text == "walk") {
        spec.kind = TraceKind::RandomWalk;
    } else if (text.rfind("replay:", 0) == 0) {
        spec.kind = TraceKind::Replay;
        spec.replay_path = std::string(text.substr(7));
        if (spec.replay_path.empty()) return std::nullopt;
    } else {
        return std::nullopt;
    }
    return spec;
}

std::optional<std::vector<Triple>> load_replay_file(const std::string& path, std::string* error) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (error) *error = "cannot open replay file: " + path;
        return std::nullopt;
    }
    std::vector<Triple> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const DecodeResult r = decode_record(line);
        if (!r.ok) {
            if (error) {
                std::ostringstream os;
                os << path << ":" << lineno << ": bad record (" << to_string(r.error) << ")";
                *error = os.str();
            }
            return std::nullopt;
        }
        out.push_back(r.value);
    }
    if (out.empty()) {
        if (error) *error = "replay file is empty: " + path;
        return std::nullopt;
    }
    return out;
}

bool write_replay_file(const std::string& path, const std::vector<Triple>& triples) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    for (const Triple& t : triples) {
        out << encode_record(t) << '\n';
    }
    out.flush();
    return static_cast<bool>(out);
}

TraceGenerator::TraceGenerator(const TraceSpec& spec)
    : spec_(spec), rng_state_(spec.seed), walk_{0.0, 0.0, 9.81} {
    if (spec_.kind == TraceKind::Replay && !spec_.replay_path.empty()) {
        if (auto data = load_replay_file(spec_.replay_path)) {
            replay_ = std::move(*data);
        }
    }
}

TraceGenerator::TraceGenerator(const TraceSpec& spec, std::vector<Triple> replay)
    : spec_(spec), replay_(std::move(replay)), rng_state_(spec.seed), walk_{0.0, 0.0, 9.81} {}

double TraceGenerator::next_uniform() {
    return static_cast<double>(splitmix64(rng_state_) >> 11) * 0x1.0p-53;
}

std::optional<AccelSample> TraceGenerator::sample_at(std::uint64_t tick, std::uint64_t t_ms) {
    Triple v{};
    switch (spec_.kind) {
        case TraceKind::Constant:
            v = spec_.constant;
            break;
        case TraceKind::Sinusoid: {
            const double t_s = static_cast<double>(t_ms) / 1000.0;
            double axes[3];
            for (int i = 0; i < 3; ++i) {
                axes[i] = spec_.amplitude[i] *
                          std::sin(2.0 * std::numbers::pi * spec_.frequency_hz[i] * t_s +
                                   spec_.phase_rad[i]);
            }
            v = Triple{axes[0], axes[1], axes[2] + spec_.gravity_z};
            break;
        }
        case TraceKind::RandomWalk: {
            // One step per tick, including ticks the caller never observed,
            // so the stream is a function of (spec, seed, tick) alone.
            const double half_width = spec_.step_stddev * std::sqrt(3.0);
            while (next_walk_tick_ <= tick) {
                walk_.x += (2.0 * next_uniform() - 1.0) * half_width;
                walk_.y += (2.0 * next_uniform() - 1.0) * half_width;
                walk_.z += (2.0 * next_uniform() - 1.0) * half_width;
                walk_.x = std::clamp(walk_.x, -spec_.clamp_bound, spec_.clamp_bound);
                walk_.y = std::clamp(walk_.y, -spec_.clamp_bound, spec_.clamp_bound);
                walk_.z = std::clamp(walk_.z, -spec_.clamp_bound, spec_.clamp_bound);
                ++next_walk_tick_;
            }
            v = walk_;
            break;
        }
        case TraceKind::Replay: {
            if (replay_.empty()) return std::nullopt;
            if (tick >= replay_.size() && !spec_.replay_wrap) return std::nullopt;
            v = replay_[static_cast<std::size_t>(tick % replay_.size())];
            break;
        }
    }
    AccelSample s;
    s.x = std::clamp(v.x, -spec_.clamp_bound, spec_.clamp_bound);
    s.y = std::clamp(v.y, -spec_.clamp_bound, spec_.clamp_bound);
    s.z = std::clamp(v.z, -spec_.clamp_bound, spec_.clamp_bound);
    s.seq = tick;
    s.t_ms = t_ms;
    return s;
}

}  // namespace relaykit
