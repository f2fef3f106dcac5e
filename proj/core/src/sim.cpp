#include "relaykit/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace relaykit {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Decorrelated per-purpose stream seeds derived from the config seed.
std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t s = seed + stream_id * 0xD1B54A32D192ED03ULL;
    return splitmix64(s);
}

struct Rng {
    std::uint64_t state;
    double uniform() { return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53; }
};

double draw_latency(const LatencyModel& model, Rng& rng) {
    switch (model.kind) {
        case LatencyKind::Fixed:
            return model.fixed_ms;
        case LatencyKind::Uniform:
            return model.lo_ms + rng.uniform() * (model.hi_ms - model.lo_ms);
        case LatencyKind::Lognormal: {
            const double u1 = 1.0 - rng.uniform();  // (0, 1]
            const double u2 = rng.uniform();
            const double z =
                std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
            return std::exp(model.mu + model.sigma * z);
        }
    }
    return 0.0;
}

bool parse_double_field(std::string_view text, double& out) {
    if (text.empty()) return false;
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out, std::chars_format::general);
    return ec == std::errc{} && ptr == last && std::isfinite(out);
}

// One simulated relay request.
struct SimRequest {
    std::uint64_t tick = 0;
    double send = 0.0;
    double latency = 0.0;
    double completion = 0.0;
    std::string record;
    bool committed = false;      // completion within the run
    double window_start = 0.0;   // truncate_then_stream write window
};

struct Version {
    std::string record;
    double committed_at = 0.0;
    bool observed = false;
};

}  // namespace

std::optional<LatencyModel> LatencyModel::parse(std::string_view text) {
    LatencyModel m;
    if (text.rfind("fixed:", 0) == 0) {
        m.kind = LatencyKind::Fixed;
        if (!parse_double_field(text.substr(6), m.fixed_ms)) return std::nullopt;
        return m;
    }
    if (text.rfind("uniform:", 0) == 0) {
        m.kind = LatencyKind::Uniform;
        const std::string_view rest = text.substr(8);
        const std::size_t comma = rest.find(',');
        if (comma == std::string_view::npos) return std::nullopt;
        if (!parse_double_field(rest.substr(0, comma), m.lo_ms) ||
            !parse_double_field(rest.substr(comma + 1), m.hi_ms)) {
            return std::nullopt;
        }
        return m;
    }
    if (text.rfind("lognormal:", 0) == 0) {
        m.kind = LatencyKind::Lognormal;
        const std::string_view rest = text.substr(10);
        const std::size_t comma = rest.find(',');
        if (comma == std::string_view::npos) return std::nullopt;
        if (!parse_double_field(rest.substr(0, comma), m.mu) ||
            !parse_double_field(rest.substr(comma + 1), m.sigma)) {
            return std::nullopt;
        }
        return m;
    }
    return std::nullopt;
}

std::string LatencyModel::text() const {
    switch (kind) {
        case LatencyKind::Fixed:
            return "fixed:" + format_number(fixed_ms);
        case LatencyKind::Uniform:
            return "uniform:" + format_number(lo_ms) + "," + format_number(hi_ms);
        case LatencyKind::Lognormal:
            return "lognormal:" + format_number(mu) + "," + format_number(sigma);
    }
    return {};
}

std::string LatencyModel::validate() const {
    switch (kind) {
        case LatencyKind::Fixed:
            if (fixed_ms < 0.0) return "fixed latency must be >= 0";
            break;
        case LatencyKind::Uniform:
            if (lo_ms < 0.0 || hi_ms < lo_ms) return "uniform latency requires 0 <= lo <= hi";
            break;
        case LatencyKind::Lognormal:
            if (sigma < 0.0) return "lognormal sigma must be >= 0";
            break;
    }
    return {};
}

std::optional<WriteModel> WriteModel::parse(std::string_view text) {
    WriteModel m;
    if (text == "atomic") {
        m.kind = WriteModelKind::Atomic;
        return m;
    }
    if (text.rfind("torn:", 0) == 0) {
        m.kind = WriteModelKind::TruncateThenStream;
        if (!parse_double_field(text.substr(5), m.bytes_per_ms)) return std::nullopt;
        return m;
    }
    return std::nullopt;
}

std::string WriteModel::text() const {
    if (kind == WriteModelKind::Atomic) return "atomic";
    return "torn:" + format_number(bytes_per_ms);
}

std::string WriteModel::validate() const {
    if (kind == WriteModelKind::TruncateThenStream && !(bytes_per_ms > 0.0)) {
        return "torn write model requires bytes_per_ms > 0";
    }
    return {};
}

std::string SimConfig::validate() const {
    if (relay_interval_ms == 0) return "relay interval must be > 0";
    if (poll_interval_ms == 0) return "poll interval must be > 0";
    if (duration_ms == 0) return "duration must be > 0";
    if (const std::string err = latency.validate(); !err.empty()) return err;
    if (const std::string err = write_model.validate(); !err.empty()) return err;
    if (const std::string err = trace.validate(); !err.empty()) return err;
    return {};
}

namespace {

class StoreModel {
  public:
    // Transitively overlapping write windows; contended from the instant
    // the second window opens.
    struct Cluster {
        double begin = 0.0;
        double end = 0.0;
        std::vector<std::size_t> members;
    };

    StoreModel(const WriteModel& model, const std::vector<SimRequest>& requests)
        : model_(model), requests_(requests) {
        // Commit order: completion time, send order breaking ties.
        for (std::size_t i = 0; i < requests.size(); ++i) {
            if (requests[i].committed) commit_order_.push_back(i);
        }
        std::stable_sort(commit_order_.begin(), commit_order_.end(),
                         [&](std::size_t a, std::size_t b) {
                             return requests[a].completion < requests[b].completion;
                         });
        if (model_.kind == WriteModelKind::TruncateThenStream) {
            build_clusters();
        }
    }

    const std::vector<std::size_t>& commit_order() const { return commit_order_; }

    /// Store bytes a read at virtual time t returns. Commits at exactly t
    /// are visible.
    std::string read(double t) const {
        if (model_.kind == WriteModelKind::TruncateThenStream) {
            for (const Cluster& c : clusters_) {
                if (c.begin <= t && t <= c.end) return raw_state(c, t);
            }
        }
        // Last commit at or before t.
        std::size_t last = SIZE_MAX;
        for (std::size_t idx : commit_order_) {
            if (requests_[idx].completion <= t) {
                last = idx;
            } else {
                break;
            }
        }
        if (last == SIZE_MAX) return {};
        if (model_.kind == WriteModelKind::TruncateThenStream) {
            // A commit inside a contended span leaves the frozen interleaving
            // behind, not its own record.
            for (const Cluster& c : clusters_) {
                const double cl = requests_[last].completion;
                if (c.begin <= cl && cl <= c.end) return raw_state(c, c.end);
            }
        }
        return requests_[last].record;
    }

  private:
    void build_clusters() {
        std::vector<std::size_t> by_start;
        for (std::size_t i = 0; i < requests_.size(); ++i) by_start.push_back(i);
        std::stable_sort(by_start.begin(), by_start.end(), [&](std::size_t a, std::size_t b) {
            return requests_[a].window_start < requests_[b].window_start;
        });

        std::size_t i = 0;
        while (i < by_start.size()) {
            std::size_t members = 1;
            double span_end = requests_[by_start[i]].completion;
            double contention_begin = 0.0;
            std::size_t j = i + 1;
            while (j < by_start.size() && requests_[by_start[j]].window_start < span_end) {
                if (members == 1) contention_begin = requests_[by_start[j]].window_start;
                span_end = std::max(span_end, requests_[by_start[j]].completion);
                ++members;
                ++j;
            }
            if (members >= 2) {
                Cluster c;
                c.begin = contention_begin;
                c.end = span_end;
                c.members.assign(by_start.begin() + static_cast<std::ptrdiff_t>(i),
                                 by_start.begin() + static_cast<std::ptrdiff_t>(j));
                clusters_.push_back(std::move(c));
            }
            i = j;
        }
    }

    /// Byte-level interleaving at time t: latest truncate wins, each offset
    /// holds the most recently written byte, gaps read as NUL.
    std::string raw_state(const Cluster& c, double t) const {
        // Latest truncate at or before t.
        double last_truncate = -1.0;
        for (std::size_t idx : c.members) {
            const double w = requests_[idx].window_start;
            if (w <= t && w > last_truncate) last_truncate = w;
        }
        if (last_truncate < 0.0) return {};

        struct ByteEvent {
            double at;
            std::size_t offset;
            char value;
        };
        std::vector<ByteEvent> events;
        for (std::size_t idx : c.members) {
            const SimRequest& r = requests_[idx];
            if (r.window_start > t) continue;
            const double dur = r.completion - r.window_start;
            const std::size_t len = r.record.size();
            for (std::size_t k = 0; k < len; ++k) {
                const double at =
                    r.window_start + dur * static_cast<double>(k + 1) / static_cast<double>(len);
                if (at > last_truncate && at <= t) {
                    events.push_back(ByteEvent{at, k, r.record[k]});
                }
            }
        }
        if (events.empty()) return {};
        std::stable_sort(events.begin(), events.end(),
                         [](const ByteEvent& a, const ByteEvent& b) { return a.at < b.at; });
        std::size_t max_offset = 0;
        for (const ByteEvent& e : events) max_offset = std::max(max_offset, e.offset);
        std::string content(max_offset + 1, '\0');
        for (const ByteEvent& e : events) content[e.offset] = e.value;
        return content;
    }

    WriteModel model_;
    const std::vector<SimRequest>& requests_;
    std::vector<std::size_t> commit_order_;
    std::vector<Cluster> clusters_;
};

std::vector<SimRequest> simulate_relay(const SimConfig& config, RelayMetrics& m) {
    std::vector<SimRequest> requests;
    TraceGenerator gen = [&] {
        TraceSpec trace = config.trace;
        trace.seed ^= derive_stream(config.seed, 3);
        return TraceGenerator(trace);
    }();
    Rng latency_rng{derive_stream(config.seed, 1)};

    const double interval = static_cast<double>(config.relay_interval_ms);
    const double duration = static_cast<double>(config.duration_ms);
    const double write_rate = config.write_model.bytes_per_ms;
    const bool streaming = config.write_model.kind == WriteModelKind::TruncateThenStream;

    m.ticks_fired = static_cast<std::uint64_t>(std::ceil(duration / interval - 1e-9));

    auto start_request = [&](std::uint64_t tick, double send_at) -> bool {
        const auto sample = gen.sample_at(tick, static_cast<std::uint64_t>(send_at));
        if (!sample) return false;  // replay exhausted: the relay stops
        SimRequest r;
        r.tick = tick;
        r.send = send_at;
        r.latency = draw_latency(config.latency, latency_rng);
        r.completion = send_at + r.latency;
        r.record = encode_record(*sample);
        r.committed = r.completion <= duration;
        if (streaming) {
            const double dur = static_cast<double>(r.record.size()) / write_rate;
            r.window_start = std::max(r.send, r.completion - dur);
        }
        requests.push_back(std::move(r));
        return true;
    };

    if (config.mode == ChannelMode::Synchronous) {
        double prev_send = 0.0;
        double prev_completion = 0.0;
        bool first = true;
        for (;;) {
            const double send_at =
                first ? 0.0 : next_sync_send_ms(prev_send, prev_completion, interval);
            if (send_at >= duration) break;
            first = false;
            const std::uint64_t tick = tick_index_at(send_at, interval);
            if (!start_request(tick, send_at)) break;
            prev_send = send_at;
            prev_completion = requests.back().completion;
        }
        m.max_observed_inflight = requests.empty() ? 0 : 1;
    } else {
        // Requests start at every tick; completions of earlier requests
        // determine the in-flight count at each start.
        std::vector<double> completions;  // min-heap
        for (std::uint64_t tick = 0;; ++tick) {
            const double send_at = static_cast<double>(tick) * interval;
            if (send_at >= duration) break;
            while (!completions.empty() && completions.front() <= send_at) {
                std::pop_heap(completions.begin(), completions.end(), std::greater<>());
                completions.pop_back();
            }
            if (!start_request(tick, send_at)) break;
            if (!completions.empty()) ++m.overlap_events;
            completions.push_back(requests.back().completion);
            std::push_heap(completions.begin(), completions.end(), std::greater<>());
            m.max_observed_inflight =
                std::max<std::uint64_t>(m.max_observed_inflight, completions.size());
        }
    }

    m.requests_started = requests.size();
    for (const SimRequest& r : requests) {
        RequestRecord rec;
        rec.tick = r.tick;
        rec.start_ms = r.send;
        rec.end_ms = r.completion;
        rec.latency_ms = r.latency;
        rec.http_status = r.committed ? 200 : 0;
        rec.success = r.committed;
        rec.record = r.record;
        m.requests.push_back(std::move(rec));
        if (r.committed) {
            ++m.requests_completed;
        }
    }
    m.ticks_skipped = m.ticks_fired >= m.requests_started
                          ? m.ticks_fired - m.requests_started
                          : 0;
    return requests;
}

}  // namespace

SimMetrics run_sim(const SimConfig& config) {
    if (const std::string err = config.validate(); !err.empty()) {
        throw std::invalid_argument("invalid sim config: " + err);
    }
    if (config.trace.kind == TraceKind::Replay) {
        std::string err;
        if (!load_replay_file(config.trace.replay_path, &err)) {
            throw std::invalid_argument("invalid sim config: " + err);
        }
    }

    SimMetrics metrics;
    std::vector<SimRequest> requests = simulate_relay(config, metrics.relay);
    StoreModel store(config.write_model, requests);

    // Ground-truth version list from the commit sequence.
    std::vector<Version> versions;
    for (std::size_t idx : store.commit_order()) {
        const SimRequest& r = requests[idx];
        if (versions.empty() || versions.back().record != r.record) {
            versions.push_back(Version{r.record, r.completion, false});
        }
    }
    metrics.versions_relayed = versions.size();

    // Out-of-order commits: a commit replacing a later-sent request's record.
    std::size_t prev_send_index = SIZE_MAX;
    for (std::size_t idx : store.commit_order()) {
        if (prev_send_index != SIZE_MAX && idx < prev_send_index) {
            ++metrics.out_of_order_commits;
        }
        prev_send_index = idx;
    }

    // Relayed records, ordered by send time, for torn-read ground truth.
    std::vector<std::pair<double, const std::string*>> sent_records;
    sent_records.reserve(requests.size());
    for (const SimRequest& r : requests) sent_records.emplace_back(r.send, &r.record);
    std::unordered_set<std::string> relayed_so_far;
    std::size_t next_sent = 0;

    const double first_commit =
        store.commit_order().empty() ? std::numeric_limits<double>::infinity()
                                     : requests[store.commit_order().front()].completion;

    // Poll pass; the poller never influences the store.
    Rng poll_rng{derive_stream(config.seed, 2)};
    PollMetrics& pm = metrics.poll;
    const double interval = static_cast<double>(config.poll_interval_ms);
    const double duration = static_cast<double>(config.duration_ms);

    std::string prev_raw;
    bool have_prev = false;
    double last_change_at = 0.0;
    bool observed_change = false;

    std::size_t version_cursor = 0;
    double prev_send = 0.0;
    double prev_completion = 0.0;
    bool first = true;

    for (;;) {
        const double send_at = first ? 0.0 : next_sync_send_ms(prev_send, prev_completion, interval);
        if (send_at >= duration) break;
        first = false;
        const double latency = draw_latency(config.latency, poll_rng);
        const double received_at = send_at + latency;
        if (received_at > duration) break;  // the run ends mid-flight
        prev_send = send_at;
        prev_completion = received_at;
        ++pm.polls_attempted;

        while (next_sent < sent_records.size() && sent_records[next_sent].first <= received_at) {
            relayed_so_far.insert(*sent_records[next_sent].second);
            ++next_sent;
        }
        while (version_cursor + 1 < versions.size() &&
               versions[version_cursor + 1].committed_at <= received_at) {
            ++version_cursor;
        }

        const std::string body = store.read(received_at);
        const bool store_written = received_at >= first_commit;

        bool clean = false;
        if (body.empty()) {
            ++pm.empty_body_polls;
            if (store_written) ++metrics.torn_read_count;
        } else {
            const DecodeResult dec = decode_record(body);
            if (!dec.ok) {
                ++pm.decode_failures_total;
                ++pm.decode_failures[std::string(to_string(dec.error))];
                ++metrics.torn_read_count;
            } else if (relayed_so_far.find(encode_record(dec.value)) == relayed_so_far.end()) {
                // Decodes, but to a triple this relay never sent.
                ++pm.polls_succeeded;
                ++metrics.torn_read_count;
                clean = true;
            } else {
                ++pm.polls_succeeded;
                clean = true;
            }
        }

        if (clean) {
            const bool changed = !have_prev || body != prev_raw;
            if (changed) {
                ++pm.distinct_versions_observed;
                last_change_at = received_at;
                observed_change = true;
            } else {
                ++pm.unchanged_polls;
            }
            prev_raw = body;
            have_prev = true;
            if (!versions.empty() && versions[version_cursor].committed_at <= received_at &&
                body == versions[version_cursor].record) {
                versions[version_cursor].observed = true;
            }
        }
        if (observed_change) pm.staleness_ms.push_back(received_at - last_change_at);
    }

    for (const Version& v : versions) {
        if (v.observed) ++metrics.versions_observed;
    }
    metrics.versions_missed = metrics.versions_relayed - metrics.versions_observed;
    metrics.max_staleness_ms = pm.max_staleness_ms();
    return metrics;
}

}  // namespace relaykit
