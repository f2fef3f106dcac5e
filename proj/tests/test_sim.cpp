#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "relaykit/sim.hpp"
#include "relaykit/sweep.hpp"

using namespace relaykit;

namespace {

struct TempReplay {
    std::string path;
    explicit TempReplay(const std::vector<Triple>& data, const char* tag) {
        path = (std::filesystem::temp_directory_path() /
                ("relaykit_sim_" + std::string(tag) + "_" + std::to_string(::getpid()) + ".dat"))
                   .string();
        REQUIRE(write_replay_file(path, data));
    }
    ~TempReplay() {
        std::error_code ec;
        std::filesystem::remove(path, ec);
    }
};

std::vector<Triple> ramp(std::size_t n) {
    std::vector<Triple> out;
    for (std::size_t k = 0; k < n; ++k) {
        out.push_back(Triple{1.0 + static_cast<double>(k), 0.25 * static_cast<double>(k), 9.81});
    }
    return out;
}

SimConfig base_config(const std::string& replay_path) {
    SimConfig cfg;
    cfg.trace.kind = TraceKind::Replay;
    cfg.trace.replay_path = replay_path;
    return cfg;
}

std::string report_of(const SimConfig& cfg) {
    std::ostringstream out;
    write_report(out, {SweepCell{cfg, run_sim(cfg)}}, ReportFormat::Csv);
    return out.str();
}

}  // namespace

TEST_CASE("config validation and error reporting") {
    SimConfig cfg;
    cfg.relay_interval_ms = 0;
    CHECK_THROWS_AS(run_sim(cfg), std::invalid_argument);
    cfg = SimConfig{};
    cfg.trace.kind = TraceKind::Replay;
    cfg.trace.replay_path = "/nonexistent/replay.dat";
    CHECK_THROWS_AS(run_sim(cfg), std::invalid_argument);
    cfg = SimConfig{};
    cfg.latency.fixed_ms = -1.0;
    CHECK_FALSE(cfg.validate().empty());
    cfg = SimConfig{};
    cfg.write_model.kind = WriteModelKind::TruncateThenStream;
    cfg.write_model.bytes_per_ms = 0.0;
    CHECK_FALSE(cfg.validate().empty());
}

TEST_CASE("latency and write model text round-trips") {
    CHECK(LatencyModel::parse("fixed:500")->text() == "fixed:500");
    CHECK(LatencyModel::parse("uniform:10,40")->text() == "uniform:10,40");
    CHECK(LatencyModel::parse("lognormal:3.5,0.5")->text() == "lognormal:3.5,0.5");
    CHECK_FALSE(LatencyModel::parse("fixed:").has_value());
    CHECK_FALSE(LatencyModel::parse("uniform:10").has_value());
    CHECK_FALSE(LatencyModel::parse("warp:1").has_value());
    CHECK(WriteModel::parse("atomic")->text() == "atomic");
    CHECK(WriteModel::parse("torn:0.04")->text() == "torn:0.04");
    CHECK_FALSE(WriteModel::parse("torn:x").has_value());
}

// The paper-reproduction schedule, checked against closed forms computed
// here: asynchronous sends fire every tick and each lives exactly the
// fixed latency, so every send after the first overlaps its predecessor;
// synchronous sends are spaced max(interval, latency).
TEST_CASE("fixed-latency schedules match the analytic oracle") {
    TempReplay replay(ramp(64), "sched");

    SimConfig async_cfg = base_config(replay.path);
    async_cfg.mode = ChannelMode::Asynchronous;
    async_cfg.relay_interval_ms = 350;
    async_cfg.poll_interval_ms = 100;
    async_cfg.latency = *LatencyModel::parse("fixed:500");
    async_cfg.duration_ms = 10000;

    const SimMetrics am = run_sim(async_cfg);
    // sends at 350k < 10000 -> k = 0..28
    CHECK(am.relay.requests_started == 29);
    CHECK(am.relay.ticks_fired == 29);
    for (std::size_t k = 0; k < am.relay.requests.size(); ++k) {
        CHECK(am.relay.requests[k].start_ms == 350.0 * static_cast<double>(k));
        CHECK(am.relay.requests[k].end_ms == 350.0 * static_cast<double>(k) + 500.0);
    }
    CHECK(am.relay.overlap_events == 28);  // latency > interval: all but the first
    CHECK(am.relay.overlap_events >= static_cast<std::uint64_t>(
                                         0.9 * static_cast<double>(am.relay.requests_started - 2)));
    // completions at 350k+500 <= 10000 -> k <= 27
    CHECK(am.relay.requests_completed == 28);
    CHECK(am.relay.max_observed_inflight == 2);  // 500/350 rounds up to 2
    CHECK(am.out_of_order_commits == 0);         // fixed latency preserves order

    SimConfig sync_cfg = async_cfg;
    sync_cfg.mode = ChannelMode::Synchronous;
    const SimMetrics sm = run_sim(sync_cfg);
    // sends spaced max(350, 500) = 500: 500k < 10000 -> 20 sends
    CHECK(sm.relay.requests_started == 20);
    for (std::size_t k = 0; k < sm.relay.requests.size(); ++k) {
        CHECK(sm.relay.requests[k].start_ms == 500.0 * static_cast<double>(k));
    }
    CHECK(sm.relay.overlap_events == 0);
    CHECK(sm.relay.max_observed_inflight == 1);
    CHECK(sm.torn_read_count == 0);

    // Interval-bound sync: latency below the interval keeps the grid.
    SimConfig fast = sync_cfg;
    fast.latency = *LatencyModel::parse("fixed:30");
    const SimMetrics fm = run_sim(fast);
    CHECK(fm.relay.requests_started == 29);
    for (std::size_t k = 0; k < fm.relay.requests.size(); ++k) {
        CHECK(fm.relay.requests[k].start_ms == 350.0 * static_cast<double>(k));
    }
}

TEST_CASE("no-miss rule: poll faster than relay observes every version") {
    TempReplay replay(ramp(20), "nomiss");
    SimConfig cfg = base_config(replay.path);
    cfg.relay_interval_ms = 350;
    cfg.poll_interval_ms = 100;
    cfg.latency = *LatencyModel::parse("fixed:0");
    cfg.duration_ms = 7400;  // replay exhausts after 20 ticks

    const SimMetrics m = run_sim(cfg);
    CHECK(m.versions_relayed == 20);
    CHECK(m.versions_observed == 20);
    CHECK(m.versions_missed == 0);
    CHECK(m.poll.distinct_versions_observed == 20);
    CHECK(m.torn_read_count == 0);

    // Inverted ratio: a 500 ms poll against a 350 ms relay must miss.
    SimConfig inverted = cfg;
    inverted.poll_interval_ms = 500;
    const SimMetrics im = run_sim(inverted);
    CHECK(im.versions_relayed == 20);
    CHECK(im.versions_observed < im.versions_relayed);
    CHECK(im.versions_observed + im.versions_missed == im.versions_relayed);
}

TEST_CASE("corruption requires overlap plus a non-atomic write") {
    TempReplay replay(ramp(32), "torn");
    SimConfig cfg = base_config(replay.path);
    cfg.relay_interval_ms = 350;
    cfg.poll_interval_ms = 100;
    cfg.latency = *LatencyModel::parse("fixed:500");
    cfg.duration_ms = 10000;

    SimConfig async_torn = cfg;
    async_torn.mode = ChannelMode::Asynchronous;
    async_torn.write_model = *WriteModel::parse("torn:0.04");
    const SimMetrics bad = run_sim(async_torn);
    CHECK(bad.torn_read_count > 0);

    SimConfig async_atomic = async_torn;
    async_atomic.write_model = *WriteModel::parse("atomic");
    CHECK(run_sim(async_atomic).torn_read_count == 0);

    SimConfig sync_torn = async_torn;
    sync_torn.mode = ChannelMode::Synchronous;
    CHECK(run_sim(sync_torn).torn_read_count == 0);

    SimConfig sync_atomic = sync_torn;
    sync_atomic.write_model = *WriteModel::parse("atomic");
    CHECK(run_sim(sync_atomic).torn_read_count == 0);
}

TEST_CASE("torn bodies are either undecodable or never-relayed triples") {
    TempReplay replay(ramp(32), "tornkinds");
    SimConfig cfg = base_config(replay.path);
    cfg.mode = ChannelMode::Asynchronous;
    cfg.relay_interval_ms = 350;
    cfg.poll_interval_ms = 100;
    cfg.latency = *LatencyModel::parse("fixed:500");
    cfg.write_model = *WriteModel::parse("torn:0.04");
    cfg.duration_ms = 10000;

    const SimMetrics m = run_sim(cfg);
    // Client-side decode failures count into the ground-truth torn total.
    CHECK(m.torn_read_count >= m.poll.decode_failures_total);
    CHECK(m.poll.decode_failures_total > 0);
}

TEST_CASE("staleness stays within relay + poll + two latencies") {
    TempReplay replay(ramp(100), "stale");
    SimConfig cfg = base_config(replay.path);
    cfg.relay_interval_ms = 350;
    cfg.poll_interval_ms = 100;
    cfg.latency = *LatencyModel::parse("fixed:30");
    cfg.duration_ms = 35000;

    const SimMetrics m = run_sim(cfg);
    REQUIRE_FALSE(m.poll.staleness_ms.empty());
    const double bound = 350.0 + 100.0 + 2.0 * 30.0;
    for (const double s : m.poll.staleness_ms) {
        CHECK(s <= bound);
    }
    CHECK(m.max_staleness_ms == m.poll.max_staleness_ms());
}

TEST_CASE("identical configs give byte-identical reports") {
    TempReplay replay(ramp(32), "det");
    SimConfig cfg = base_config(replay.path);
    cfg.mode = ChannelMode::Asynchronous;
    cfg.latency = *LatencyModel::parse("lognormal:5.5,0.8");
    cfg.write_model = *WriteModel::parse("torn:0.1");
    cfg.seed = 77;

    CHECK(report_of(cfg) == report_of(cfg));

    SimConfig different = cfg;
    different.seed = 78;
    CHECK(report_of(cfg) != report_of(different));
}

TEST_CASE("out-of-order commits appear only with jittered async latency") {
    SimConfig cfg;
    cfg.trace.kind = TraceKind::RandomWalk;
    cfg.mode = ChannelMode::Asynchronous;
    cfg.relay_interval_ms = 50;
    cfg.poll_interval_ms = 100;
    cfg.latency = *LatencyModel::parse("uniform:0,400");
    cfg.duration_ms = 10000;
    cfg.seed = 5;

    const SimMetrics m = run_sim(cfg);
    CHECK(m.out_of_order_commits > 0);

    SimConfig sync_cfg = cfg;
    sync_cfg.mode = ChannelMode::Synchronous;
    CHECK(run_sim(sync_cfg).out_of_order_commits == 0);
}

// Invariant battery over randomized configurations.
TEST_CASE("simulator invariants hold across random configs") {
    std::mt19937_64 meta(0xC0FFEE);
    for (int iter = 0; iter < 50; ++iter) {
        SimConfig cfg;
        cfg.trace.kind = TraceKind::RandomWalk;
        cfg.trace.seed = meta();
        cfg.seed = meta();
        cfg.relay_interval_ms = 50 + meta() % 450;
        cfg.poll_interval_ms = 20 + meta() % 580;
        cfg.duration_ms = 2000 + meta() % 6000;
        cfg.mode = (meta() % 2 == 0) ? ChannelMode::Synchronous : ChannelMode::Asynchronous;
        switch (meta() % 3) {
            case 0:
                cfg.latency.kind = LatencyKind::Fixed;
                cfg.latency.fixed_ms = static_cast<double>(meta() % 600);
                break;
            case 1:
                cfg.latency.kind = LatencyKind::Uniform;
                cfg.latency.lo_ms = static_cast<double>(meta() % 300);
                cfg.latency.hi_ms = cfg.latency.lo_ms + static_cast<double>(meta() % 300);
                break;
            default:
                cfg.latency.kind = LatencyKind::Lognormal;
                cfg.latency.mu = 3.0 + static_cast<double>(meta() % 3);
                cfg.latency.sigma = 0.2 + 0.1 * static_cast<double>(meta() % 8);
                break;
        }
        if (meta() % 2 == 0) {
            cfg.write_model.kind = WriteModelKind::TruncateThenStream;
            cfg.write_model.bytes_per_ms = 0.02 + 0.01 * static_cast<double>(meta() % 20);
        }

        CAPTURE(iter);
        const SimMetrics m = run_sim(cfg);

        if (cfg.mode == ChannelMode::Synchronous) {
            CHECK(m.relay.overlap_events == 0);
            CHECK(m.torn_read_count == 0);
            CHECK(m.out_of_order_commits == 0);
            CHECK(m.relay.max_observed_inflight <= 1);
        }
        if (cfg.write_model.kind == WriteModelKind::Atomic) {
            CHECK(m.torn_read_count == 0);
        }
        if (m.torn_read_count > 0) {
            CHECK(cfg.mode == ChannelMode::Asynchronous);
            CHECK(cfg.write_model.kind == WriteModelKind::TruncateThenStream);
        }
        CHECK(m.versions_observed <= m.versions_relayed);
        CHECK(m.versions_observed + m.versions_missed == m.versions_relayed);
        CHECK(m.relay.requests_completed + m.relay.requests_failed <= m.relay.requests_started);
        CHECK(m.relay.requests_started <= m.relay.ticks_fired);
        CHECK(m.poll.distinct_versions_observed + m.poll.unchanged_polls + m.poll.empty_body_polls +
                  m.poll.decode_failures_total ==
              m.poll.polls_completed());

        // Synchronous serialization from the recorded virtual times.
        if (cfg.mode == ChannelMode::Synchronous) {
            for (std::size_t i = 1; i < m.relay.requests.size(); ++i) {
                CHECK(m.relay.requests[i].start_ms >= m.relay.requests[i - 1].end_ms);
            }
        }
    }
}
