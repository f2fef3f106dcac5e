#include <benchmark/benchmark.h>

#include "relaykit/sim.hpp"

using namespace relaykit;

namespace {

SimConfig config_for(ChannelMode mode, const char* write_model) {
    SimConfig cfg;
    cfg.mode = mode;
    cfg.relay_interval_ms = 350;
    cfg.poll_interval_ms = 100;
    cfg.latency = *LatencyModel::parse("fixed:500");
    cfg.write_model = *WriteModel::parse(write_model);
    cfg.duration_ms = 10000;
    cfg.trace.kind = TraceKind::RandomWalk;
    cfg.trace.seed = 11;
    return cfg;
}

void BM_SimSyncAtomic(benchmark::State& state) {
    const SimConfig cfg = config_for(ChannelMode::Synchronous, "atomic");
    for (auto _ : state) benchmark::DoNotOptimize(run_sim(cfg));
}
BENCHMARK(BM_SimSyncAtomic);

void BM_SimAsyncAtomic(benchmark::State& state) {
    const SimConfig cfg = config_for(ChannelMode::Asynchronous, "atomic");
    for (auto _ : state) benchmark::DoNotOptimize(run_sim(cfg));
}
BENCHMARK(BM_SimAsyncAtomic);

void BM_SimAsyncTorn(benchmark::State& state) {
    const SimConfig cfg = config_for(ChannelMode::Asynchronous, "torn:0.04");
    for (auto _ : state) benchmark::DoNotOptimize(run_sim(cfg));
}
BENCHMARK(BM_SimAsyncTorn);

void BM_SimLongRun(benchmark::State& state) {
    SimConfig cfg = config_for(ChannelMode::Asynchronous, "torn:0.04");
    cfg.relay_interval_ms = 50;
    cfg.poll_interval_ms = 20;
    cfg.duration_ms = 60000;
    cfg.latency = *LatencyModel::parse("uniform:20,200");
    for (auto _ : state) benchmark::DoNotOptimize(run_sim(cfg));
}
BENCHMARK(BM_SimLongRun);

}  // namespace

BENCHMARK_MAIN();
