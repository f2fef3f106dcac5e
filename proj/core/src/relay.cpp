#include "relaykit/relay.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <ostream>
#include <thread>

#include <httplib.h>

namespace relaykit {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void sleep_until_ms(Clock::time_point start, double target_ms) {
    const auto deadline =
        start + std::chrono::duration_cast<Clock::duration>(
                    std::chrono::duration<double, std::milli>(target_ms));
    std::this_thread::sleep_until(deadline);
}

httplib::Client make_client(const RelayConfig& config) {
    httplib::Client cli(config.endpoint);
    const auto timeout = std::chrono::milliseconds(config.request_timeout_ms);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    return cli;
}

constexpr double kBackoffBaseMs = 100.0;
constexpr double kBackoffCapMs = 5000.0;

}  // namespace

std::string_view to_string(ChannelMode m) {
    return m == ChannelMode::Synchronous ? "sync" : "async";
}

std::string RelayConfig::validate() const {
    if (interval_ms == 0) return "interval must be > 0";
    if (endpoint.empty()) return "endpoint must be non-empty";
    if (ingest_path.empty() || ingest_path.front() != '/') {
        return "ingest path must start with '/'";
    }
    if (tick_limit == 0 && duration_ms == 0) return "tick or duration limit required";
    return {};
}

std::uint64_t RelayConfig::effective_ticks() const {
    if (tick_limit > 0) return tick_limit;
    return (duration_ms + interval_ms - 1) / interval_ms;
}

std::string echo_line(const AccelSample& s) {
    std::string line = format_number(s.x);
    line += ' ';
    line += format_number(s.y);
    line += ' ';
    line += format_number(s.z);
    return line;
}

std::vector<double> RelayMetrics::latencies_ms() const {
    std::vector<double> out;
    out.reserve(requests.size());
    for (const RequestRecord& r : requests) {
        if (r.success) out.push_back(r.latency_ms);
    }
    return out;
}

namespace {

RelayMetrics run_sync(const RelayConfig& config, TraceGenerator& source, std::ostream* echo) {
    RelayMetrics m;
    const std::uint64_t ticks = config.effective_ticks();
    const double interval = static_cast<double>(config.interval_ms);
    httplib::Client cli = make_client(config);

    const auto start = Clock::now();
    double prev_send = 0.0;
    double prev_completion = 0.0;
    unsigned consecutive_failures = 0;
    bool first = true;
    bool exhausted = false;

    for (;;) {
        double send_at = first ? 0.0 : next_sync_send_ms(prev_send, prev_completion, interval);
        if (config.backoff && consecutive_failures > 0) {
            const double delay = std::min(
                kBackoffBaseMs * static_cast<double>(1u << std::min(consecutive_failures, 6u)),
                kBackoffCapMs);
            send_at = std::max(send_at, prev_completion + delay);
        }
        const std::uint64_t tick = tick_index_at(send_at, interval);
        if (tick >= ticks) break;
        first = false;

        if (send_at > ms_since(start)) sleep_until_ms(start, send_at);

        const auto sample = source.sample_at(tick, static_cast<std::uint64_t>(send_at));
        if (!sample) {
            exhausted = true;
            break;
        }
        if (echo) *echo << echo_line(*sample) << '\n';

        RequestRecord rec;
        rec.tick = tick;
        rec.record = encode_record(*sample);
        rec.start_ms = ms_since(start);
        ++m.requests_started;
        m.max_observed_inflight = std::max<std::uint64_t>(m.max_observed_inflight, 1);

        const auto res = cli.Get(build_query(*sample, config.ingest_path));
        rec.end_ms = ms_since(start);
        rec.latency_ms = rec.end_ms - rec.start_ms;
        if (res) {
            rec.http_status = res->status;
            rec.success = res->status >= 200 && res->status < 300;
        }
        if (rec.success) {
            ++m.requests_completed;
            consecutive_failures = 0;
        } else {
            ++m.requests_failed;
            ++consecutive_failures;
        }

        prev_send = send_at;
        prev_completion = rec.end_ms;
        m.requests.push_back(std::move(rec));
    }

    if (exhausted) {
        m.ticks_fired = m.requests.empty() ? 0 : m.requests.back().tick + 1;
    } else {
        m.ticks_fired = ticks;
    }
    m.ticks_skipped = m.ticks_fired - m.requests_started;
    return m;
}

RelayMetrics run_async(const RelayConfig& config, TraceGenerator& source, std::ostream* echo) {
    RelayMetrics m;
    const std::uint64_t ticks = config.effective_ticks();
    const double interval = static_cast<double>(config.interval_ms);

    std::mutex mu;
    std::condition_variable cv;
    std::uint64_t inflight = 0;
    std::vector<std::thread> workers;
    workers.reserve(64);

    const auto start = Clock::now();
    double resume_at = 0.0;  // backoff gate
    unsigned consecutive_failures = 0;
    std::uint64_t fired = 0;

    for (std::uint64_t tick = 0; tick < ticks; ++tick) {
        const double send_at = static_cast<double>(tick) * interval;
        if (send_at > ms_since(start)) sleep_until_ms(start, send_at);
        fired = tick + 1;

        {
            std::unique_lock<std::mutex> lock(mu);
            if (config.backoff && ms_since(start) < resume_at) {
                ++m.ticks_skipped;
                continue;
            }
            if (config.max_inflight > 0 && inflight >= config.max_inflight) {
                ++m.ticks_skipped;  // at the cap the tick is dropped
                continue;
            }
        }

        const auto sample = source.sample_at(tick, static_cast<std::uint64_t>(send_at));
        if (!sample) break;  // replay exhausted
        if (echo) *echo << echo_line(*sample) << '\n';

        RequestRecord rec;
        rec.tick = tick;
        rec.record = encode_record(*sample);
        const std::string query = build_query(*sample, config.ingest_path);

        std::size_t slot = 0;
        {
            std::unique_lock<std::mutex> lock(mu);
            if (inflight > 0) ++m.overlap_events;
            ++inflight;
            m.max_observed_inflight = std::max(m.max_observed_inflight, inflight);
            ++m.requests_started;
            rec.start_ms = ms_since(start);
            slot = m.requests.size();
            m.requests.push_back(std::move(rec));
        }

        workers.emplace_back([&, slot, query] {
            httplib::Client cli = make_client(config);
            const auto res = cli.Get(query);
            const double end = ms_since(start);
            std::unique_lock<std::mutex> lock(mu);
            RequestRecord& r = m.requests[slot];
            r.end_ms = end;
            r.latency_ms = end - r.start_ms;
            if (res) {
                r.http_status = res->status;
                r.success = res->status >= 200 && res->status < 300;
            }
            if (r.success) {
                ++m.requests_completed;
                consecutive_failures = 0;
            } else {
                ++m.requests_failed;
                ++consecutive_failures;
                if (config.backoff) {
                    const double delay = std::min(
                        kBackoffBaseMs *
                            static_cast<double>(1u << std::min(consecutive_failures, 6u)),
                        kBackoffCapMs);
                    resume_at = std::max(resume_at, end + delay);
                }
            }
            --inflight;
            cv.notify_all();
        });
    }

    {
        std::unique_lock<std::mutex> lock(mu);
        cv.wait(lock, [&] { return inflight == 0; });
    }
    for (std::thread& t : workers) t.join();

    m.ticks_fired = fired;
    return m;
}

}  // namespace

RelayMetrics run_relay(const RelayConfig& config, TraceGenerator& source, std::ostream* echo) {
    return config.mode == ChannelMode::Synchronous ? run_sync(config, source, echo)
                                                   : run_async(config, source, echo);
}

RelayMetrics run_relay(const RelayConfig& config, const TraceSpec& trace, std::ostream* echo) {
    TraceGenerator gen(trace);
    return run_relay(config, gen, echo);
}

void write_relay_metrics(std::ostream& out, const RelayConfig& config, const RelayMetrics& m) {
    out << "tick,start_ms,end_ms,latency_ms,status,outcome,record\n";
    char buf[64];
    for (const RequestRecord& r : m.requests) {
        const char* outcome =
            r.success ? "ok" : (r.http_status == 0 ? "transport_error" : "http_error");
        std::snprintf(buf, sizeof(buf), "%llu,%.3f,%.3f,%.3f,%d,",
                      static_cast<unsigned long long>(r.tick), r.start_ms, r.end_ms, r.latency_ms,
                      r.http_status);
        out << buf << outcome << ',' << r.record << '\n';
    }
    out << "\n[summary]\n";
    out << "mode=" << to_string(config.mode) << '\n';
    out << "interval_ms=" << config.interval_ms << '\n';
    out << "ticks_fired=" << m.ticks_fired << '\n';
    out << "ticks_skipped=" << m.ticks_skipped << '\n';
    out << "requests_started=" << m.requests_started << '\n';
    out << "requests_completed=" << m.requests_completed << '\n';
    out << "requests_failed=" << m.requests_failed << '\n';
    out << "overlap_events=" << m.overlap_events << '\n';
    out << "max_observed_inflight=" << m.max_observed_inflight << '\n';
    const std::vector<double> lat = m.latencies_ms();
    if (!lat.empty()) {
        double sum = 0.0, mx = 0.0;
        for (double v : lat) {
            sum += v;
            mx = std::max(mx, v);
        }
        std::snprintf(buf, sizeof(buf), "latency_mean_ms=%.3f\n", sum / lat.size());
        out << buf;
        std::snprintf(buf, sizeof(buf), "latency_max_ms=%.3f\n", mx);
        out << buf;
    }
}

}  // namespace relaykit
