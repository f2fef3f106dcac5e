#include "relaykit/poll.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>
#include <thread>

#include <httplib.h>

#include "relaykit/relay.hpp"

namespace relaykit {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Split "http://host:port/path" into client base and path.
bool split_url(const std::string& url, std::string& base, std::string& path) {
    const std::size_t scheme = url.find("://");
    if (scheme == std::string::npos) return false;
    const std::size_t slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) {
        base = url;
        path = "/";
    } else {
        base = url.substr(0, slash);
        path = url.substr(slash);
    }
    return true;
}

}  // namespace

std::string PollConfig::validate() const {
    if (interval_ms == 0) return "interval must be > 0";
    std::string base, path;
    if (!split_url(source_url, base, path)) return "source url must include a scheme";
    if (poll_limit == 0 && duration_ms == 0 && stop == nullptr) {
        return "poll or duration limit required";
    }
    return {};
}

std::uint64_t PollConfig::effective_polls() const {
    if (poll_limit > 0) return poll_limit;
    if (duration_ms > 0) return (duration_ms + interval_ms - 1) / interval_ms;
    return UINT64_MAX;  // until stop flag
}

double PollMetrics::max_staleness_ms() const {
    double mx = 0.0;
    for (double v : staleness_ms) mx = std::max(mx, v);
    return mx;
}

PollMetrics run_poll(const PollConfig& config, const SampleSink& sink,
                     std::vector<RetrievedSample>* collected) {
    PollMetrics m;
    std::string base, path;
    split_url(config.source_url, base, path);

    httplib::Client cli(base);
    const auto timeout = std::chrono::milliseconds(config.request_timeout_ms);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);

    const std::uint64_t polls = config.effective_polls();
    const double interval = static_cast<double>(config.interval_ms);
    const auto start = Clock::now();

    std::string prev_raw;
    bool have_prev = false;
    double last_change_at = 0.0;
    bool observed_change = false;

    double prev_send = 0.0;
    double prev_completion = 0.0;
    bool first = true;

    for (;;) {
        if (config.stop && config.stop->load(std::memory_order_relaxed)) break;
        const double send_at = first ? 0.0 : next_sync_send_ms(prev_send, prev_completion, interval);
        const std::uint64_t tick = tick_index_at(send_at, interval);
        if (tick >= polls) break;
        first = false;

        if (send_at > ms_since(start)) {
            const auto deadline =
                start + std::chrono::duration_cast<Clock::duration>(
                            std::chrono::duration<double, std::milli>(send_at));
            std::this_thread::sleep_until(deadline);
        }

        ++m.polls_attempted;
        const auto res = cli.Get(path);
        const double received_at = ms_since(start);
        prev_send = send_at;
        prev_completion = received_at;

        if (!res || res->status < 200 || res->status >= 300) {
            ++m.transport_failures;
            continue;
        }
        const std::string& body = res->body;
        if (body.empty()) {
            ++m.empty_body_polls;
            if (observed_change) m.staleness_ms.push_back(received_at - last_change_at);
            continue;
        }
        const DecodeResult dec = decode_record(body);
        if (!dec.ok) {
            ++m.decode_failures_total;
            ++m.decode_failures[std::string(to_string(dec.error))];
            if (observed_change) m.staleness_ms.push_back(received_at - last_change_at);
            continue;
        }

        ++m.polls_succeeded;
        RetrievedSample s;
        s.triple = dec.value;
        s.received_at_ms = received_at;
        s.raw = body;
        s.changed = !have_prev || body != prev_raw;
        if (s.changed) {
            ++m.distinct_versions_observed;
            last_change_at = received_at;
            observed_change = true;
        } else {
            ++m.unchanged_polls;
        }
        m.staleness_ms.push_back(received_at - last_change_at);
        prev_raw = body;
        have_prev = true;

        if (sink) sink(s);
        if (collected) collected->push_back(std::move(s));
    }
    return m;
}

std::string csv_header() { return "received_at_ms,x,y,z,changed"; }

std::string csv_row(const RetrievedSample& s) {
    char t[32];
    std::snprintf(t, sizeof(t), "%.3f", s.received_at_ms);
    std::string row = t;
    row += ',';
    row += format_number(s.triple.x);
    row += ',';
    row += format_number(s.triple.y);
    row += ',';
    row += format_number(s.triple.z);
    row += ',';
    row += s.changed ? "true" : "false";
    return row;
}

void emit_stream(std::ostream& out, const std::vector<RetrievedSample>& samples,
                 StreamFormat format) {
    if (format == StreamFormat::Csv) {
        out << csv_header() << '\n';
        for (const RetrievedSample& s : samples) out << csv_row(s) << '\n';
    } else {
        for (const RetrievedSample& s : samples) {
            out << format_number(s.triple.x) << ' ' << format_number(s.triple.y) << ' '
                << format_number(s.triple.z) << '\n';
        }
    }
}

void write_poll_metrics(std::ostream& out, const PollConfig& config, const PollMetrics& m) {
    out << "[summary]\n";
    out << "interval_ms=" << config.interval_ms << '\n';
    out << "polls_attempted=" << m.polls_attempted << '\n';
    out << "transport_failures=" << m.transport_failures << '\n';
    out << "empty_body_polls=" << m.empty_body_polls << '\n';
    out << "decode_failures=" << m.decode_failures_total << '\n';
    for (const auto& [kind, count] : m.decode_failures) {
        out << "decode_failures." << kind << '=' << count << '\n';
    }
    out << "polls_succeeded=" << m.polls_succeeded << '\n';
    out << "distinct_versions_observed=" << m.distinct_versions_observed << '\n';
    out << "unchanged_polls=" << m.unchanged_polls << '\n';
    char buf[48];
    std::snprintf(buf, sizeof(buf), "max_staleness_ms=%.3f\n", m.max_staleness_ms());
    out << buf;
}

}  // namespace relaykit
