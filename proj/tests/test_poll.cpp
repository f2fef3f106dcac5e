#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <charconv>
#include <chrono>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include <httplib.h>

#include "relaykit/poll.hpp"

using namespace relaykit;

namespace {

// Fetch endpoint whose body is scripted from the test.
class ScriptedSource {
  public:
    ScriptedSource() {
        server_.Get("/maina.dat", [this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard<std::mutex> lock(mu_);
            res.status = 200;
            res.set_content(body_, "application/octet-stream");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        while (!server_.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }

    ~ScriptedSource() {
        server_.stop();
        thread_.join();
    }

    void set_body(std::string body) {
        std::lock_guard<std::mutex> lock(mu_);
        body_ = std::move(body);
    }

    std::string url() const {
        return "http://127.0.0.1:" + std::to_string(port_) + "/maina.dat";
    }

  private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::mutex mu_;
    std::string body_;
};

PollConfig config_for(const ScriptedSource& src) {
    PollConfig cfg;
    cfg.source_url = src.url();
    cfg.interval_ms = 10;
    cfg.request_timeout_ms = 1000;
    return cfg;
}

}  // namespace

TEST_CASE("config validation") {
    PollConfig cfg;
    CHECK_FALSE(cfg.validate().empty());  // no limit
    cfg.poll_limit = 5;
    CHECK(cfg.validate().empty());
    cfg.interval_ms = 0;
    CHECK_FALSE(cfg.validate().empty());
    cfg = PollConfig{};
    cfg.source_url = "no-scheme";
    cfg.poll_limit = 1;
    CHECK_FALSE(cfg.validate().empty());
}

TEST_CASE("first observation counts as changed") {
    ScriptedSource src;
    src.set_body("1<br>2<br>3");
    PollConfig cfg = config_for(src);
    cfg.poll_limit = 1;

    std::vector<RetrievedSample> samples;
    const PollMetrics m = run_poll(cfg, nullptr, &samples);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].triple == Triple{1.0, 2.0, 3.0});
    CHECK(samples[0].changed);
    CHECK(m.distinct_versions_observed == 1);
    CHECK(m.polls_succeeded == 1);
}

TEST_CASE("unchanged store yields unchanged polls") {
    ScriptedSource src;
    src.set_body("1<br>2<br>3");
    PollConfig cfg = config_for(src);
    cfg.poll_limit = 2;

    std::vector<RetrievedSample> samples;
    const PollMetrics m = run_poll(cfg, nullptr, &samples);
    REQUIRE(samples.size() == 2);
    CHECK(samples[0].changed);
    CHECK_FALSE(samples[1].changed);
    CHECK(m.unchanged_polls == 1);
    CHECK(m.distinct_versions_observed == 1);
}

TEST_CASE("empty body polls are counted separately") {
    ScriptedSource src;
    PollConfig cfg = config_for(src);
    cfg.poll_limit = 3;

    std::vector<RetrievedSample> samples;
    const PollMetrics m = run_poll(cfg, nullptr, &samples);
    CHECK(samples.empty());
    CHECK(m.empty_body_polls == 3);
    CHECK(m.polls_succeeded == 0);
    CHECK(m.polls_attempted == 3);
}

TEST_CASE("decode failures are counted by kind and the loop continues") {
    ScriptedSource src;
    src.set_body("not-a-record");
    PollConfig cfg = config_for(src);
    cfg.poll_limit = 4;

    std::vector<RetrievedSample> samples;
    const PollMetrics m = run_poll(cfg, nullptr, &samples);
    CHECK(samples.empty());
    CHECK(m.polls_attempted == 4);
    CHECK(m.decode_failures_total == 4);
    CHECK(m.decode_failures.at("WrongFieldCount") == 4);

    src.set_body("1<br>x<br>3");
    const PollMetrics m2 = run_poll(cfg, nullptr, nullptr);
    CHECK(m2.decode_failures.at("NotNumeric") == 4);
}

TEST_CASE("changed flag follows byte-level transitions") {
    ScriptedSource src;
    src.set_body("1<br>0<br>0");
    PollConfig cfg = config_for(src);
    cfg.interval_ms = 20;
    cfg.poll_limit = 6;

    std::thread flipper([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        src.set_body("2<br>0<br>0");
    });
    std::vector<RetrievedSample> samples;
    const PollMetrics m = run_poll(cfg, nullptr, &samples);
    flipper.join();

    REQUIRE(samples.size() == 6);
    CHECK(m.distinct_versions_observed == 2);
    CHECK(m.unchanged_polls == 4);
    // Metric consistency: every completed poll lands in exactly one bucket.
    CHECK(m.distinct_versions_observed + m.unchanged_polls + m.empty_body_polls +
              m.decode_failures_total ==
          m.polls_completed());
}

TEST_CASE("staleness is measured from the last observed change") {
    ScriptedSource src;
    src.set_body("1<br>0<br>0");
    PollConfig cfg = config_for(src);
    cfg.interval_ms = 10;
    cfg.poll_limit = 8;

    const PollMetrics m = run_poll(cfg, nullptr, nullptr);
    REQUIRE_FALSE(m.staleness_ms.empty());
    CHECK(m.staleness_ms.front() == 0.0);  // the change itself
    CHECK(m.max_staleness_ms() >= 50.0);   // ~7 unchanged polls later
}

TEST_CASE("unreachable source counts transport failures and continues") {
    PollConfig cfg;
    cfg.source_url = "http://127.0.0.1:9/maina.dat";
    cfg.interval_ms = 5;
    cfg.poll_limit = 4;
    cfg.request_timeout_ms = 200;

    const PollMetrics m = run_poll(cfg, nullptr, nullptr);
    CHECK(m.polls_attempted == 4);
    CHECK(m.transport_failures == 4);
    CHECK(m.polls_completed() == 0);
}

TEST_CASE("stop flag ends an unbounded poll loop") {
    ScriptedSource src;
    src.set_body("1<br>2<br>3");
    PollConfig cfg = config_for(src);
    cfg.poll_limit = 0;
    cfg.duration_ms = 0;
    std::atomic<bool> stop{false};
    cfg.stop = &stop;

    std::thread stopper([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(80));
        stop = true;
    });
    const PollMetrics m = run_poll(cfg, nullptr, nullptr);
    stopper.join();
    CHECK(m.polls_attempted >= 2);
}

TEST_CASE("csv stream round-trips the triples") {
    std::vector<RetrievedSample> samples;
    RetrievedSample a;
    a.triple = Triple{1.5, -2.25, 9.81};
    a.received_at_ms = 12.345;
    a.changed = true;
    samples.push_back(a);
    RetrievedSample b;
    b.triple = Triple{0.0, 100.0, -0.001};
    b.received_at_ms = 22.5;
    b.changed = false;
    samples.push_back(b);

    std::ostringstream out;
    emit_stream(out, samples, StreamFormat::Csv);
    std::istringstream in(out.str());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "received_at_ms,x,y,z,changed");

    // Re-parse data rows with an independent splitter.
    std::size_t row = 0;
    while (std::getline(in, line)) {
        std::vector<std::string> cols;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            cols.push_back(line.substr(pos, comma - pos));
            if (comma == line.size()) break;
            pos = comma + 1;
        }
        REQUIRE(cols.size() == 5);
        const Triple t{*parse_number(cols[1]), *parse_number(cols[2]), *parse_number(cols[3])};
        CHECK(t == samples[row].triple);
        CHECK(cols[4] == (samples[row].changed ? "true" : "false"));
        ++row;
    }
    CHECK(row == samples.size());
}

TEST_CASE("empty stream emits the header row only") {
    std::ostringstream out;
    emit_stream(out, {}, StreamFormat::Csv);
    CHECK(out.str() == "received_at_ms,x,y,z,changed\n");
}

TEST_CASE("lines format mirrors the relay echo") {
    std::vector<RetrievedSample> samples;
    RetrievedSample a;
    a.triple = Triple{0.0, 0.0, 9.81};
    samples.push_back(a);
    std::ostringstream out;
    emit_stream(out, samples, StreamFormat::Lines);
    CHECK(out.str() == "0 0 9.81\n");
}

TEST_CASE("metrics summary document") {
    ScriptedSource src;
    src.set_body("1<br>2<br>3");
    PollConfig cfg = config_for(src);
    cfg.poll_limit = 3;
    const PollMetrics m = run_poll(cfg, nullptr, nullptr);

    std::ostringstream out;
    write_poll_metrics(out, cfg, m);
    const std::string doc = out.str();
    CHECK(doc.find("[summary]") == 0);
    CHECK(doc.find("polls_attempted=3") != std::string::npos);
    CHECK(doc.find("distinct_versions_observed=1") != std::string::npos);
}
