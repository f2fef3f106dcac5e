// relaykit: sensor telemetry relay over a single-slot HTTP store, plus a
// deterministic simulator of its timing behaviour.
//
// Subcommands: serve | relay | poll | sim | sweep | e2e.
// Every flag can also be set through an environment variable named
// RELAYKIT_<SUBCOMMAND>_<FLAG> (dashes become underscores).
// Exit codes: 0 success, 1 verification failure, 2 usage error, 3 runtime
// or bind error.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "relaykit/e2e.hpp"
#include "relaykit/poll.hpp"
#include "relaykit/relay.hpp"
#include "relaykit/service.hpp"
#include "relaykit/sim.hpp"
#include "relaykit/sweep.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerificationFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

relaykit::TelemetryService* g_service = nullptr;

void handle_signal(int) {
    if (g_service) g_service->request_stop();
}

std::string env_name(const std::string& subcommand, const std::string& flag) {
    std::string name = "RELAYKIT_" + subcommand + "_" + flag;
    for (char& c : name) {
        if (c == '-') c = '_';
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return name;
}

// Adds the env fallback for --long-flag style names.
CLI::Option* with_env(CLI::Option* opt, const std::string& subcommand) {
    std::string flag = opt->get_name(false, true);
    if (flag.rfind("--", 0) == 0) flag.erase(0, 2);
    opt->envname(env_name(subcommand, flag));
    return opt;
}

bool write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out << content;
    out.flush();
    return static_cast<bool>(out);
}

struct TraceFlags {
    std::string trace = "constant";
    std::uint64_t seed = 0;
    double walk_stddev = 0.5;
    double clamp = relaykit::kDefaultClampBound;
    bool replay_wrap = false;

    void add_to(CLI::App* cmd, const std::string& sub, bool add_seed = true) {
        with_env(cmd->add_option("--trace", trace,
                                 "Sample source: constant|sinusoid|walk|replay:PATH"),
                 sub);
        if (add_seed) {
            with_env(cmd->add_option("--seed", seed, "Trace RNG seed"), sub);
        }
        with_env(cmd->add_option("--walk-stddev", walk_stddev, "Walk step stddev (m/s^2)"), sub);
        with_env(cmd->add_option("--clamp", clamp, "Per-axis clamp bound (m/s^2)"), sub);
        with_env(cmd->add_flag("--replay-wrap", replay_wrap, "Wrap an exhausted replay trace"),
                 sub);
    }

    bool resolve(relaykit::TraceSpec& spec, std::string& err) const {
        const auto parsed = relaykit::parse_trace_spec(trace);
        if (!parsed) {
            err = "unrecognized --trace value: " + trace;
            return false;
        }
        spec = *parsed;
        spec.seed = seed;
        spec.step_stddev = walk_stddev;
        spec.clamp_bound = clamp;
        spec.replay_wrap = replay_wrap;
        if (const std::string verr = spec.validate(); !verr.empty()) {
            err = verr;
            return false;
        }
        if (spec.kind == relaykit::TraceKind::Replay &&
            !relaykit::load_replay_file(spec.replay_path, &err)) {
            return false;
        }
        return true;
    }
};

int cmd_serve(const relaykit::ServiceConfig& config) {
    if (const std::string err = config.validate(); !err.empty()) {
        std::cerr << "serve: " << err << '\n';
        return kExitUsage;
    }
    relaykit::TelemetryService service(config);
    if (!service.start()) {
        std::cerr << "serve: cannot bind " << config.bind_address << ":" << config.port << '\n';
        return kExitRuntime;
    }
    g_service = &service;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    std::cerr << "serving " << config.ingest_path << " and " << config.fetch_path << " on "
              << config.bind_address << ":" << service.port() << '\n';
    service.wait();
    g_service = nullptr;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sensor telemetry relay pipeline"};
    app.require_subcommand(1);

    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Print the effective configuration to stderr");

    // serve
    auto* serve = app.add_subcommand("serve", "Run the web host node");
    relaykit::ServiceConfig service_config;
    std::string persistence = "file";
    with_env(serve->add_option("--bind", service_config.bind_address, "Bind address"), "serve");
    with_env(serve->add_option("--port", service_config.port, "Port (0 = ephemeral)"), "serve");
    with_env(serve->add_option("--ingest-path", service_config.ingest_path, "Ingest path"),
             "serve");
    with_env(serve->add_option("--fetch-path", service_config.fetch_path, "Fetch path"), "serve");
    with_env(serve->add_option("--store-file", service_config.store_file, "Store file path"),
             "serve");
    with_env(serve->add_option("--persistence", persistence, "file|memory"), "serve");

    // relay
    auto* relay = app.add_subcommand("relay", "Run the data relay node");
    relaykit::RelayConfig relay_config;
    std::string relay_mode = "sync";
    std::string relay_metrics_out;
    bool relay_quiet = false;
    TraceFlags relay_trace;
    with_env(relay->add_option("--endpoint", relay_config.endpoint, "Web host base URL"), "relay");
    with_env(relay->add_option("--ingest-path", relay_config.ingest_path, "Ingest path"), "relay");
    with_env(relay->add_option("--interval-ms", relay_config.interval_ms, "Tick period"), "relay");
    with_env(relay->add_option("--mode", relay_mode, "sync|async"), "relay");
    with_env(relay->add_option("--ticks", relay_config.tick_limit, "Grid ticks to run"), "relay");
    with_env(relay->add_option("--duration-ms", relay_config.duration_ms,
                               "Alternative run length"),
             "relay");
    with_env(relay->add_option("--max-inflight", relay_config.max_inflight,
                               "Async in-flight cap (0 = unbounded)"),
             "relay");
    with_env(relay->add_option("--timeout-ms", relay_config.request_timeout_ms,
                               "Per-request timeout"),
             "relay");
    with_env(relay->add_flag("--backoff", relay_config.backoff, "Exponential backoff on failure"),
             "relay");
    with_env(relay->add_flag("--quiet", relay_quiet, "Suppress per-sample echo"), "relay");
    with_env(relay->add_option("--metrics-out", relay_metrics_out, "Metrics file path"), "relay");
    relay_trace.add_to(relay, "relay");

    // poll
    auto* poll = app.add_subcommand("poll", "Run the data retrieval node");
    relaykit::PollConfig poll_config;
    std::string poll_format = "csv";
    std::string poll_metrics_out;
    with_env(poll->add_option("--source", poll_config.source_url, "Fetch URL"), "poll");
    with_env(poll->add_option("--interval-ms", poll_config.interval_ms, "Poll period"), "poll");
    with_env(poll->add_option("--polls", poll_config.poll_limit, "Polls to run"), "poll");
    with_env(poll->add_option("--duration-ms", poll_config.duration_ms,
                              "Alternative run length"),
             "poll");
    with_env(poll->add_option("--timeout-ms", poll_config.request_timeout_ms,
                              "Per-request timeout"),
             "poll");
    with_env(poll->add_option("--format", poll_format, "csv|lines"), "poll");
    with_env(poll->add_option("--metrics-out", poll_metrics_out, "Metrics file path"), "poll");

    // sim
    auto* sim = app.add_subcommand("sim", "Run the deterministic pipeline simulator");
    relaykit::SimConfig sim_config;
    std::string sim_mode = "sync";
    std::string sim_latency = "fixed:0";
    std::string sim_write_model = "atomic";
    std::string sim_report = "csv";
    std::string sim_out;
    TraceFlags sim_trace;
    sim_trace.trace = "walk";
    with_env(sim->add_option("--relay-interval-ms", sim_config.relay_interval_ms,
                             "Relay tick period"),
             "sim");
    with_env(sim->add_option("--mode", sim_mode, "sync|async"), "sim");
    with_env(sim->add_option("--poll-interval-ms", sim_config.poll_interval_ms, "Poll period"),
             "sim");
    with_env(sim->add_option("--latency", sim_latency,
                             "fixed:L | uniform:lo,hi | lognormal:mu,sigma"),
             "sim");
    with_env(sim->add_option("--write-model", sim_write_model, "atomic | torn:BYTES_PER_MS"),
             "sim");
    with_env(sim->add_option("--duration-ms", sim_config.duration_ms, "Virtual run length"),
             "sim");
    with_env(sim->add_option("--seed", sim_config.seed, "Simulation seed"), "sim");
    with_env(sim->add_option("--report", sim_report, "csv|md"), "sim");
    with_env(sim->add_option("--out", sim_out, "Report file (default stdout)"), "sim");
    sim_trace.add_to(sim, "sim", /*add_seed=*/false);

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a grid of simulator cells");
    std::string sweep_grid;
    std::string sweep_report = "csv";
    std::string sweep_out;
    std::uint64_t sweep_seed = 1;
    with_env(sweep_cmd->add_option("--grid", sweep_grid, "Grid file (key=value lines)")
                 ->required(),
             "sweep");
    with_env(sweep_cmd->add_option("--report", sweep_report, "csv|md"), "sweep");
    with_env(sweep_cmd->add_option("--out", sweep_out, "Report file (default stdout)"), "sweep");
    with_env(sweep_cmd->add_option("--seed", sweep_seed, "Base simulation seed"), "sweep");

    // e2e
    auto* e2e = app.add_subcommand("e2e", "Whole-pipeline loopback verification");
    relaykit::E2eConfig e2e_config;
    with_env(e2e->add_option("--relay-interval-ms", e2e_config.relay_interval_ms,
                             "Relay tick period"),
             "e2e");
    with_env(e2e->add_option("--poll-interval-ms", e2e_config.poll_interval_ms, "Poll period"),
             "e2e");
    with_env(e2e->add_option("--ticks", e2e_config.ticks, "Relay ticks"), "e2e");
    with_env(e2e->add_flag("--echo", e2e_config.echo, "Print relayed samples"), "e2e");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (verbose) {
            std::cerr << "subcommand: " << app.get_subcommands().front()->get_name() << '\n';
            for (const CLI::Option* opt : app.get_subcommands().front()->get_options()) {
                if (opt->count() > 0 && !opt->get_name().empty()) {
                    std::cerr << "  " << opt->get_name() << " = " << opt->as<std::string>()
                              << '\n';
                }
            }
        }
        if (serve->parsed()) {
            if (persistence == "memory") {
                service_config.persistence = relaykit::Persistence::MemoryOnly;
            } else if (persistence == "file") {
                service_config.persistence = relaykit::Persistence::FileBacked;
            } else {
                std::cerr << "serve: --persistence must be file or memory\n";
                return kExitUsage;
            }
            return cmd_serve(service_config);
        }

        if (relay->parsed()) {
            relay_config.mode = relay_mode == "async" ? relaykit::ChannelMode::Asynchronous
                                                      : relaykit::ChannelMode::Synchronous;
            if (relay_mode != "sync" && relay_mode != "async") {
                std::cerr << "relay: --mode must be sync or async\n";
                return kExitUsage;
            }
            if (const std::string err = relay_config.validate(); !err.empty()) {
                std::cerr << "relay: " << err << '\n';
                return kExitUsage;
            }
            relaykit::TraceSpec trace;
            std::string err;
            if (!relay_trace.resolve(trace, err)) {
                std::cerr << "relay: " << err << '\n';
                return kExitUsage;
            }
            const relaykit::RelayMetrics m =
                relaykit::run_relay(relay_config, trace, relay_quiet ? nullptr : &std::cout);
            std::ostringstream doc;
            relaykit::write_relay_metrics(doc, relay_config, m);
            if (!relay_metrics_out.empty()) {
                if (!write_text_file(relay_metrics_out, doc.str())) {
                    std::cerr << "relay: cannot write " << relay_metrics_out << '\n';
                    return kExitRuntime;
                }
            } else {
                std::cerr << doc.str();
            }
            return kExitOk;
        }

        if (poll->parsed()) {
            if (poll_format != "csv" && poll_format != "lines") {
                std::cerr << "poll: --format must be csv or lines\n";
                return kExitUsage;
            }
            if (const std::string err = poll_config.validate(); !err.empty()) {
                std::cerr << "poll: " << err << '\n';
                return kExitUsage;
            }
            const bool csv = poll_format == "csv";
            if (csv) std::cout << relaykit::csv_header() << '\n';
            const relaykit::PollMetrics m = relaykit::run_poll(
                poll_config, [&](const relaykit::RetrievedSample& s) {
                    if (csv) {
                        std::cout << relaykit::csv_row(s) << '\n';
                    } else {
                        std::cout << relaykit::format_number(s.triple.x) << ' '
                                  << relaykit::format_number(s.triple.y) << ' '
                                  << relaykit::format_number(s.triple.z) << '\n';
                    }
                });
            if (!std::cout) {
                std::cerr << "poll: output write failure\n";
                return kExitRuntime;
            }
            std::ostringstream doc;
            relaykit::write_poll_metrics(doc, poll_config, m);
            if (!poll_metrics_out.empty()) {
                if (!write_text_file(poll_metrics_out, doc.str())) {
                    std::cerr << "poll: cannot write " << poll_metrics_out << '\n';
                    return kExitRuntime;
                }
            } else {
                std::cerr << doc.str();
            }
            return kExitOk;
        }

        if (sim->parsed() || sweep_cmd->parsed()) {
            const bool is_sweep = sweep_cmd->parsed();
            std::vector<relaykit::SimConfig> cells;
            relaykit::ReportFormat format = relaykit::ReportFormat::Csv;
            std::string format_flag = is_sweep ? sweep_report : sim_report;
            std::string out_path = is_sweep ? sweep_out : sim_out;
            if (format_flag == "md") {
                format = relaykit::ReportFormat::Markdown;
            } else if (format_flag != "csv") {
                std::cerr << "--report must be csv or md\n";
                return kExitUsage;
            }

            if (is_sweep) {
                std::ifstream grid_file(sweep_grid);
                if (!grid_file) {
                    std::cerr << "sweep: cannot open grid file " << sweep_grid << '\n';
                    return kExitRuntime;
                }
                std::stringstream buf;
                buf << grid_file.rdbuf();
                relaykit::SimConfig base;
                base.seed = sweep_seed;
                base.trace.kind = relaykit::TraceKind::RandomWalk;  // same default as sim
                std::string err;
                cells = relaykit::parse_grid(buf.str(), base, &err);
                if (cells.empty()) {
                    std::cerr << "sweep: " << err << '\n';
                    return kExitUsage;
                }
            } else {
                sim_config.mode = sim_mode == "async" ? relaykit::ChannelMode::Asynchronous
                                                      : relaykit::ChannelMode::Synchronous;
                if (sim_mode != "sync" && sim_mode != "async") {
                    std::cerr << "sim: --mode must be sync or async\n";
                    return kExitUsage;
                }
                const auto latency = relaykit::LatencyModel::parse(sim_latency);
                if (!latency) {
                    std::cerr << "sim: bad --latency " << sim_latency << '\n';
                    return kExitUsage;
                }
                sim_config.latency = *latency;
                const auto write_model = relaykit::WriteModel::parse(sim_write_model);
                if (!write_model) {
                    std::cerr << "sim: bad --write-model " << sim_write_model << '\n';
                    return kExitUsage;
                }
                sim_config.write_model = *write_model;
                std::string err;
                if (!sim_trace.resolve(sim_config.trace, err)) {
                    std::cerr << "sim: " << err << '\n';
                    return kExitUsage;
                }
                if (const std::string verr = sim_config.validate(); !verr.empty()) {
                    std::cerr << "sim: " << verr << '\n';
                    return kExitUsage;
                }
                cells.push_back(sim_config);
            }

            const std::vector<relaykit::SweepCell> results = relaykit::sweep(cells);
            std::ostringstream doc;
            relaykit::write_report(doc, results, format);
            if (!out_path.empty()) {
                if (!write_text_file(out_path, doc.str())) {
                    std::cerr << "cannot write " << out_path << '\n';
                    return kExitRuntime;
                }
            } else {
                std::cout << doc.str();
            }
            return kExitOk;
        }

        if (e2e->parsed()) {
            const relaykit::E2eReport report = relaykit::run_e2e(e2e_config, &std::cout);
            return report.pass ? kExitOk : kExitVerificationFailure;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
