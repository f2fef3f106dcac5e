#include "relaykit/sweep.hpp"

#include <charconv>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace relaykit {

namespace {

bool parse_u64(std::string_view text, std::uint64_t& out) {
    if (text.empty()) return false;
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

std::vector<std::string> split_csv(std::string_view text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string_view::npos) comma = text.size();
        out.emplace_back(text.substr(pos, comma - pos));
        if (comma == text.size()) break;
        pos = comma + 1;
    }
    return out;
}

// Latency values carry commas ("uniform:0,40"), so its list splits on
// whitespace instead.
std::vector<std::string> split_ws(std::string_view text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && text[pos] == ' ') ++pos;
        if (pos >= text.size()) break;
        std::size_t end = text.find(' ', pos);
        if (end == std::string_view::npos) end = text.size();
        out.emplace_back(text.substr(pos, end - pos));
        pos = end;
    }
    return out;
}

bool apply_key(SimConfig& cfg, const std::string& key, const std::string& value,
               std::string& error) {
    if (key == "relay-interval-ms") {
        if (!parse_u64(value, cfg.relay_interval_ms)) {
            error = "bad relay-interval-ms: " + value;
            return false;
        }
    } else if (key == "poll-interval-ms") {
        if (!parse_u64(value, cfg.poll_interval_ms)) {
            error = "bad poll-interval-ms: " + value;
            return false;
        }
    } else if (key == "duration-ms") {
        if (!parse_u64(value, cfg.duration_ms)) {
            error = "bad duration-ms: " + value;
            return false;
        }
    } else if (key == "seed") {
        if (!parse_u64(value, cfg.seed)) {
            error = "bad seed: " + value;
            return false;
        }
    } else if (key == "mode") {
        if (value == "sync") {
            cfg.mode = ChannelMode::Synchronous;
        } else if (value == "async") {
            cfg.mode = ChannelMode::Asynchronous;
        } else {
            error = "bad mode: " + value;
            return false;
        }
    } else if (key == "latency") {
        const auto m = LatencyModel::parse(value);
        if (!m) {
            error = "bad latency: " + value;
            return false;
        }
        cfg.latency = *m;
    } else if (key == "write-model") {
        const auto m = WriteModel::parse(value);
        if (!m) {
            error = "bad write-model: " + value;
            return false;
        }
        cfg.write_model = *m;
    } else if (key == "trace") {
        const auto t = parse_trace_spec(value);
        if (!t) {
            error = "bad trace: " + value;
            return false;
        }
        const std::uint64_t seed = cfg.trace.seed;
        cfg.trace = *t;
        cfg.trace.seed = seed;
    } else {
        error = "unknown grid key: " + key;
        return false;
    }
    return true;
}

}  // namespace

std::vector<SimConfig> parse_grid(const std::string& text, const SimConfig& base,
                                  std::string* error) {
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;

    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\r' || line.back() == '\t'))
            line.pop_back();
        std::size_t begin = 0;
        while (begin < line.size() && (line[begin] == ' ' || line[begin] == '\t')) ++begin;
        line.erase(0, begin);
        if (line.empty()) continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            if (error) {
                *error = "grid line " + std::to_string(lineno) + ": expected key=value";
            }
            return {};
        }
        const std::string key = line.substr(0, eq);
        const std::string values = line.substr(eq + 1);
        std::vector<std::string> list =
            key == "latency" ? split_ws(values) : split_csv(values);
        if (list.empty() || (list.size() == 1 && list[0].empty())) {
            if (error) *error = "grid line " + std::to_string(lineno) + ": empty value list";
            return {};
        }
        axes.emplace_back(key, std::move(list));
    }

    if (axes.empty()) {
        if (error) *error = "grid file has no axes";
        return {};
    }

    std::vector<SimConfig> cells{base};
    for (const auto& [key, values] : axes) {
        std::vector<SimConfig> expanded;
        expanded.reserve(cells.size() * values.size());
        for (const SimConfig& cell : cells) {
            for (const std::string& value : values) {
                SimConfig next = cell;
                std::string err;
                if (!apply_key(next, key, value, err)) {
                    if (error) *error = err;
                    return {};
                }
                expanded.push_back(std::move(next));
            }
        }
        cells = std::move(expanded);
    }
    return cells;
}

std::vector<SweepCell> sweep(const std::vector<SimConfig>& cells) {
    if (cells.empty()) throw std::invalid_argument("sweep requires a non-empty grid");
    std::vector<SweepCell> out;
    out.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (const std::string err = cells[i].validate(); !err.empty()) {
            throw std::invalid_argument("sweep cell " + std::to_string(i) + ": " + err);
        }
        out.push_back(SweepCell{cells[i], run_sim(cells[i])});
    }
    return out;
}

namespace {

std::vector<std::string> report_row(const SweepCell& cell) {
    return {
        std::string(to_string(cell.config.mode)),
        cell.config.latency.text(),
        cell.config.write_model.text(),
        std::to_string(cell.metrics.relay.overlap_events),
        std::to_string(cell.metrics.torn_read_count),
        std::to_string(cell.metrics.out_of_order_commits),
        std::to_string(cell.metrics.versions_relayed),
        std::to_string(cell.metrics.versions_observed),
        format_number(cell.metrics.max_staleness_ms),
    };
}

constexpr const char* kColumns[] = {
    "mode",           "latency",         "write_model",
    "overlap_events", "torn_read_count", "out_of_order_commits",
    "versions_relayed", "versions_observed", "max_staleness_ms",
};

}  // namespace

void write_report(std::ostream& out, const std::vector<SweepCell>& cells, ReportFormat format) {
    constexpr std::size_t n = sizeof(kColumns) / sizeof(kColumns[0]);
    if (format == ReportFormat::Csv) {
        for (std::size_t i = 0; i < n; ++i) out << (i ? "," : "") << kColumns[i];
        out << '\n';
        for (const SweepCell& cell : cells) {
            const auto row = report_row(cell);
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
            out << '\n';
        }
    } else {
        out << '|';
        for (const char* col : kColumns) out << ' ' << col << " |";
        out << "\n|";
        for (std::size_t i = 0; i < n; ++i) out << " --- |";
        out << '\n';
        for (const SweepCell& cell : cells) {
            out << '|';
            for (const std::string& v : report_row(cell)) out << ' ' << v << " |";
            out << '\n';
        }
    }
}

}  // namespace relaykit
