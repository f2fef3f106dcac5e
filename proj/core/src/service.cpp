#include "relaykit/service.hpp"

#include <atomic>
#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "relaykit/codec.hpp"

namespace relaykit {

namespace {

std::uint64_t wall_clock_ms() {
    return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                          std::chrono::system_clock::now().time_since_epoch())
                                          .count());
}

// The raw query part of the request target, undecoded.
std::string_view raw_query(const httplib::Request& req) {
    const std::string_view target = req.target;
    const std::size_t q = target.find('?');
    return q == std::string_view::npos ? std::string_view{} : target.substr(q + 1);
}

}  // namespace

std::string ServiceConfig::validate() const {
    if (ingest_path.empty() || fetch_path.empty()) return "paths must be non-empty";
    if (ingest_path == fetch_path) return "ingest and fetch paths must be distinct";
    if (ingest_path.front() != '/' || fetch_path.front() != '/') {
        return "paths must start with '/'";
    }
    if (persistence == Persistence::FileBacked && store_file.empty()) {
        return "file-backed persistence requires a store file path";
    }
    return {};
}

struct TelemetryService::Impl {
    ServiceConfig config;
    std::unique_ptr<LastValueStore> store;
    httplib::Server server;
    std::thread thread;
    std::atomic<int> bound_port{-1};

    explicit Impl(const ServiceConfig& cfg) : config(cfg) {
        store = cfg.persistence == Persistence::FileBacked
                    ? std::make_unique<LastValueStore>(cfg.store_file)
                    : std::make_unique<LastValueStore>();
        wire_routes();
    }

    void wire_routes() {
        server.Get(config.ingest_path, [this](const httplib::Request& req, httplib::Response& res) {
            handle_ingest(req, res);
        });
        server.Get(config.fetch_path, [this](const httplib::Request&, httplib::Response& res) {
            res.status = 200;
            res.set_content(store->read(), "application/octet-stream");
        });
        server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
            nlohmann::json doc;
            doc["write_count"] = store->write_count();
            doc["last_write_ms"] = store->last_write_ms();
            doc["persistence"] =
                config.persistence == Persistence::FileBacked ? "file_backed" : "memory_only";
            res.status = 200;
            res.set_content(doc.dump(), "application/json");
        });

        const auto method_not_allowed = [](const httplib::Request&, httplib::Response& res) {
            res.status = 405;
        };
        for (const std::string& path : {config.ingest_path, config.fetch_path}) {
            server.Post(path, method_not_allowed);
            server.Put(path, method_not_allowed);
            server.Delete(path, method_not_allowed);
            server.Patch(path, method_not_allowed);
        }
    }

    void handle_ingest(const httplib::Request& req, httplib::Response& res) {
        const QueryResult q = parse_query(raw_query(req));
        if (!q.ok) {
            if (q.error == QueryError::MissingSubmitMarker) {
                // Mirror of the silent guard: nothing stored, nothing said.
                res.status = 200;
            } else {
                res.status = 400;
                res.set_content(std::string(to_string(q.error)) + ": " + q.field, "text/plain");
            }
            return;
        }
        if (!store->commit(encode_record(q.value), wall_clock_ms())) {
            res.status = 500;
            res.set_content("store write failure", "text/plain");
            return;
        }
        res.status = 200;  // success carries no body
    }

    bool bind() {
        // No SO_REUSEPORT: a second instance on the same port must fail
        // its bind instead of silently splitting the traffic.
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes),
                         sizeof(yes));
        });
        if (config.port == 0) {
            const int p = server.bind_to_any_port(config.bind_address);
            if (p <= 0) return false;
            bound_port = p;
        } else {
            if (!server.bind_to_port(config.bind_address, config.port)) return false;
            bound_port = config.port;
        }
        return true;
    }
};

TelemetryService::TelemetryService(const ServiceConfig& config)
    : impl_(std::make_unique<Impl>(config)) {}

TelemetryService::~TelemetryService() { stop(); }

bool TelemetryService::start() {
    if (!impl_->bind()) return false;
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    while (!impl_->server.is_running()) {
        if (std::chrono::steady_clock::now() > deadline) return false;
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    return true;
}

void TelemetryService::request_stop() { impl_->server.stop(); }

void TelemetryService::wait() {
    if (impl_->thread.joinable()) impl_->thread.join();
}

void TelemetryService::stop() {
    request_stop();
    wait();
}

int TelemetryService::port() const { return impl_->bound_port.load(); }

const ServiceConfig& TelemetryService::config() const { return impl_->config; }

const LastValueStore& TelemetryService::store() const { return *impl_->store; }

}  // namespace relaykit
