#include "relaykit/store.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace relaykit {

LastValueStore::LastValueStore() : persistence_(Persistence::MemoryOnly) {}

LastValueStore::LastValueStore(std::string file_path)
    : persistence_(Persistence::FileBacked), file_path_(std::move(file_path)) {
    std::ifstream in(file_path_, std::ios::binary);
    if (in) {
        record_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
}

bool LastValueStore::commit(std::string record, std::uint64_t wall_ms) {
    std::lock_guard<std::mutex> lock(mu_);
    if (persistence_ == Persistence::FileBacked) {
        const std::string tmp = file_path_ + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) return false;
            out.write(record.data(), static_cast<std::streamsize>(record.size()));
            out.flush();
            if (!out) {
                std::error_code ec;
                std::filesystem::remove(tmp, ec);
                return false;
            }
        }
        std::error_code ec;
        std::filesystem::rename(tmp, file_path_, ec);
        if (ec) {
            std::filesystem::remove(tmp, ec);
            return false;
        }
    }
    record_ = std::move(record);
    ++write_count_;
    last_write_ms_ = wall_ms;
    return true;
}

std::string LastValueStore::read() const {
    std::lock_guard<std::mutex> lock(mu_);
    return record_;
}

std::uint64_t LastValueStore::write_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return write_count_;
}

std::uint64_t LastValueStore::last_write_ms() const {
    std::lock_guard<std::mutex> lock(mu_);
    return last_write_ms_;
}

}  // namespace relaykit
