#pragma once

#include <cstdint>
#include <mutex>
#include <string>

namespace relaykit {

enum class Persistence {
    MemoryOnly,
    FileBacked,
};

/// Single-slot last-value store. Every commit replaces the whole record;
/// readers only ever observe committed states. File-backed commits go
/// through write-temp-then-rename, so a restart recovers the last record
/// that was fully committed.
class LastValueStore {
  public:
    /// Memory-only store.
    LastValueStore();

    /// File-backed store; loads the file's current content if it exists.
    explicit LastValueStore(std::string file_path);

    LastValueStore(const LastValueStore&) = delete;
    LastValueStore& operator=(const LastValueStore&) = delete;

    /// Atomically replace the record. Returns false (store unchanged) when
    /// the file-backed commit cannot complete.
    bool commit(std::string record, std::uint64_t wall_ms);

    /// Committed record bytes; empty if never written.
    std::string read() const;

    std::uint64_t write_count() const;
    std::uint64_t last_write_ms() const;
    Persistence persistence() const { return persistence_; }
    const std::string& file_path() const { return file_path_; }

  private:
    Persistence persistence_;
    std::string file_path_;

    mutable std::mutex mu_;
    std::string record_;
    std::uint64_t write_count_ = 0;
    std::uint64_t last_write_ms_ = 0;
};

}  // namespace relaykit
