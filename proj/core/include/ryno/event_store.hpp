#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "ryno/assessment.hpp"
#include "ryno/session.hpp"

namespace ryno {

// Durable home of the event log and uploaded survey responses.
//
// append() is all-or-nothing for its batch: when it throws, nothing from the
// batch is visible to later loads and the expected sequence numbers are
// unchanged.
class EventStore {
public:
    virtual ~EventStore() = default;

    // Throws IntegrityError when a record's sequence is not last+1 for its
    // session, StorageError when the write fails.
    virtual void append(std::span<const EventRecord> events) = 0;
    virtual void append_response(const assessment::ResponseRecord& record) = 0;

    // Everything persisted so far, in append order.
    virtual std::vector<EventRecord> load_events() const = 0;
    virtual std::vector<assessment::ResponseRecord> load_responses() const = 0;

    virtual std::uint64_t last_sequence(const std::string& session_id) const = 0;
};

// Shared sequence bookkeeping for concrete stores.
class SequenceTracker {
public:
    // Validates the batch against the current tail and returns the updated
    // tails without committing them.
    std::map<std::string, std::uint64_t> check(std::span<const EventRecord> events) const;
    void commit(std::map<std::string, std::uint64_t> tails);
    void observe(const EventRecord& e);
    std::uint64_t last(const std::string& session_id) const;

private:
    std::map<std::string, std::uint64_t> last_;
};

class MemoryEventStore final : public EventStore {
public:
    void append(std::span<const EventRecord> events) override;
    void append_response(const assessment::ResponseRecord& record) override;
    std::vector<EventRecord> load_events() const override;
    std::vector<assessment::ResponseRecord> load_responses() const override;
    std::uint64_t last_sequence(const std::string& session_id) const override;

private:
    mutable std::mutex mutex_;
    SequenceTracker seq_;
    std::vector<EventRecord> events_;
    std::vector<assessment::ResponseRecord> responses_;
};

// Line-delimited JSON under `root`:
//   events/YYYY-MM-DD.jsonl     one event per line, file picked by event timestamp (UTC)
//   responses/YYYY-MM-DD.jsonl  one ResponseRecord per line
// Each batch is written with a single write() per file and fsync'd before
// append() returns. A torn final line left by a crash is ignored on load.
class FileEventStore final : public EventStore {
public:
    explicit FileEventStore(std::filesystem::path root);

    void append(std::span<const EventRecord> events) override;
    void append_response(const assessment::ResponseRecord& record) override;
    std::vector<EventRecord> load_events() const override;
    std::vector<assessment::ResponseRecord> load_responses() const override;
    std::uint64_t last_sequence(const std::string& session_id) const override;

    const std::filesystem::path& root() const noexcept { return root_; }

private:
    std::vector<std::string> read_lines(const std::filesystem::path& dir) const;

    std::filesystem::path root_;
    mutable std::mutex mutex_;
    SequenceTracker seq_;
};

// Decorator that fails on demand; used to exercise the at-most-once path.
class FaultInjectingStore final : public EventStore {
public:
    explicit FaultInjectingStore(std::shared_ptr<EventStore> inner) : inner_(std::move(inner)) {}

    // The next `count` appends throw StorageError.
    void fail_next(int count) { failures_ = count; }

    void append(std::span<const EventRecord> events) override;
    void append_response(const assessment::ResponseRecord& record) override;
    std::vector<EventRecord> load_events() const override { return inner_->load_events(); }
    std::vector<assessment::ResponseRecord> load_responses() const override { return inner_->load_responses(); }
    std::uint64_t last_sequence(const std::string& session_id) const override {
        return inner_->last_sequence(session_id);
    }

private:
    bool take_failure();

    std::shared_ptr<EventStore> inner_;
    std::atomic<int> failures_{0};
};

}  // namespace ryno
