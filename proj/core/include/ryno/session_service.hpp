#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "ryno/assessment.hpp"
#include "ryno/dataset.hpp"
#include "ryno/event_store.hpp"
#include "ryno/narrative.hpp"
#include "ryno/report.hpp"

namespace ryno {

struct ServiceOptions {
    // Sessions untouched for longer than this are closed with reason
    // "expired". Zero disables expiry.
    std::chrono::milliseconds idle_timeout{0};
};

struct ExportFilter {
    std::optional<std::string> campaign_id;
    std::optional<std::int64_t> from_ms;  // inclusive
    std::optional<std::int64_t> to_ms;    // exclusive
};

struct AdvanceResult {
    SessionState state;
    std::vector<EventRecord> events;
    bool changed = false;
};

struct SessionSnapshot {
    SessionState state;
    std::vector<EventRecord> events;
};

// Owns live sessions. Operations on one session are serialized by a
// per-session mutex; events are persisted before the new state becomes
// visible, so a storage failure leaves the session exactly as it was.
class SessionService {
public:
    SessionService(std::shared_ptr<const NarrativeEngine> engine, assessment::InstrumentRegistry registry,
                   std::shared_ptr<EventStore> store, Clock clock = system_clock(), ServiceOptions options = {});

    // Rebuilds every session from the store. Call once before serving.
    // Returns the number of sessions restored.
    std::size_t recover();

    Transition create_session(const std::string& participant_id, std::uint64_t seed,
                              std::optional<std::string> session_id = std::nullopt);
    TurnResult post_message(const std::string& session_id, const std::string& text);
    // `expected_from` makes acknowledgements idempotent: when the session
    // has already left that phase, nothing happens and changed is false.
    AdvanceResult advance(const std::string& session_id, std::optional<Phase> expected_from = std::nullopt);
    assessment::NextItem current_item(const std::string& session_id);
    Transition answer(const std::string& session_id, const std::string& item_id, int option);

    SessionState state(const std::string& session_id);
    SessionSnapshot snapshot(const std::string& session_id);
    std::vector<std::string> session_ids() const;

    // Pre/post survey upload; validated against the registry and kept durably.
    void upload_response(assessment::ResponseRecord record);

    stats::Dataset export_dataset(const ExportFilter& filter = {}) const;
    std::string export_responses_csv(const ExportFilter& filter = {}) const;

    // Closes idle sessions; returns how many were expired.
    std::size_t expire_idle();

    const NarrativeEngine& engine() const noexcept { return *engine_; }
    const assessment::InstrumentRegistry& registry() const noexcept { return registry_; }

private:
    struct Entry {
        std::mutex mutex;
        SessionState state;
        std::vector<EventRecord> log;
    };

    std::shared_ptr<Entry> find(const std::string& session_id) const;
    // Persist, then adopt. Caller holds entry->mutex.
    void commit(Entry& entry, const SessionState& next, const std::vector<EventRecord>& events);
    // Expires the session if it has idled out. Caller holds entry->mutex.
    void expire_if_idle(Entry& entry);
    std::string new_session_id();

    std::shared_ptr<const NarrativeEngine> engine_;
    assessment::InstrumentRegistry registry_;
    std::shared_ptr<EventStore> store_;
    Clock clock_;
    ServiceOptions options_;

    mutable std::shared_mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;

    mutable std::mutex responses_mutex_;
    std::vector<assessment::ResponseRecord> responses_;
    std::uint64_t id_counter_ = 0;
};

}  // namespace ryno
