#include "ryno/session_service.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>

#include <spdlog/spdlog.h>

#include "ryno/error.hpp"
#include "ryno/text.hpp"

namespace ryno {

SessionService::SessionService(std::shared_ptr<const NarrativeEngine> engine, assessment::InstrumentRegistry registry,
                               std::shared_ptr<EventStore> store, Clock clock, ServiceOptions options)
    : engine_(std::move(engine)),
      registry_(std::move(registry)),
      store_(std::move(store)),
      clock_(std::move(clock)),
      options_(options) {
    if (!engine_ || !store_) throw ConfigError("session service: missing engine or store");
    if (!clock_) clock_ = system_clock();
}

std::size_t SessionService::recover() {
    std::map<std::string, std::vector<EventRecord>> logs;
    for (auto& e : store_->load_events()) logs[e.session_id].push_back(std::move(e));

    std::map<std::string, std::shared_ptr<Entry>> restored;
    for (auto& [id, log] : logs) {
        std::stable_sort(log.begin(), log.end(),
                         [](const EventRecord& a, const EventRecord& b) { return a.sequence < b.sequence; });
        auto entry = std::make_shared<Entry>();
        try {
            entry->state = replay(log);
        } catch (const ReplayError& e) {
            throw IntegrityError("session " + id + ": " + e.what());
        }
        entry->log = std::move(log);
        restored.emplace(id, std::move(entry));
    }
    auto responses = store_->load_responses();

    std::unique_lock lock(sessions_mutex_);
    sessions_ = std::move(restored);
    {
        std::lock_guard rl(responses_mutex_);
        responses_ = std::move(responses);
    }
    spdlog::info("recovered {} sessions", sessions_.size());
    return sessions_.size();
}

std::string SessionService::new_session_id() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    char buf[40];
    std::snprintf(buf, sizeof buf, "s-%016llx%04llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(++id_counter_ & 0xffff));
    return buf;
}

std::shared_ptr<SessionService::Entry> SessionService::find(const std::string& session_id) const {
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw NotFound("no session '" + session_id + "'");
    return it->second;
}

void SessionService::commit(Entry& entry, const SessionState& next, const std::vector<EventRecord>& events) {
    if (events.empty()) return;
    store_->append(events);
    entry.state = next;
    entry.log.insert(entry.log.end(), events.begin(), events.end());
}

void SessionService::expire_if_idle(Entry& entry) {
    if (options_.idle_timeout.count() <= 0 || entry.state.phase == Phase::Closed) return;
    if (clock_() - entry.state.updated_at_ms <= options_.idle_timeout.count()) return;
    auto t = engine_->expire(entry.state);
    commit(entry, t.state, t.events);
    spdlog::info("session {} expired after idling", entry.state.session_id);
}

Transition SessionService::create_session(const std::string& participant_id, std::uint64_t seed,
                                          std::optional<std::string> session_id) {
    std::unique_lock lock(sessions_mutex_);
    std::string id = session_id ? *session_id : new_session_id();
    if (sessions_.count(id)) throw ValidationError("session '" + id + "' already exists");
    auto t = engine_->start_session(id, participant_id, seed);
    auto entry = std::make_shared<Entry>();
    commit(*entry, t.state, t.events);
    sessions_.emplace(id, std::move(entry));
    return t;
}

TurnResult SessionService::post_message(const std::string& session_id, const std::string& text) {
    auto entry = find(session_id);
    std::lock_guard lock(entry->mutex);
    expire_if_idle(*entry);
    auto r = engine_->handle_player_message(entry->state, text);
    commit(*entry, r.state, r.events);
    return r;
}

AdvanceResult SessionService::advance(const std::string& session_id, std::optional<Phase> expected_from) {
    auto entry = find(session_id);
    std::lock_guard lock(entry->mutex);
    expire_if_idle(*entry);
    if (expected_from && *expected_from != entry->state.phase) return AdvanceResult{entry->state, {}, false};
    auto t = engine_->advance_phase(entry->state);
    commit(*entry, t.state, t.events);
    return AdvanceResult{std::move(t.state), std::move(t.events), true};
}

assessment::NextItem SessionService::current_item(const std::string& session_id) {
    auto entry = find(session_id);
    std::lock_guard lock(entry->mutex);
    expire_if_idle(*entry);
    return assessment::next_ingame_item(entry->state, engine_->ingame_survey());
}

Transition SessionService::answer(const std::string& session_id, const std::string& item_id, int option) {
    auto entry = find(session_id);
    std::lock_guard lock(entry->mutex);
    expire_if_idle(*entry);
    auto t = engine_->answer_survey_item(entry->state, item_id, option);
    commit(*entry, t.state, t.events);
    return t;
}

SessionState SessionService::state(const std::string& session_id) { return snapshot(session_id).state; }

SessionSnapshot SessionService::snapshot(const std::string& session_id) {
    auto entry = find(session_id);
    std::lock_guard lock(entry->mutex);
    expire_if_idle(*entry);
    return SessionSnapshot{entry->state, entry->log};
}

std::vector<std::string> SessionService::session_ids() const {
    std::shared_lock lock(sessions_mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : sessions_) ids.push_back(id);
    return ids;
}

void SessionService::upload_response(assessment::ResponseRecord record) {
    if (text::trim(record.participant_id).empty()) throw ValidationError("participant_id must not be empty");
    const auto* in = registry_.find(record.instrument_id);
    if (!in) throw ValidationError("unknown instrument '" + record.instrument_id + "'");
    if (in->is_ingame() || record.wave == assessment::Wave::InGame)
        throw ValidationError("in-game answers are recorded through the session, not uploaded");
    if (record.instrument_version.empty()) record.instrument_version = in->version;
    assessment::check_complete(*in, record);
    assessment::validate_demographics(record.demographics);
    if (record.timestamp_ms == 0) record.timestamp_ms = clock_();

    std::lock_guard lock(responses_mutex_);
    store_->append_response(record);
    responses_.push_back(std::move(record));
}

namespace {

bool in_range(std::int64_t ts, const ExportFilter& f) {
    if (f.from_ms && ts < *f.from_ms) return false;
    if (f.to_ms && ts >= *f.to_ms) return false;
    return true;
}

}  // namespace

stats::Dataset SessionService::export_dataset(const ExportFilter& filter) const {
    std::vector<SessionState> states;
    {
        std::shared_lock lock(sessions_mutex_);
        for (const auto& [id, entry] : sessions_) {
            std::lock_guard el(entry->mutex);
            const auto& s = entry->state;
            if (filter.campaign_id && s.campaign_id != *filter.campaign_id) continue;
            if (!in_range(s.started_at_ms, filter)) continue;
            states.push_back(s);
        }
    }
    std::set<std::string> campaign_participants;
    for (const auto& s : states) campaign_participants.insert(s.participant_id);

    std::vector<assessment::ResponseRecord> responses;
    {
        std::lock_guard lock(responses_mutex_);
        for (const auto& r : responses_) {
            if (!in_range(r.timestamp_ms, filter)) continue;
            if (filter.campaign_id && !campaign_participants.count(r.participant_id)) continue;
            responses.push_back(r);
        }
    }
    return stats::build_dataset(responses, states, registry_);
}

std::string SessionService::export_responses_csv(const ExportFilter& filter) const {
    std::vector<assessment::ResponseRecord> records;
    std::set<std::string> campaign_participants;
    {
        std::shared_lock lock(sessions_mutex_);
        const auto& ingame = engine_->ingame_survey();
        for (const auto& [id, entry] : sessions_) {
            std::lock_guard el(entry->mutex);
            const auto& s = entry->state;
            if (filter.campaign_id && s.campaign_id != *filter.campaign_id) continue;
            if (!in_range(s.started_at_ms, filter)) continue;
            campaign_participants.insert(s.participant_id);
            if (!s.ingame_answers.empty()) records.push_back(assessment::ingame_record(s, ingame));
        }
    }
    {
        std::lock_guard lock(responses_mutex_);
        for (const auto& r : responses_) {
            if (!in_range(r.timestamp_ms, filter)) continue;
            if (filter.campaign_id && !campaign_participants.count(r.participant_id)) continue;
            records.push_back(r);
        }
    }
    return assessment::export_responses_csv(records, registry_);
}

std::size_t SessionService::expire_idle() {
    if (options_.idle_timeout.count() <= 0) return 0;
    std::vector<std::shared_ptr<Entry>> entries;
    {
        std::shared_lock lock(sessions_mutex_);
        for (const auto& [id, e] : sessions_) entries.push_back(e);
    }
    std::size_t expired = 0;
    for (auto& e : entries) {
        std::lock_guard lock(e->mutex);
        const bool was_open = e->state.phase != Phase::Closed;
        try {
            expire_if_idle(*e);
        } catch (const StorageError& ex) {
            spdlog::warn("could not expire {}: {}", e->state.session_id, ex.what());
            continue;
        }
        if (was_open && e->state.phase == Phase::Closed) ++expired;
    }
    return expired;
}

}  // namespace ryno
