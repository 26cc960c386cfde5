#include "ryno/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ryno/error.hpp"
#include "ryno/text.hpp"

namespace ryno::stats {

using assessment::ResponseRecord;
using assessment::SurveyInstrument;
using assessment::Wave;

namespace {

struct Slot {
    const ResponseRecord* record = nullptr;
    const SurveyInstrument* instrument = nullptr;
    std::optional<ResponseRecord> owned;  // in-game records synthesized from sessions

    const ResponseRecord& get() const { return owned ? *owned : *record; }
    std::int64_t ts() const { return get().timestamp_ms; }
};

struct Collected {
    std::optional<Slot> climate_pre, climate_post, ingame, big_five, political_pre, political_post;
    const ResponseRecord* demographics = nullptr;
};

void keep_latest(std::optional<Slot>& slot, Slot candidate) {
    if (!slot || candidate.ts() >= slot->ts()) slot = std::move(candidate);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_number(const std::string& s, const std::string& column, std::size_t line) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("column " + column + ": '" + s + "' is not a number", line);
    }
}

}  // namespace

Dataset build_dataset(std::span<const ResponseRecord> responses, std::span<const SessionState> sessions,
                      const assessment::InstrumentRegistry& registry) {
    std::map<std::string, Collected> by_participant;

    for (const auto& r : responses) {
        auto& c = by_participant[r.participant_id];
        const SurveyInstrument* in = registry.find(r.instrument_id);
        if (!in) {
            spdlog::warn("response of {} names unknown instrument '{}'; ignored", r.participant_id, r.instrument_id);
            continue;
        }
        if (!r.demographics.empty() && (!c.demographics || r.timestamp_ms >= c.demographics->timestamp_ms))
            c.demographics = &r;
        Slot s{&r, in, std::nullopt};
        if (in->construct == assessment::kClimate) {
            if (r.wave == Wave::Pre) keep_latest(c.climate_pre, std::move(s));
            else if (r.wave == Wave::Post) keep_latest(c.climate_post, std::move(s));
        } else if (in->construct == assessment::kInGame) {
            keep_latest(c.ingame, std::move(s));
        } else if (in->construct == assessment::kBigFive) {
            keep_latest(c.big_five, std::move(s));
        } else if (in->construct == assessment::kPolitical) {
            if (r.wave == Wave::Pre) keep_latest(c.political_pre, std::move(s));
            else if (r.wave == Wave::Post) keep_latest(c.political_post, std::move(s));
        }
    }

    const SurveyInstrument* ingame = nullptr;
    try {
        ingame = &registry.by_construct(assessment::kInGame);
    } catch (const NotFound&) {
    }
    for (const auto& s : sessions) {
        auto& c = by_participant[s.participant_id];
        if (!ingame || s.ingame_answers.size() != ingame->item_count()) continue;
        keep_latest(c.ingame, Slot{nullptr, ingame, assessment::ingame_record(s, *ingame)});
    }

    Dataset out;
    for (auto& [pid, c] : by_participant) {
        ParticipantRow row;
        row.participant_id = pid;
        Exclusion ex;
        ex.participant_id = pid;

        auto use = [&](const std::optional<Slot>& slot, std::string_view name, auto&& score) {
            if (!slot) {
                ex.missing.emplace_back(name);
                return;
            }
            try {
                score(*slot->instrument, slot->get());
            } catch (const Error& e) {
                ex.missing.emplace_back(name);
                ex.errors.push_back(std::string(name) + ": " + e.what());
            }
        };
        use(c.climate_pre, "climate/pre",
            [&](auto& in, auto& r) { row.pre_climate = assessment::score_climate(in, r).mean; });
        use(c.ingame, "ingame", [&](auto& in, auto& r) { row.ingame = assessment::score_ingame(in, r).mean; });
        use(c.climate_post, "climate/post",
            [&](auto& in, auto& r) { row.post_climate = assessment::score_climate(in, r).mean; });
        use(c.big_five, "big_five", [&](auto& in, auto& r) { row.big_five = assessment::score_big_five(in, r); });
        use(c.political_pre, "political/pre",
            [&](auto& in, auto& r) { row.political_pre = assessment::code_political(in, r); });
        use(c.political_post, "political/post",
            [&](auto& in, auto& r) { row.political_post = assessment::code_political(in, r); });

        if (ex.missing.empty()) {
            if (c.demographics) row.demographics = c.demographics->demographics;
            out.rows.push_back(std::move(row));
        } else {
            out.exclusions.push_back(std::move(ex));
        }
    }
    return out;
}

std::vector<std::string> dataset_columns() {
    std::vector<std::string> cols{"participant_id", "pre_climate", "ingame", "post_climate"};
    for (auto t : assessment::kBigFiveTraits) cols.emplace_back(t);
    for (const char* wave : {"pre", "post"}) {
        for (const char* f : {"democracy_enthusiasm", "status_quo_eval", "collective_action"})
            cols.push_back(std::string(f) + "_" + wave);
    }
    for (auto f : assessment::kDemographicFields) cols.emplace_back(f);
    return cols;
}

std::string dataset_to_csv(std::span<const ParticipantRow> rows) {
    std::ostringstream out;
    out << text::join(dataset_columns(), ",") << '\n';
    for (const auto& r : rows) {
        std::vector<std::string> cells{text::csv_escape(r.participant_id), fmt(r.pre_climate), fmt(r.ingame),
                                       fmt(r.post_climate)};
        for (auto t : assessment::kBigFiveTraits) {
            auto it = r.big_five.find(std::string(t));
            cells.push_back(it == r.big_five.end() ? "" : fmt(it->second));
        }
        for (const auto* p : {&r.political_pre, &r.political_post}) {
            cells.push_back(fmt(p->democracy_enthusiasm));
            cells.push_back(fmt(p->status_quo_eval));
            cells.push_back(fmt(p->collective_action));
        }
        for (auto f : assessment::kDemographicFields) {
            auto it = r.demographics.find(std::string(f));
            cells.push_back(it == r.demographics.end() ? "" : text::csv_escape(it->second));
        }
        out << text::join(cells, ",") << '\n';
    }
    return out.str();
}

std::vector<ParticipantRow> rows_from_csv(std::string_view csv) {
    const auto columns = dataset_columns();
    std::vector<ParticipantRow> rows;
    std::size_t line_no = 0;
    bool header = true;
    for (const auto& raw : text::split(csv, '\n')) {
        ++line_no;
        std::string_view line = raw;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (text::trim(line).empty()) continue;
        auto cells = text::csv_split(line);
        if (header) {
            if (cells != columns) throw ParseError("unexpected dataset header", line_no);
            header = false;
            continue;
        }
        if (cells.size() != columns.size())
            throw ParseError("expected " + std::to_string(columns.size()) + " cells, got " +
                                 std::to_string(cells.size()),
                             line_no);
        ParticipantRow r;
        std::size_t i = 0;
        auto num = [&] {
            const std::size_t k = i++;
            return parse_number(cells[k], columns[k], line_no);
        };
        r.participant_id = cells[i++];
        r.pre_climate = num();
        r.ingame = num();
        r.post_climate = num();
        for (auto t : assessment::kBigFiveTraits) {
            if (cells[i].empty()) {
                ++i;
                continue;
            }
            r.big_five[std::string(t)] = num();
        }
        for (auto* p : {&r.political_pre, &r.political_post}) {
            p->democracy_enthusiasm = num();
            p->status_quo_eval = num();
            p->collective_action = num();
        }
        for (auto f : assessment::kDemographicFields) {
            const auto& v = cells[i++];
            if (!v.empty()) r.demographics[std::string(f)] = v;
        }
        rows.push_back(std::move(r));
    }
    if (header) throw ParseError("missing dataset header");
    return rows;
}

std::string exclusions_to_csv(std::span<const Exclusion> exclusions) {
    std::ostringstream out;
    out << "participant_id,missing,errors\n";
    for (const auto& e : exclusions) {
        out << text::csv_escape(e.participant_id) << ',' << text::csv_escape(text::join(e.missing, ";")) << ','
            << text::csv_escape(text::join(e.errors, ";")) << '\n';
    }
    return out.str();
}

void to_json(nlohmann::json& j, const Exclusion& e) {
    j = nlohmann::json{{"participant_id", e.participant_id}, {"missing", e.missing}, {"errors", e.errors}};
}

}  // namespace ryno::stats
