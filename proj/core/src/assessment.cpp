#include "ryno/assessment.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "ryno/error.hpp"
#include "ryno/text.hpp"

namespace ryno::assessment {

void check_complete(const SurveyInstrument& instrument, const ResponseRecord& record) {
    if (record.instrument_id != instrument.id) {
        throw ScoringError("", "record is for instrument '" + record.instrument_id + "', expected '" +
                                   instrument.id + "'");
    }
    if (!record.instrument_version.empty() && record.instrument_version != instrument.version) {
        throw ScoringError("", "record targets version '" + record.instrument_version + "' of '" + instrument.id +
                                   "', loaded version is '" + instrument.version + "'");
    }
    if (instrument.is_ingame()) {
        for (const auto& item : instrument.ingame_items) {
            auto it = record.answers.find(item.id);
            if (it == record.answers.end()) throw ScoringError(item.id, "unanswered");
            if (it->second < 1 || it->second > static_cast<int>(item.options.size()))
                throw ScoringError(item.id, "unknown option index " + std::to_string(it->second));
        }
    } else {
        for (const auto& item : instrument.items) {
            auto it = record.answers.find(item.id);
            if (it == record.answers.end()) throw ScoringError(item.id, "unanswered");
            if (!item.in_scale(it->second))
                throw ScoringError(item.id, "answer " + std::to_string(it->second) + " out of scale");
        }
    }
    for (const auto& [item_id, value] : record.answers) {
        const bool known = instrument.is_ingame() ? instrument.find_ingame_item(item_id) != nullptr
                                                  : instrument.find_item(item_id) != nullptr;
        if (!known) throw ScoringError(item_id, "is not an item of '" + instrument.id + "'");
    }
}

ScaleScore score_likert(const SurveyInstrument& instrument, const ResponseRecord& record) {
    if (instrument.is_ingame()) throw ScoringError("", "'" + instrument.id + "' is not a Likert instrument");
    check_complete(instrument, record);
    ScaleScore score;
    double sum = 0.0;
    for (const auto& item : instrument.items) {
        const int coded = item.coded(record.answers.at(item.id));
        score.per_item[item.id] = coded;
        sum += coded;
    }
    score.mean = sum / static_cast<double>(instrument.items.size());
    return score;
}

ScaleScore score_climate(const SurveyInstrument& instrument, const ResponseRecord& record) {
    if (instrument.construct != kClimate)
        throw ScoringError("", "'" + instrument.id + "' is not a climate attitude instrument");
    return score_likert(instrument, record);
}

ScaleScore score_ingame(const SurveyInstrument& instrument, const ResponseRecord& record) {
    if (!instrument.is_ingame()) throw ScoringError("", "'" + instrument.id + "' is not an in-game instrument");
    check_complete(instrument, record);
    ScaleScore score;
    double sum = 0.0;
    for (const auto& item : instrument.ingame_items) {
        const int option = record.answers.at(item.id);
        const int value = item.options[static_cast<std::size_t>(option - 1)].score;
        score.per_item[item.id] = value;
        sum += value;
    }
    score.mean = sum / static_cast<double>(instrument.ingame_items.size());
    return score;
}

std::map<std::string, double> score_big_five(const SurveyInstrument& instrument, const ResponseRecord& record) {
    if (instrument.construct != kBigFive)
        throw ScoringError("", "'" + instrument.id + "' is not a Big Five instrument");
    check_complete(instrument, record);
    std::map<std::string, double> sums;
    std::map<std::string, int> counts;
    for (const auto& item : instrument.items) {
        sums[item.subscale] += item.coded(record.answers.at(item.id));
        ++counts[item.subscale];
    }
    std::map<std::string, double> means;
    for (auto trait : kBigFiveTraits) {
        std::string key(trait);
        if (!counts.count(key)) throw ScoringError("", "instrument '" + instrument.id + "' has no " + key + " items");
        means[key] = sums[key] / counts[key];
    }
    return means;
}

int political_code(const SurveyItem& item, int raw) {
    if (!item.in_scale(raw)) throw ScoringError(item.id, "answer " + std::to_string(raw) + " out of scale");
    return item.coded(raw);
}

PoliticalScores code_political(const SurveyInstrument& instrument, const ResponseRecord& record) {
    if (instrument.construct != kPolitical)
        throw ScoringError("", "'" + instrument.id + "' is not a political attitude instrument");
    check_complete(instrument, record);
    std::map<std::string, double> sums;
    std::map<std::string, int> counts;
    for (const auto& item : instrument.items) {
        sums[item.subscale] += political_code(item, record.answers.at(item.id));
        ++counts[item.subscale];
    }
    auto mean_of = [&](std::string_view subscale) {
        std::string key(subscale);
        if (!counts.count(key))
            throw ScoringError("", "instrument '" + instrument.id + "' has no " + key + " items");
        return sums[key] / counts[key];
    };
    return PoliticalScores{mean_of(kDemocracyEnthusiasm), mean_of(kStatusQuoEvaluation),
                           mean_of(kCollectiveAction)};
}

NextItem next_ingame_item(const SessionState& state, const SurveyInstrument& instrument) {
    if (state.phase != Phase::InGameSurvey) {
        throw PreconditionError("in-game survey items are only available in phase InGameSurvey (phase is " +
                                std::string(to_string(state.phase)) + ")");
    }
    if (!instrument.is_ingame()) throw PreconditionError("'" + instrument.id + "' is not an in-game instrument");
    if (state.survey_cursor >= instrument.ingame_items.size()) return SurveyDone{};
    return instrument.ingame_items[state.survey_cursor];
}

ResponseRecord ingame_record(const SessionState& state, const SurveyInstrument& instrument) {
    ResponseRecord r;
    r.participant_id = state.participant_id;
    r.instrument_id = instrument.id;
    r.instrument_version = instrument.version;
    r.timestamp_ms = state.updated_at_ms;
    r.wave = Wave::InGame;
    r.answers = state.ingame_answers;
    return r;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

std::vector<std::string> presentation_order(const SurveyInstrument& instrument, std::uint64_t seed) {
    auto ids = instrument.item_ids();
    if (!instrument.randomize_order || instrument.is_ingame()) return ids;
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (auto i : seeded_permutation(ids.size(), seed)) out.push_back(ids[i]);
    return out;
}

namespace {

std::string fmt_score(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::string export_responses_csv(std::span<const ResponseRecord> records, const InstrumentRegistry& registry) {
    std::vector<std::string> item_columns;
    for (const auto& id : registry.ids()) {
        for (const auto& item_id : registry.get(id).item_ids()) item_columns.push_back(item_id);
    }
    const std::vector<std::string> derived{"climate_mean",      "ingame_mean",       "Openness",
                                           "Conscientiousness", "Extraversion",      "Agreeableness",
                                           "Neuroticism",       "democracy_enthusiasm", "status_quo_eval",
                                           "collective_action"};

    using Key = std::pair<std::string, int>;
    std::map<Key, std::map<std::string, std::string>> rows;
    for (const auto& r : records) {
        auto& row = rows[{r.participant_id, static_cast<int>(r.wave)}];
        const SurveyInstrument* in = registry.find(r.instrument_id);
        if (!in) continue;
        for (const auto& [item_id, value] : r.answers) row[item_id] = std::to_string(value);
        try {
            if (in->construct == kClimate) {
                row["climate_mean"] = fmt_score(score_climate(*in, r).mean);
            } else if (in->construct == kInGame) {
                row["ingame_mean"] = fmt_score(score_ingame(*in, r).mean);
            } else if (in->construct == kBigFive) {
                for (const auto& [trait, mean] : score_big_five(*in, r)) row[trait] = fmt_score(mean);
            } else if (in->construct == kPolitical) {
                auto p = code_political(*in, r);
                row["democracy_enthusiasm"] = fmt_score(p.democracy_enthusiasm);
                row["status_quo_eval"] = fmt_score(p.status_quo_eval);
                row["collective_action"] = fmt_score(p.collective_action);
            }
        } catch (const ScoringError&) {
            // incomplete records export their raw answers with empty derived cells
        }
    }

    std::ostringstream out;
    out << "participant_id,wave";
    for (const auto& c : item_columns) out << ',' << text::csv_escape(c);
    for (const auto& c : derived) out << ',' << c;
    out << '\n';
    for (const auto& [key, row] : rows) {
        out << text::csv_escape(key.first) << ',' << to_string(static_cast<Wave>(key.second));
        for (const auto& c : item_columns) {
            auto it = row.find(c);
            out << ',' << (it == row.end() ? "" : it->second);
        }
        for (const auto& c : derived) {
            auto it = row.find(c);
            out << ',' << (it == row.end() ? "" : it->second);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace ryno::assessment
