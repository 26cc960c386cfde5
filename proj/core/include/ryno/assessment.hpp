#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ryno/session.hpp"

namespace ryno::assessment {

enum class ItemCategory { Belief, Intention, Personality, Political };
enum class KeyDirection { ProConstruct, AntiConstruct };
enum class Wave { Pre, InGame, Post };

std::string_view to_string(ItemCategory c);
std::string_view to_string(KeyDirection k);
std::string_view to_string(Wave w);
Wave parse_wave(std::string_view s);

// Instrument families the analysis pipeline knows how to score.
inline constexpr std::string_view kClimate = "climate";
inline constexpr std::string_view kInGame = "ingame";
inline constexpr std::string_view kBigFive = "big_five";
inline constexpr std::string_view kPolitical = "political";

inline constexpr std::string_view kOpenness = "Openness";
inline constexpr std::string_view kConscientiousness = "Conscientiousness";
inline constexpr std::string_view kExtraversion = "Extraversion";
inline constexpr std::string_view kAgreeableness = "Agreeableness";
inline constexpr std::string_view kNeuroticism = "Neuroticism";
inline constexpr std::string_view kBigFiveTraits[] = {kOpenness, kConscientiousness, kExtraversion,
                                                      kAgreeableness, kNeuroticism};

inline constexpr std::string_view kDemocracyEnthusiasm = "DemocracyEnthusiasm";
inline constexpr std::string_view kStatusQuoEvaluation = "StatusQuoEvaluation";
inline constexpr std::string_view kCollectiveAction = "CollectiveAction";

struct SurveyItem {
    std::string id;
    std::string text;
    ItemCategory category = ItemCategory::Belief;
    std::string subscale;
    int scale_min = 1;
    int scale_max = 5;
    bool reverse_coded = false;
    KeyDirection key_direction = KeyDirection::ProConstruct;

    bool in_scale(int raw) const noexcept { return raw >= scale_min && raw <= scale_max; }
    // reverse_coded or AntiConstruct => scale_min + scale_max - raw.
    int coded(int raw) const noexcept;
};

struct InGameOption {
    std::string label;
    int score = 3;  // one of {1, 3, 5}
};

struct InGameItem {
    std::string id;
    std::string npc_text;
    std::vector<InGameOption> options;  // exactly three, pairwise distinct scores
    std::string source_item;
};

struct SurveyInstrument {
    std::string id;
    std::string version;
    std::string construct;  // one of kClimate, kInGame, kBigFive, kPolitical
    std::string title;
    bool randomize_order = false;
    std::map<int, std::string> scale_labels;
    std::vector<SurveyItem> items;          // Likert instruments
    std::vector<InGameItem> ingame_items;   // in-game instrument
    std::string content_hash;               // first 16 hex of sha256 over the canonical document

    bool is_ingame() const noexcept { return construct == kInGame; }
    std::size_t item_count() const noexcept { return is_ingame() ? ingame_items.size() : items.size(); }
    std::vector<std::string> item_ids() const;
    const SurveyItem* find_item(std::string_view id) const;
    const InGameItem* find_ingame_item(std::string_view id) const;

    // Item ids unique, scales well-formed, in-game items with exactly three
    // options of distinct scores in {1,3,5}.
    void validate() const;
};

SurveyInstrument parse_instrument(std::string_view document);
SurveyInstrument load_instrument_file(const std::string& path);
std::string serialize_instrument(const SurveyInstrument& instrument);

// Instruments keyed by id, immutable once loaded.
class InstrumentRegistry {
public:
    void add(SurveyInstrument instrument);
    // Loads every *.json file in `directory`; throws ConfigError on an
    // unreadable directory and ParseError/ValidationError on a bad file.
    static InstrumentRegistry load_directory(const std::string& directory);

    const SurveyInstrument& get(std::string_view id) const;
    const SurveyInstrument* find(std::string_view id) const;
    // The unique instrument for a construct; throws NotFound if absent.
    const SurveyInstrument& by_construct(std::string_view construct) const;
    std::vector<std::string> ids() const;
    // Cross-checks in-game source items against the climate instrument.
    void validate_links() const;

private:
    std::map<std::string, SurveyInstrument, std::less<>> instruments_;
};

inline constexpr std::string_view kDemographicFields[] = {"gender", "age", "education", "occupation",
                                                          "ethnicity"};
// Coded categories only; throws ValidationError on a free-text value.
void validate_demographics(const std::map<std::string, std::string>& demographics);

struct ResponseRecord {
    std::string participant_id;
    std::string instrument_id;
    std::string instrument_version;
    std::int64_t timestamp_ms = 0;
    Wave wave = Wave::Pre;
    std::map<std::string, int> answers;  // Likert value, or 1-based option for in-game items
    std::map<std::string, std::string> demographics;
};

void to_json(nlohmann::json& j, const ResponseRecord& r);
void from_json(const nlohmann::json& j, ResponseRecord& r);

// Every item answered and in scale, no stray ids, matching instrument id and
// version. Throws ScoringError naming the first offending item.
void check_complete(const SurveyInstrument& instrument, const ResponseRecord& record);

struct ScaleScore {
    double mean = 0.0;
    std::map<std::string, double> per_item;  // coded values
};

// Mean of coded values over every item of a Likert instrument.
ScaleScore score_likert(const SurveyInstrument& instrument, const ResponseRecord& record);
ScaleScore score_climate(const SurveyInstrument& instrument, const ResponseRecord& record);
// Mean of the chosen options' scores.
ScaleScore score_ingame(const SurveyInstrument& instrument, const ResponseRecord& record);
// trait -> mean of keyed values over that trait's items.
std::map<std::string, double> score_big_five(const SurveyInstrument& instrument, const ResponseRecord& record);

struct PoliticalScores {
    double democracy_enthusiasm = 0.0;
    double status_quo_eval = 0.0;
    double collective_action = 0.0;

    friend bool operator==(const PoliticalScores&, const PoliticalScores&) = default;
};

// Raw answer -> 1..5 code. Code 3 is always "Don't know".
int political_code(const SurveyItem& item, int raw);
PoliticalScores code_political(const SurveyInstrument& instrument, const ResponseRecord& record);

struct SurveyDone {};
using NextItem = std::variant<InGameItem, SurveyDone>;

// Items come in authored order; SurveyDone once every item is answered.
// Throws PreconditionError outside InGameSurvey.
NextItem next_ingame_item(const SessionState& state, const SurveyInstrument& instrument);

// In-game answers of a session as a response record (wave InGame).
ResponseRecord ingame_record(const SessionState& state, const SurveyInstrument& instrument);

// Presentation order for a participant: authored order unless the
// instrument randomizes, in which case a seeded shuffle.
std::vector<std::string> presentation_order(const SurveyInstrument& instrument, std::uint64_t seed);

// Deterministic Fisher-Yates permutation of [0, n).
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

// One row per participant-wave: participant_id, wave, every item
// id of every instrument in registry order, then derived score columns.
std::string export_responses_csv(std::span<const ResponseRecord> records, const InstrumentRegistry& registry);

}  // namespace ryno::assessment
