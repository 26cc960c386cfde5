#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ryno/assessment.hpp"
#include "ryno/error.hpp"
#include "ryno/text.hpp"

namespace ryno::assessment {

using nlohmann::json;

std::string_view to_string(ItemCategory c) {
    switch (c) {
        case ItemCategory::Belief: return "Belief";
        case ItemCategory::Intention: return "Intention";
        case ItemCategory::Personality: return "Personality";
        case ItemCategory::Political: return "Political";
    }
    return "?";
}

std::string_view to_string(KeyDirection k) {
    return k == KeyDirection::ProConstruct ? "ProConstruct" : "AntiConstruct";
}

std::string_view to_string(Wave w) {
    switch (w) {
        case Wave::Pre: return "Pre";
        case Wave::InGame: return "InGame";
        case Wave::Post: return "Post";
    }
    return "?";
}

Wave parse_wave(std::string_view s) {
    for (Wave w : {Wave::Pre, Wave::InGame, Wave::Post}) {
        if (s == to_string(w)) return w;
    }
    throw ParseError("unknown wave '" + std::string(s) + "'");
}

namespace {

ItemCategory parse_item_category(std::string_view s) {
    for (ItemCategory c : {ItemCategory::Belief, ItemCategory::Intention, ItemCategory::Personality,
                           ItemCategory::Political}) {
        if (s == to_string(c)) return c;
    }
    throw ParseError("unknown item category '" + std::string(s) + "'");
}

KeyDirection parse_key_direction(std::string_view s) {
    if (s == "ProConstruct") return KeyDirection::ProConstruct;
    if (s == "AntiConstruct") return KeyDirection::AntiConstruct;
    throw ParseError("unknown key direction '" + std::string(s) + "'");
}

json instrument_to_json(const SurveyInstrument& in, bool with_hash) {
    json j{{"id", in.id},
           {"version", in.version},
           {"construct", in.construct},
           {"title", in.title},
           {"randomize_order", in.randomize_order}};
    json labels = json::object();
    for (const auto& [value, label] : in.scale_labels) labels[std::to_string(value)] = label;
    j["scale_labels"] = labels;
    if (in.is_ingame()) {
        json items = json::array();
        for (const auto& it : in.ingame_items) {
            json options = json::array();
            for (const auto& o : it.options) options.push_back({{"label", o.label}, {"score", o.score}});
            items.push_back({{"id", it.id}, {"npc_text", it.npc_text}, {"source_item", it.source_item},
                             {"options", options}});
        }
        j["items"] = items;
    } else {
        json items = json::array();
        for (const auto& it : in.items) {
            items.push_back({{"id", it.id},
                             {"text", it.text},
                             {"category", to_string(it.category)},
                             {"subscale", it.subscale},
                             {"scale_min", it.scale_min},
                             {"scale_max", it.scale_max},
                             {"reverse_coded", it.reverse_coded},
                             {"key_direction", to_string(it.key_direction)}});
        }
        j["items"] = items;
    }
    if (with_hash) j["content_hash"] = in.content_hash;
    return j;
}

}  // namespace

int SurveyItem::coded(int raw) const noexcept {
    const bool flip = reverse_coded || key_direction == KeyDirection::AntiConstruct;
    return flip ? scale_min + scale_max - raw : raw;
}

std::vector<std::string> SurveyInstrument::item_ids() const {
    std::vector<std::string> ids;
    if (is_ingame()) {
        for (const auto& it : ingame_items) ids.push_back(it.id);
    } else {
        for (const auto& it : items) ids.push_back(it.id);
    }
    return ids;
}

const SurveyItem* SurveyInstrument::find_item(std::string_view item_id) const {
    for (const auto& it : items) {
        if (it.id == item_id) return &it;
    }
    return nullptr;
}

const InGameItem* SurveyInstrument::find_ingame_item(std::string_view item_id) const {
    for (const auto& it : ingame_items) {
        if (it.id == item_id) return &it;
    }
    return nullptr;
}

void SurveyInstrument::validate() const {
    if (id.empty()) throw ValidationError("instrument with empty id");
    if (version.empty()) throw ValidationError("instrument '" + id + "': empty version");
    static const std::set<std::string, std::less<>> constructs{std::string(kClimate), std::string(kInGame),
                                                               std::string(kBigFive), std::string(kPolitical)};
    if (!constructs.count(construct))
        throw ValidationError("instrument '" + id + "': unknown construct '" + construct + "'");
    if (item_count() == 0) throw ValidationError("instrument '" + id + "' has no items");

    std::set<std::string> seen;
    for (const auto& item_id : item_ids()) {
        if (item_id.empty()) throw ValidationError("instrument '" + id + "': item with empty id");
        if (!seen.insert(item_id).second)
            throw ValidationError("instrument '" + id + "': duplicate item id '" + item_id + "'");
    }
    for (const auto& it : items) {
        if (it.scale_min >= it.scale_max)
            throw ValidationError("item " + it.id + ": scale_min must be below scale_max");
    }
    for (const auto& it : ingame_items) {
        if (it.options.size() != 3)
            throw ValidationError("item " + it.id + ": in-game items need exactly three options");
        std::set<int> scores;
        for (const auto& o : it.options) {
            if (o.score != 1 && o.score != 3 && o.score != 5)
                throw ValidationError("item " + it.id + ": option scores must be 1, 3, or 5");
            scores.insert(o.score);
        }
        if (scores.size() != 3) throw ValidationError("item " + it.id + ": option scores must be distinct");
        if (it.source_item.empty()) throw ValidationError("item " + it.id + ": missing source_item");
    }
}

SurveyInstrument parse_instrument(std::string_view document) {
    SurveyInstrument in;
    try {
        json j = json::parse(document);
        in.id = j.at("id").get<std::string>();
        in.version = j.at("version").get<std::string>();
        in.construct = j.at("construct").get<std::string>();
        in.title = j.value("title", std::string{});
        in.randomize_order = j.value("randomize_order", false);
        if (j.contains("scale_labels")) {
            for (const auto& [key, label] : j.at("scale_labels").items()) {
                in.scale_labels[std::stoi(key)] = label.get<std::string>();
            }
        }
        for (const auto& item : j.at("items")) {
            if (in.construct == kInGame) {
                InGameItem it;
                it.id = item.at("id").get<std::string>();
                it.npc_text = item.at("npc_text").get<std::string>();
                it.source_item = item.value("source_item", std::string{});
                for (const auto& o : item.at("options")) {
                    it.options.push_back({o.at("label").get<std::string>(), o.at("score").get<int>()});
                }
                in.ingame_items.push_back(std::move(it));
            } else {
                SurveyItem it;
                it.id = item.at("id").get<std::string>();
                it.text = item.at("text").get<std::string>();
                it.category = parse_item_category(item.at("category").get<std::string>());
                it.subscale = item.value("subscale", std::string{});
                it.scale_min = item.value("scale_min", 1);
                it.scale_max = item.value("scale_max", 5);
                it.reverse_coded = item.value("reverse_coded", false);
                it.key_direction = parse_key_direction(item.value("key_direction", std::string("ProConstruct")));
                in.items.push_back(std::move(it));
            }
        }
    } catch (const json::exception& ex) {
        throw ParseError(std::string("malformed instrument document: ") + ex.what());
    } catch (const std::invalid_argument&) {
        throw ParseError("scale label keys must be integers");
    }
    in.validate();
    in.content_hash = text::sha256_hex(instrument_to_json(in, false).dump()).substr(0, 16);
    return in;
}

SurveyInstrument load_instrument_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open instrument file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_instrument(ss.str());
}

std::string serialize_instrument(const SurveyInstrument& instrument) {
    return instrument_to_json(instrument, false).dump(2) + "\n";
}

void InstrumentRegistry::add(SurveyInstrument instrument) {
    instrument.validate();
    auto id = instrument.id;
    if (!instruments_.emplace(id, std::move(instrument)).second)
        throw ValidationError("duplicate instrument id '" + id + "'");
}

InstrumentRegistry InstrumentRegistry::load_directory(const std::string& directory) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(directory, ec)) throw ConfigError("instrument directory '" + directory + "' not found");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(directory)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    InstrumentRegistry registry;
    for (const auto& f : files) registry.add(load_instrument_file(f.string()));
    registry.validate_links();
    return registry;
}

const SurveyInstrument& InstrumentRegistry::get(std::string_view id) const {
    if (auto* in = find(id)) return *in;
    throw NotFound("unknown instrument '" + std::string(id) + "'");
}

const SurveyInstrument* InstrumentRegistry::find(std::string_view id) const {
    auto it = instruments_.find(id);
    return it == instruments_.end() ? nullptr : &it->second;
}

const SurveyInstrument& InstrumentRegistry::by_construct(std::string_view construct) const {
    const SurveyInstrument* found = nullptr;
    for (const auto& [id, in] : instruments_) {
        if (in.construct != construct) continue;
        if (found) throw ValidationError("more than one instrument for construct '" + std::string(construct) + "'");
        found = &in;
    }
    if (!found) throw NotFound("no instrument for construct '" + std::string(construct) + "'");
    return *found;
}

std::vector<std::string> InstrumentRegistry::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, in] : instruments_) out.push_back(id);
    return out;
}

void InstrumentRegistry::validate_links() const {
    const SurveyInstrument* climate = nullptr;
    for (const auto& [id, in] : instruments_) {
        if (in.construct == kClimate) climate = &in;
    }
    for (const auto& [id, in] : instruments_) {
        if (!in.is_ingame() || !climate) continue;
        for (const auto& item : in.ingame_items) {
            if (!climate->find_item(item.source_item)) {
                throw ValidationError("item " + item.id + ": source_item '" + item.source_item +
                                      "' does not resolve in '" + climate->id + "'");
            }
        }
    }
}

void validate_demographics(const std::map<std::string, std::string>& demographics) {
    static const std::map<std::string, std::set<std::string>> vocab{
        {"gender", {"Male", "Female", "Non-binary", "Prefer not to say"}},
        {"age", {"18-24", "25-34", "35-44", "45-54", "55-64", "65+"}},
        {"education",
         {"Some high school", "High school graduate", "Some college", "Vocational/associate degree",
          "Bachelor's degree", "Some graduate school", "Graduate degree"}},
        {"occupation", {"Student", "Employed for wages", "Self-employed", "Unemployed", "Retired", "Other"}},
        {"ethnicity",
         {"Asian/Pacific Islander", "White", "Black or African American", "Hispanic or Latino",
          "Native American", "Other"}},
    };
    for (const auto& [field, value] : demographics) {
        auto it = vocab.find(field);
        if (it == vocab.end()) throw ValidationError("unknown demographic field '" + field + "'");
        if (!it->second.count(value))
            throw ValidationError("demographic field '" + field + "' has uncoded value '" + value + "'");
    }
}

void to_json(json& j, const ResponseRecord& r) {
    j = json{{"participant_id", r.participant_id},
             {"instrument_id", r.instrument_id},
             {"instrument_version", r.instrument_version},
             {"timestamp", r.timestamp_ms},
             {"wave", to_string(r.wave)},
             {"answers", r.answers}};
    if (!r.demographics.empty()) j["demographics"] = r.demographics;
}

void from_json(const json& j, ResponseRecord& r) {
    r.participant_id = j.at("participant_id").get<std::string>();
    r.instrument_id = j.at("instrument_id").get<std::string>();
    r.instrument_version = j.value("instrument_version", std::string{});
    r.timestamp_ms = j.value("timestamp", std::int64_t{0});
    r.wave = parse_wave(j.at("wave").get<std::string>());
    r.answers = j.at("answers").get<std::map<std::string, int>>();
    r.demographics = j.value("demographics", std::map<std::string, std::string>{});
}

}  // namespace ryno::assessment
