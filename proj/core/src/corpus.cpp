#include "ryno/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "ryno/error.hpp"
#include "ryno/text.hpp"

namespace ryno {

using nlohmann::json;

std::string_view to_string(Category c) {
    switch (c) {
        case Category::Event: return "Event";
        case Category::Inhabitant: return "Inhabitant";
        case Category::Thing: return "Thing";
    }
    return "?";
}

Category parse_category(std::string_view s, std::string_view entry_id) {
    for (Category c : kAllCategories) {
        if (s == to_string(c)) return c;
    }
    throw ValidationError("entry '" + std::string(entry_id) + "': unknown category '" +
                          std::string(s) + "'");
}

CorpusEntry make_entry(std::string id, Category category, std::string title, std::string body,
                       std::set<std::string> tags) {
    CorpusEntry e{std::move(id), category, std::move(title), std::move(body), 0, std::move(tags)};
    e.word_count = text::word_count(e.body);
    return e;
}

WorldCorpus::WorldCorpus(std::vector<CorpusEntry> entries) : entries_(std::move(entries)) {
    std::unordered_set<std::string> seen;
    for (Category c : kAllCategories) per_category_[c] = 0;
    for (auto& e : entries_) {
        if (e.id.empty()) throw ValidationError("corpus entry with empty id");
        if (!seen.insert(e.id).second) throw ValidationError("duplicate entry id '" + e.id + "'");
        e.word_count = text::word_count(e.body);
        total_words_ += e.word_count;
        ++per_category_[e.category];
    }
}

const CorpusEntry* WorldCorpus::find(std::string_view id) const {
    for (const auto& e : entries_) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

void to_json(json& j, const CorpusEntry& e) {
    j = json{{"id", e.id},
             {"category", to_string(e.category)},
             {"title", e.title},
             {"body", e.body},
             {"tags", e.tags}};
}

void from_json(const json& j, CorpusEntry& e) {
    e.id = j.at("id").get<std::string>();
    e.category = parse_category(j.at("category").get<std::string>(), e.id);
    e.title = j.value("title", std::string{});
    e.body = j.at("body").get<std::string>();
    e.tags.clear();
    if (j.contains("tags")) {
        for (const auto& t : j.at("tags")) e.tags.insert(t.get<std::string>());
    }
    e.word_count = text::word_count(e.body);
}

WorldCorpus parse_corpus_json(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& ex) {
        throw ParseError(std::string("malformed corpus JSON: ") + ex.what());
    }
    const json* list = &doc;
    if (doc.is_object()) {
        if (!doc.contains("entries")) throw ParseError("corpus document has no \"entries\" array");
        list = &doc.at("entries");
    }
    if (!list->is_array()) throw ParseError("corpus entries must be an array");
    if (list->empty()) throw ParseError("no entries");

    std::vector<CorpusEntry> entries;
    entries.reserve(list->size());
    for (std::size_t i = 0; i < list->size(); ++i) {
        const json& item = (*list)[i];
        try {
            entries.push_back(item.get<CorpusEntry>());
        } catch (const json::exception& ex) {
            std::string id = item.is_object() ? item.value("id", std::string{}) : std::string{};
            throw ParseError("entry " + std::to_string(i) + (id.empty() ? "" : " ('" + id + "')") +
                             ": " + ex.what());
        }
    }
    return WorldCorpus(std::move(entries));
}

// Front-matter layout, one block per entry:
//
//   ---
//   id: peak-source
//   category: Thing
//   title: The Peak Source
//   tags: past, source
//
//   Body text until the next delimiter line.
//
// Header lines run until the first blank line; everything after it, up to
// the next "---" line, is the body.
WorldCorpus parse_corpus_front_matter(std::string_view document) {
    std::vector<CorpusEntry> entries;
    std::istringstream in{std::string(document)};
    std::string line;
    std::size_t line_no = 0;

    enum class State { Preamble, Header, Body } state = State::Preamble;
    CorpusEntry current;
    std::string category_str;
    std::size_t block_line = 0;
    bool have_id = false, have_category = false;
    std::vector<std::string> body_lines;

    auto finish = [&](std::size_t at_line) {
        if (!have_id) throw ParseError("entry block missing 'id' header", block_line);
        if (!have_category)
            throw ParseError("entry '" + current.id + "' missing 'category' header", block_line);
        while (!body_lines.empty() && text::trim(body_lines.back()).empty()) body_lines.pop_back();
        current.body = text::join(body_lines, "\n");
        if (text::trim(current.body).empty())
            throw ParseError("entry '" + current.id + "' has an empty body", at_line);
        current.category = parse_category(category_str, current.id);
        current.word_count = text::word_count(current.body);
        entries.push_back(std::move(current));
        current = CorpusEntry{};
        category_str.clear();
        body_lines.clear();
        have_id = have_category = false;
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const bool delimiter = text::trim(line) == "---";
        if (delimiter) {
            if (state != State::Preamble) finish(line_no);
            state = State::Header;
            block_line = line_no;
            continue;
        }
        switch (state) {
            case State::Preamble:
                if (!text::trim(line).empty())
                    throw ParseError("text before the first '---' delimiter", line_no);
                break;
            case State::Header: {
                if (text::trim(line).empty()) {
                    state = State::Body;
                    break;
                }
                auto colon = line.find(':');
                if (colon == std::string::npos)
                    throw ParseError("expected 'key: value' header", line_no);
                std::string key = text::to_lower(text::trim(std::string_view(line).substr(0, colon)));
                std::string value{text::trim(std::string_view(line).substr(colon + 1))};
                if (key == "id") {
                    current.id = value;
                    have_id = !value.empty();
                } else if (key == "category") {
                    category_str = value;
                    have_category = true;
                } else if (key == "title") {
                    current.title = value;
                } else if (key == "tags") {
                    for (const auto& t : text::split(value, ',')) {
                        auto tag = text::trim(t);
                        if (!tag.empty()) current.tags.emplace(tag);
                    }
                } else {
                    throw ParseError("unknown header '" + key + "'", line_no);
                }
                break;
            }
            case State::Body:
                if (body_lines.empty() && text::trim(line).empty()) break;
                body_lines.push_back(line);
                break;
        }
    }
    if (state == State::Header && !have_id && category_str.empty() && body_lines.empty()) {
        // trailing delimiter with nothing after it
    } else if (state != State::Preamble) {
        finish(line_no);
    }
    if (entries.empty()) throw ParseError("no entries");
    return WorldCorpus(std::move(entries));
}

WorldCorpus load_corpus(std::string_view document) {
    auto body = text::trim(document);
    if (body.empty()) throw ParseError("no entries");
    if (body.front() == '{' || body.front() == '[') return parse_corpus_json(document);
    return parse_corpus_front_matter(document);
}

WorldCorpus load_corpus_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open corpus file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_corpus(ss.str());
}

std::string serialize_corpus_json(const WorldCorpus& corpus) {
    json doc{{"entries", corpus.entries()}};
    return doc.dump(2) + "\n";
}

std::string serialize_corpus_front_matter(const WorldCorpus& corpus) {
    std::string out;
    for (const auto& e : corpus.entries()) {
        out += "---\n";
        out += "id: " + e.id + "\n";
        out += "category: " + std::string(to_string(e.category)) + "\n";
        out += "title: " + e.title + "\n";
        if (!e.tags.empty()) {
            out += "tags: " + text::join({e.tags.begin(), e.tags.end()}, ", ") + "\n";
        }
        out += "\n" + e.body + "\n\n";
    }
    return out;
}

ValidationReport validate_corpus(const WorldCorpus& corpus, const CorpusPolicy& policy) {
    ValidationReport report;
    if (corpus.total_words() < policy.min_words) {
        report.violations.push_back(
            {"total_words", "total words " + std::to_string(corpus.total_words()) + " < " +
                                std::to_string(policy.min_words)});
    }
    for (Category c : kAllCategories) {
        auto it = corpus.per_category_counts().find(c);
        std::size_t n = it == corpus.per_category_counts().end() ? 0 : it->second;
        if (n < policy.min_per_category) {
            report.violations.push_back(
                {"category_count", std::string(to_string(c)) + " entries " + std::to_string(n) +
                                       " < " + std::to_string(policy.min_per_category)});
        }
    }
    return report;
}

std::vector<CorpusEntry> select_story_context(const WorldCorpus& corpus,
                                              const std::set<std::string>& level_tags,
                                              std::size_t word_budget) {
    std::vector<CorpusEntry> picked;
    std::size_t used = 0;
    for (const auto& e : corpus.entries()) {
        bool match = false;
        for (const auto& t : e.tags) {
            if (level_tags.count(t)) {
                match = true;
                break;
            }
        }
        if (!match) continue;
        if (used + e.word_count > word_budget) break;
        used += e.word_count;
        picked.push_back(e);
    }
    return picked;
}

}  // namespace ryno
