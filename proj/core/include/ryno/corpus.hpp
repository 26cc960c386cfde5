#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ryno {

// World-building card categories.
enum class Category { Event, Inhabitant, Thing };

inline constexpr Category kAllCategories[] = {Category::Event, Category::Inhabitant, Category::Thing};

std::string_view to_string(Category c);
// Throws ValidationError naming `entry_id` on an unknown category string.
Category parse_category(std::string_view s, std::string_view entry_id);

struct CorpusEntry {
    std::string id;
    Category category = Category::Event;
    std::string title;
    std::string body;
    std::size_t word_count = 0;  // whitespace tokens of body
    std::set<std::string> tags;  // level-routing labels

    friend bool operator==(const CorpusEntry&, const CorpusEntry&) = default;
};

CorpusEntry make_entry(std::string id, Category category, std::string title, std::string body,
                       std::set<std::string> tags = {});

// Immutable after construction; safe to share across sessions.
class WorldCorpus {
public:
    WorldCorpus() = default;
    // Validates ids (non-empty, unique) and recomputes derived counts.
    explicit WorldCorpus(std::vector<CorpusEntry> entries);

    const std::vector<CorpusEntry>& entries() const noexcept { return entries_; }
    std::size_t total_words() const noexcept { return total_words_; }
    const std::map<Category, std::size_t>& per_category_counts() const noexcept { return per_category_; }
    std::size_t size() const noexcept { return entries_.size(); }
    const CorpusEntry* find(std::string_view id) const;

private:
    std::vector<CorpusEntry> entries_;
    std::size_t total_words_ = 0;
    std::map<Category, std::size_t> per_category_;
};

// Parses either the canonical JSON form ({"entries": [...]}) or the
// front-matter text form; the format is detected from the first
// non-whitespace character.
WorldCorpus load_corpus(std::string_view document);
WorldCorpus load_corpus_file(const std::string& path);

WorldCorpus parse_corpus_json(std::string_view document);
WorldCorpus parse_corpus_front_matter(std::string_view document);

std::string serialize_corpus_json(const WorldCorpus& corpus);
std::string serialize_corpus_front_matter(const WorldCorpus& corpus);

struct CorpusPolicy {
    std::size_t min_words = 8000;
    std::size_t min_per_category = 8;
};

struct Violation {
    std::string code;     // "total_words" or "category_count"
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const noexcept { return violations.empty(); }
};

ValidationReport validate_corpus(const WorldCorpus& corpus, const CorpusPolicy& policy);

// Entries whose tags intersect level_tags, in corpus order, taken while the
// running word total stays within word_budget. Stops at the first matching
// entry that would overflow the budget.
std::vector<CorpusEntry> select_story_context(const WorldCorpus& corpus,
                                              const std::set<std::string>& level_tags,
                                              std::size_t word_budget);

void to_json(nlohmann::json& j, const CorpusEntry& e);
void from_json(const nlohmann::json& j, CorpusEntry& e);

}  // namespace ryno
