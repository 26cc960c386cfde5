#include "ryno/prompts.hpp"

#include <cctype>

#include "ryno/error.hpp"
#include "ryno/text.hpp"

namespace ryno::prompts {

std::size_t chars_per_four(std::string_view s) {
    return (s.size() + 3) / 4;
}

std::vector<HistoryEntry> dialogue_turns(std::span<const HistoryEntry> history) {
    std::vector<HistoryEntry> turns;
    for (const auto& h : history) {
        if (h.speaker != Speaker::System) turns.push_back(h);
    }
    return turns;
}

std::string render_turn(const HistoryEntry& turn, const PromptOptions& options) {
    const std::string& who = turn.speaker == Speaker::Npc ? options.npc_name : options.player_label;
    return who + ": " + turn.text;
}

std::size_t estimate_history(std::span<const HistoryEntry> turns, const PromptOptions& options) {
    std::size_t total = 0;
    for (const auto& t : turns) total += options.estimator(render_turn(t, options));
    return total;
}

std::vector<HistoryEntry> truncate_history(std::span<const HistoryEntry> turns, std::size_t budget,
                                           const PromptOptions& options) {
    std::size_t used = 0;
    std::size_t first = turns.size();
    while (first > 0) {
        std::size_t cost = options.estimator(render_turn(turns[first - 1], options));
        if (used + cost > budget) break;
        used += cost;
        --first;
    }
    return {turns.begin() + static_cast<std::ptrdiff_t>(first), turns.end()};
}

std::string fill_slots(std::string_view tmpl,
                       const std::vector<std::pair<std::string, std::string>>& values) {
    std::string out;
    std::size_t pos = 0;
    while (true) {
        auto open = tmpl.find(kSlotOpen, pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        auto close = tmpl.find(kSlotClose, open + kSlotOpen.size());
        if (close == std::string_view::npos) throw ConfigError("unclosed template slot");
        out.append(tmpl.substr(pos, open - pos));
        std::string_view name = tmpl.substr(open + kSlotOpen.size(), close - open - kSlotOpen.size());
        bool found = false;
        for (const auto& [key, value] : values) {
            if (key == name) {
                out += value;
                found = true;
                break;
            }
        }
        if (!found) throw ConfigError("unknown template slot '" + std::string(name) + "'");
        pos = close + kSlotClose.size();
    }
    return out;
}

bool has_unfilled_slot(std::string_view s) {
    auto open = s.find(kSlotOpen);
    return open != std::string_view::npos && s.find(kSlotClose, open + kSlotOpen.size()) != std::string_view::npos;
}

namespace {

std::string render_context(const PromptOptions& options, std::span<const HistoryEntry> turns,
                           std::span<const CorpusEntry> story) {
    std::string conversation;
    for (const auto& t : turns) conversation += "\n" + render_turn(t, options);
    std::vector<std::string> bodies;
    bodies.reserve(story.size());
    for (const auto& e : story) bodies.push_back(e.body);
    return fill_slots(options.context_template,
                      {{"conversation", conversation}, {"story_context", text::join(bodies, "\n\n")}});
}

}  // namespace

PromptBundle build_dialogue_prompt(const LevelSpec& level, std::span<const HistoryEntry> history,
                                   std::span<const CorpusEntry> story_context, std::string_view player_text,
                                   std::size_t budget, const PromptOptions& options) {
    PromptBundle bundle;
    bundle.system_text = level.role_description;
    if (!level.response_format.empty()) bundle.system_text += "\n\n" + level.response_format;
    bundle.user_text = std::string(text::trim(player_text));

    const auto& est = options.estimator;
    const std::size_t fixed = est(bundle.system_text) + est(bundle.user_text);
    if (est(bundle.system_text) >= budget) {
        throw ConfigError("prompt budget " + std::to_string(budget) + " cannot hold the system text (" +
                          std::to_string(est(bundle.system_text)) + " tokens)");
    }

    const auto turns = dialogue_turns(history);
    const std::span<const HistoryEntry> all_turns(turns);

    auto total_for = [&](std::size_t keep_turns, std::size_t keep_story) {
        return fixed + est(render_context(options, all_turns.last(keep_turns), story_context.first(keep_story)));
    };

    std::size_t keep_story = story_context.size();
    std::size_t keep_turns = turns.size();
    if (total_for(keep_turns, keep_story) > budget) {
        // Largest suffix of turns that fits with the full story context.
        std::size_t lo = 0, hi = turns.size();
        while (lo < hi) {
            std::size_t mid = (lo + hi + 1) / 2;
            if (total_for(mid, keep_story) <= budget) lo = mid;
            else hi = mid - 1;
        }
        keep_turns = lo;
        if (keep_turns == 0 && total_for(0, keep_story) > budget) {
            while (keep_story > 0 && total_for(0, keep_story) > budget) --keep_story;
            if (total_for(0, keep_story) > budget) {
                throw ConfigError("prompt budget " + std::to_string(budget) +
                                  " cannot hold the system text, framing, and player message");
            }
        }
    }

    bundle.context_text = render_context(options, all_turns.last(keep_turns), story_context.first(keep_story));
    bundle.turns_kept = keep_turns;
    bundle.story_entries_kept = keep_story;
    bundle.token_estimate = fixed + est(bundle.context_text);
    return bundle;
}

ClassifierPrompt build_trigger_prompt(const TriggerSpec& trigger, std::string_view input) {
    trigger.validate();
    std::string folded(text::trim(input));
    for (auto& c : folded) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    std::string out = trigger.preamble;
    for (const auto& d : trigger.demonstrations) {
        out += "\nQuestion: " + d.question;
        out += "\nAnswer: ";
        out += d.label ? ClassifierPrompt::kTrue : ClassifierPrompt::kFalse;
    }
    out += "\n" + trigger.instruction;
    out += "\nQuestion: " + folded + "\nAnswer:";
    return ClassifierPrompt{std::move(out)};
}

bool parse_classifier_reply(std::string_view raw) {
    auto skip_noise = [](std::string_view s) {
        while (!s.empty() && !std::isalnum(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
        return s;
    };
    auto starts_with_word = [](std::string_view s, std::string_view word) {
        if (s.size() < word.size()) return false;
        for (std::size_t i = 0; i < word.size(); ++i) {
            if (std::tolower(static_cast<unsigned char>(s[i])) != word[i]) return false;
        }
        return s.size() == word.size() || !std::isalnum(static_cast<unsigned char>(s[word.size()]));
    };

    std::string_view s = skip_noise(raw);
    if (starts_with_word(s, "answer")) s = skip_noise(s.substr(6));
    if (starts_with_word(s, "true")) return true;
    if (starts_with_word(s, "false")) return false;
    throw UnparseableReply("classifier reply has no leading True/False token: '" + std::string(raw) + "'");
}

}  // namespace ryno::prompts
