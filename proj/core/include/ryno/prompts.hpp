#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ryno/campaign.hpp"
#include "ryno/corpus.hpp"
#include "ryno/session.hpp"

namespace ryno::prompts {

// Token estimate for a string. Defaults to ceil(chars / 4).
using TokenEstimator = std::function<std::size_t(std::string_view)>;
std::size_t chars_per_four(std::string_view s);

inline constexpr std::string_view kSlotOpen = "/{";
inline constexpr std::string_view kSlotClose = "}/";

// Context framing with two slots. /{conversation}/ receives the rendered
// turns, /{story_context}/ the selected corpus bodies.
inline constexpr std::string_view kDefaultContextTemplate =
    "During your talks, let your innate interests show subtly over time, and use prior discussions "
    "for context. Your earlier conversations: /{conversation}/\n\n"
    "What you remember about your world:\n/{story_context}/";

struct PromptOptions {
    std::string npc_name = "Ryno";
    std::string player_label = "Player";
    std::string context_template{kDefaultContextTemplate};
    TokenEstimator estimator = chars_per_four;
};

struct PromptBundle {
    std::string system_text;   // role description + response format
    std::string context_text;  // conversation block + story context
    std::string user_text;     // current player utterance
    std::size_t token_estimate = 0;
    std::size_t turns_kept = 0;
    std::size_t story_entries_kept = 0;
};

struct ClassifierPrompt {
    std::string text;
    static constexpr std::string_view kTrue = "True";
    static constexpr std::string_view kFalse = "False";
};

// Player and NPC entries only; System narration never enters the
// conversation block.
std::vector<HistoryEntry> dialogue_turns(std::span<const HistoryEntry> history);

std::string render_turn(const HistoryEntry& turn, const PromptOptions& options = {});

// Sum of per-turn estimates of the rendered lines.
std::size_t estimate_history(std::span<const HistoryEntry> turns, const PromptOptions& options = {});

// Longest suffix of `turns` whose estimate fits the budget. Never splits a
// turn; may return an empty list.
std::vector<HistoryEntry> truncate_history(std::span<const HistoryEntry> turns, std::size_t budget,
                                           const PromptOptions& options = {});

// Fills `/{name}/` slots. Throws ConfigError on an unknown or unclosed slot.
std::string fill_slots(std::string_view tmpl,
                       const std::vector<std::pair<std::string, std::string>>& values);

// True when `s` still contains an unfilled "/{...}/" slot.
bool has_unfilled_slot(std::string_view s);

// Assembles the dialogue prompt under a token budget. System text is never
// truncated; oldest turns are dropped first, then trailing story entries.
// Throws ConfigError when the budget cannot hold the system text, the
// framing, and the player utterance.
PromptBundle build_dialogue_prompt(const LevelSpec& level, std::span<const HistoryEntry> history,
                                   std::span<const CorpusEntry> story_context, std::string_view player_text,
                                   std::size_t budget, const PromptOptions& options = {});

// Preamble, one "Question: ...\nAnswer: True|False" block per
// demonstration, the instruction line, then the input slot. Byte-stable for
// fixed inputs. Line breaks inside `input` are folded to spaces.
ClassifierPrompt build_trigger_prompt(const TriggerSpec& trigger, std::string_view input);

// Leading True/False token, case-insensitive, after optional whitespace,
// punctuation, or an "Answer:" label. Throws UnparseableReply otherwise.
bool parse_classifier_reply(std::string_view raw);

}  // namespace ryno::prompts
