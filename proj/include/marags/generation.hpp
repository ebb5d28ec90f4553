#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "marags/corpus.hpp"
#include "marags/llm_client.hpp"
#include "marags/rankers.hpp"

namespace marags {

inline constexpr std::size_t kDefaultPromptCharCap = 12000;

struct PromptOptions {
    std::size_t prompt_char_cap = kDefaultPromptCharCap;
    bool always_answer = false;  // relabeling pass: forbid "i don't know"
};

/// The final answer prompt: dated header, numbered references best-first,
/// then the question, then the instruction.
struct PromptBundle {
    std::vector<std::string> context_blocks;
    std::string question;
    std::string query_time;
    Task task = Task::Task1;
    std::string rendered;
};

/// Worst-ranked blocks are dropped until the prompt fits the cap. Task 1
/// bundles never carry knowledge-graph segments.
PromptBundle assemble_prompt(const std::vector<ScoredCandidate>& candidates, const Sample& sample,
                             const PromptOptions& options = {});

// task-specific adapter, or the base model when `use_base_model` is set
AdapterId select_adapter(Task task, bool use_base_model = false);

/// Lowercase, typographic apostrophes folded, whitespace collapsed and
/// trailing punctuation stripped. Idempotent.
std::string normalize_answer(std::string_view answer);

std::vector<std::string> default_miss_phrases();

bool is_miss_answer(std::string_view normalized, const std::vector<std::string>& miss_phrases);

struct AnswerRecord {
    std::string sample_id;
    std::string raw_text;
    std::string normalized;
    bool is_miss = false;

    bool operator==(const AnswerRecord&) const = default;
};

// Marks an answer as missing because of an infrastructure failure.
AnswerRecord failed_answer(std::string sample_id, std::string_view error_class);

ChatRequest answer_request(const PromptBundle& bundle, const AdapterId& adapter);

/// One chat call. Infrastructure failures never propagate: they yield a
/// missing answer whose raw_text is "[error] <ErrorKind>".
AnswerRecord generate_answer(const LlmClient& llm, const PromptBundle& bundle, const AdapterId& adapter,
                             const std::string& sample_id,
                             const std::vector<std::string>& miss_phrases = default_miss_phrases(),
                             const Deadline& deadline = {});

}  // namespace marags
