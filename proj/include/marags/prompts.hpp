#pragma once

#include <string_view>

// Every fixed piece of prompt wording used by the pipeline. docs/prompts.md
// reproduces these verbatim.
namespace marags::prompts {

inline constexpr std::string_view kAnswerSystem =
    "You are a helpful assistant that answers questions using the provided references.";

inline constexpr std::string_view kQueryTimeHeader = "### Query Time: ";
inline constexpr std::string_view kReferencesHeader = "### References:";
inline constexpr std::string_view kQuestionHeader = "### Question: ";

inline constexpr std::string_view kAnswerInstruction =
    "### Instruction: Answer the question above as concisely as possible using the references. "
    "If the references do not contain the answer and you do not know it, reply exactly \"i don't know\".";

// Appended after kAnswerInstruction for the relabeling pass.
inline constexpr std::string_view kAlwaysAnswerInstruction =
    "### Note: Always produce your best answer. Do not reply \"i don't know\".";

inline constexpr std::string_view kMissAnswer = "i don't know";

inline constexpr std::string_view kJudgeSystem =
    "You are a strict grader for question answering. You compare a candidate answer to the ground truth.";

// Placeholders: {question}, {ground_truth}, {candidate}.
inline constexpr std::string_view kJudgeTemplate =
    "Question: {question}\n"
    "Ground truth: {ground_truth}\n"
    "Candidate answer: {candidate}\n"
    "Is the candidate answer correct with respect to the ground truth? Reply with \"yes\" or \"no\" only.";

inline constexpr std::string_view kApiCallSystem =
    "You translate questions into a single knowledge-graph API call.";

inline constexpr std::string_view kApiCatalogHeader = "### Available functions:";

inline constexpr std::string_view kApiCallInstruction =
    "### Instruction: Reply with exactly one call to one of the functions above, written as "
    "name(arg1, arg2, ...) with string arguments in double quotes, or reply None if no function applies.";

}  // namespace marags::prompts
