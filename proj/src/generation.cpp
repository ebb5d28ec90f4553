#include "marags/generation.hpp"

#include <algorithm>

#include "marags/error.hpp"
#include "marags/prompts.hpp"
#include "marags/text.hpp"

namespace marags {

namespace {

std::string render(const std::vector<std::string>& blocks, std::string_view question, std::string_view query_time,
                   bool always_answer) {
    std::string out;
    out += prompts::kQueryTimeHeader;
    out += query_time;
    out += "\n";
    if (!blocks.empty()) {
        out += prompts::kReferencesHeader;
        out += "\n";
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            out += "[" + std::to_string(i + 1) + "] " + blocks[i] + "\n";
        }
    }
    out += prompts::kQuestionHeader;
    out += question;
    out += "\n";
    out += prompts::kAnswerInstruction;
    if (always_answer) {
        out += "\n";
        out += prompts::kAlwaysAnswerInstruction;
    }
    return out;
}

}  // namespace

PromptBundle assemble_prompt(const std::vector<ScoredCandidate>& candidates, const Sample& sample,
                             const PromptOptions& options) {
    PromptBundle bundle;
    bundle.task = sample.task;
    bundle.query_time = text::collapse_whitespace(sample.query_time);
    bundle.question = text::collapse_whitespace(sample.question);
    for (const auto& c : candidates) {
        if (sample.task == Task::Task1 && c.segment.origin == Origin::ApiResponse) continue;
        bundle.context_blocks.push_back(text::collapse_whitespace(c.segment.text));
    }

    bundle.rendered = render(bundle.context_blocks, bundle.question, bundle.query_time, options.always_answer);
    while (!bundle.context_blocks.empty() && text::char_count(bundle.rendered) > options.prompt_char_cap) {
        bundle.context_blocks.pop_back();
        bundle.rendered = render(bundle.context_blocks, bundle.question, bundle.query_time, options.always_answer);
    }
    const std::size_t len = text::char_count(bundle.rendered);
    if (len > options.prompt_char_cap) {
        // Even the context-free prompt is too long: shorten the question.
        const std::size_t excess = len - options.prompt_char_cap;
        const std::size_t keep = text::char_count(bundle.question) > excess ? text::char_count(bundle.question) - excess : 0;
        bundle.question.resize(text::byte_offset(bundle.question, keep));
        bundle.rendered = render(bundle.context_blocks, bundle.question, bundle.query_time, options.always_answer);
    }
    return bundle;
}

AdapterId select_adapter(Task task, bool use_base_model) {
    if (use_base_model) return AdapterId::base();
    switch (task) {
        case Task::Task1: return AdapterId::task1_qa();
        case Task::Task2: return AdapterId::task2_qa();
        case Task::Task3: return AdapterId::task3_qa();
    }
    return AdapterId::base();
}

std::string normalize_answer(std::string_view answer) {
    std::string folded;
    folded.reserve(answer.size());
    for (std::size_t i = 0; i < answer.size(); ++i) {
        // U+2018 / U+2019 -> '
        if (i + 2 < answer.size() && answer.compare(i, 2, "\xE2\x80") == 0 &&
            (answer[i + 2] == '\x98' || answer[i + 2] == '\x99')) {
            folded.push_back('\'');
            i += 2;
            continue;
        }
        folded.push_back(answer[i]);
    }
    std::string out = text::collapse_whitespace(text::to_lower_ascii(folded));
    auto trailing = [](char c) {
        return c == '.' || c == '!' || c == '?' || c == ',' || c == ';' || c == ':' || text::is_space(c);
    };
    while (!out.empty() && trailing(out.back())) out.pop_back();
    return out;
}

std::vector<std::string> default_miss_phrases() {
    return {std::string(prompts::kMissAnswer), "i do not know"};
}

bool is_miss_answer(std::string_view normalized, const std::vector<std::string>& miss_phrases) {
    if (normalized == prompts::kMissAnswer) return true;
    return std::any_of(miss_phrases.begin(), miss_phrases.end(),
                       [&](const std::string& p) { return normalize_answer(p) == normalized; });
}

AnswerRecord failed_answer(std::string sample_id, std::string_view error_class) {
    AnswerRecord rec;
    rec.sample_id = std::move(sample_id);
    rec.raw_text = "[error] " + std::string(error_class);
    rec.normalized = std::string(prompts::kMissAnswer);
    rec.is_miss = true;
    return rec;
}

ChatRequest answer_request(const PromptBundle& bundle, const AdapterId& adapter) {
    ChatRequest req;
    req.adapter = adapter;
    req.system = std::string(prompts::kAnswerSystem);
    req.user = bundle.rendered;
    req.max_tokens = 75;
    return req;
}

AnswerRecord generate_answer(const LlmClient& llm, const PromptBundle& bundle, const AdapterId& adapter,
                             const std::string& sample_id, const std::vector<std::string>& miss_phrases,
                             const Deadline& deadline) {
    const ChatRequest req = answer_request(bundle, adapter);
    try {
        const ChatResponse reply = llm.chat(req, deadline);
        AnswerRecord rec;
        rec.sample_id = sample_id;
        rec.raw_text = reply.text;
        rec.normalized = normalize_answer(reply.text);
        rec.is_miss = is_miss_answer(rec.normalized, miss_phrases);
        return rec;
    } catch (const Error& e) {
        return failed_answer(sample_id, to_string(e.kind()));
    }
}

}  // namespace marags
