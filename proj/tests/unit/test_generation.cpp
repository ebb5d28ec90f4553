#include <doctest.h>

#include "marags/generation.hpp"
#include "marags/prompts.hpp"
#include "marags/testkit.hpp"
#include "marags/text.hpp"
#include "test_util.hpp"

using namespace marags;

namespace {

ScoredCandidate candidate(std::size_t i, std::string text, Origin origin = Origin::WebPage) {
    ScoredCandidate c;
    c.candidate_index = i;
    c.segment = make_segment(std::move(text), 0, origin);
    c.rank = i + 1;
    return c;
}

}  // namespace

TEST_CASE("prompt layout") {
    auto s = testutil::sample("q1", Task::Task2, 1);
    s.question = "  who   wrote it? ";
    const auto bundle = assemble_prompt({candidate(0, "first\nblock"), candidate(1, "second", Origin::ApiResponse)}, s);
    const std::string expected = "### Query Time: 01/01/2024, 00:00:00 PT\n"
                                 "### References:\n"
                                 "[1] first block\n"
                                 "[2] second\n"
                                 "### Question: who wrote it?\n" +
                                 std::string(prompts::kAnswerInstruction);
    CHECK(bundle.rendered == expected);
    CHECK(bundle.context_blocks.size() == 2);

    const auto bare = assemble_prompt({}, s);
    CHECK(bare.rendered.find(prompts::kReferencesHeader) == std::string::npos);

    PromptOptions always;
    always.always_answer = true;
    const auto relabel = assemble_prompt({}, s, always);
    CHECK(relabel.rendered.ends_with(prompts::kAlwaysAnswerInstruction));
}

TEST_CASE("Task 1 prompts never include knowledge-graph segments") {
    const auto s = testutil::sample("q1", Task::Task1, 1);
    const auto bundle = assemble_prompt({candidate(0, "kg fact", Origin::ApiResponse), candidate(1, "web fact")}, s);
    CHECK(bundle.context_blocks == std::vector<std::string>{"web fact"});
    CHECK(bundle.rendered.find("kg fact") == std::string::npos);
}

TEST_CASE("the cap drops the worst blocks first, then shortens the question") {
    auto s = testutil::sample("q1", Task::Task3, 1);
    std::vector<ScoredCandidate> cands;
    for (std::size_t i = 0; i < 5; ++i) cands.push_back(candidate(i, std::string(100, static_cast<char>('a' + i))));
    const auto full = assemble_prompt(cands, s);
    PromptOptions opt;
    opt.prompt_char_cap = text::char_count(full.rendered) - 1;
    const auto trimmed = assemble_prompt(cands, s, opt);
    REQUIRE(trimmed.context_blocks.size() == 4);
    CHECK(trimmed.context_blocks.back() == std::string(100, 'd'));
    CHECK(text::char_count(trimmed.rendered) <= opt.prompt_char_cap);

    const auto no_refs = assemble_prompt({}, s);
    opt.prompt_char_cap = text::char_count(no_refs.rendered) - 3;
    const auto cut = assemble_prompt(cands, s, opt);
    CHECK(cut.context_blocks.empty());
    CHECK(cut.question == s.question.substr(0, s.question.size() - 3));
    CHECK(text::char_count(cut.rendered) == opt.prompt_char_cap);
}

TEST_CASE("adapter selection") {
    CHECK(select_adapter(Task::Task1) == AdapterId::task1_qa());
    CHECK(select_adapter(Task::Task3) == AdapterId::task3_qa());
    CHECK(select_adapter(Task::Task2, true) == AdapterId::base());
}

TEST_CASE("answer normalization") {
    CHECK(normalize_answer("  I Don\xE2\x80\x99t   Know. ") == "i don't know");
    CHECK(normalize_answer("Paris!!") == "paris");
    CHECK(normalize_answer("3.5") == "3.5");
    for (const char* s : {"A  b.", "\xE2\x80\x98x\xE2\x80\x99 ?", "", "..."}) {
        const auto once = normalize_answer(s);
        CHECK(normalize_answer(once) == once);
    }
    const auto phrases = default_miss_phrases();
    CHECK(is_miss_answer("i don't know", {}));
    CHECK(is_miss_answer(normalize_answer("I do not know."), phrases));
    CHECK_FALSE(is_miss_answer("i don't know paris", phrases));
    CHECK(is_miss_answer("unsure", {"Unsure."}));
}

TEST_CASE("failed answers are misses tagged with the error class") {
    const auto rec = failed_answer("id", "ServiceUnavailable");
    CHECK(rec.raw_text == "[error] ServiceUnavailable");
    CHECK(rec.is_miss);
    CHECK(rec.normalized == "i don't know");
}

TEST_CASE("generate_answer against the stub") {
    testkit::StubRule rule;
    rule.model = "task1-qa";
    rule.pattern = "\\[1\\] the answer is (\\w+)";
    rule.response = "$1.";
    testkit::StubLlm stub({rule});
    LlmConfig cfg;
    cfg.base_url = stub.url();
    const LlmClient llm(cfg);
    const auto s = testutil::sample("q1", Task::Task1, 1);
    const auto bundle = assemble_prompt({candidate(0, "the answer is Blue")}, s);
    const auto rec = generate_answer(llm, bundle, AdapterId::task1_qa(), "q1");
    CHECK(rec.raw_text == "Blue.");
    CHECK(rec.normalized == "blue");
    CHECK_FALSE(rec.is_miss);
    const auto body = stub.captured().at(0);
    CHECK(body["max_tokens"] == 75);
    CHECK(body["messages"][0]["content"] == std::string(prompts::kAnswerSystem));

    LlmConfig down;
    down.base_url = "http://127.0.0.1:1";
    down.initial_backoff = std::chrono::milliseconds(1);
    const auto failed = generate_answer(LlmClient(down), bundle, AdapterId::task1_qa(), "q1");
    CHECK(failed.raw_text == "[error] ServiceUnavailable");
    CHECK(failed.is_miss);
}
