#include <doctest.h>

#include "marags/evaluation.hpp"
#include "marags/testkit.hpp"
#include "test_util.hpp"

using namespace marags;

namespace {

AnswerRecord answer(const std::string& raw) {
    AnswerRecord a;
    a.sample_id = "s";
    a.raw_text = raw;
    a.normalized = normalize_answer(raw);
    a.is_miss = is_miss_answer(a.normalized, default_miss_phrases());
    return a;
}

EvalRecord record(Verdict v, std::optional<std::string> domain = std::nullopt,
                  std::optional<std::string> popularity = std::nullopt) {
    EvalRecord r;
    r.verdict = v;
    r.facets.domain = std::move(domain);
    r.facets.popularity = std::move(popularity);
    return r;
}

}  // namespace

TEST_CASE("exact-match classification") {
    CHECK(classify_answer(answer("Paris."), "paris", JudgeMode::ExactMatch) == Verdict::Correct);
    CHECK(classify_answer(answer("Lyon"), "paris", JudgeMode::ExactMatch) == Verdict::Hallucinated);
    CHECK(classify_answer(answer("I don't know"), "paris", JudgeMode::ExactMatch) == Verdict::Missing);
    CHECK(classify_answer(failed_answer("s", "DeadlineExceeded"), "paris", JudgeMode::ExactMatch) ==
          Verdict::Missing);
    CHECK(testutil::error_kind([] { classify_answer(answer("x"), "x", JudgeMode::LlmJudge); }) ==
          ErrorKind::InvalidConfig);
}

TEST_CASE("LLM judge classification, and judge failures are unevaluable") {
    testkit::StubRule yes;
    yes.pattern = "Ground truth: ([^\\n]*)\\nCandidate answer: \\1\\n";
    yes.response = "yes";
    testkit::StubRule no;
    no.response = "no";
    testkit::StubLlm stub({yes, no});
    LlmConfig cfg;
    cfg.base_url = stub.url();
    const LlmClient judge(cfg);
    CHECK(classify_answer(answer("paris"), "paris", JudgeMode::LlmJudge, &judge, "q") == Verdict::Correct);
    CHECK(classify_answer(answer("lyon"), "paris", JudgeMode::LlmJudge, &judge, "q") == Verdict::Hallucinated);
    CHECK(classify_answer(answer("i don't know"), "paris", JudgeMode::LlmJudge, &judge, "q") == Verdict::Missing);

    LlmConfig down_cfg;
    down_cfg.base_url = "http://127.0.0.1:1";
    down_cfg.initial_backoff = std::chrono::milliseconds(1);
    const LlmClient down(down_cfg);
    CHECK_FALSE(classify_answer(answer("paris"), "paris", JudgeMode::LlmJudge, &down, "q").has_value());
}

TEST_CASE("metrics from counts") {
    const auto m = Metrics::from_counts(2, 1, 1);
    CHECK(m.n == 4);
    CHECK(m.accuracy == doctest::Approx(0.5));
    CHECK(m.missing_rate == doctest::Approx(0.25));
    CHECK(m.hallucination_rate == doctest::Approx(0.25));
    CHECK(m.crag == doctest::Approx(0.25));
    CHECK(m.accuracy + m.missing_rate + m.hallucination_rate == doctest::Approx(1.0));
    CHECK(Metrics::from_counts(0, 0, 0).crag == 0.0);
    CHECK(Metrics::from_counts(0, 0, 3).crag == doctest::Approx(-1.0));
}

TEST_CASE("crag_score with facets") {
    CHECK(testutil::error_kind([] { crag_score({}); }) == ErrorKind::EmptyRecords);
    const std::vector<EvalRecord> records = {
        record(Verdict::Correct, "finance", "head"),
        record(Verdict::Hallucinated, "finance", "tail"),
        record(Verdict::Missing, "movie"),
        record(Verdict::Correct),
    };
    const auto report = crag_score(records);
    CHECK(report.n == 4);
    CHECK(report.crag == doctest::Approx(0.25));
    REQUIRE(report.by_facet.count("domain=finance"));
    CHECK(report.by_facet.at("domain=finance").n == 2);
    CHECK(report.by_facet.at("domain=finance").crag == doctest::Approx(0.0));
    CHECK(report.by_facet.at("domain=movie").missing_rate == doctest::Approx(1.0));
    CHECK(report.by_facet.at("popularity=tail").hallucination_rate == doctest::Approx(1.0));
    CHECK(report.by_facet.size() == 4);

    const auto j = to_json(report);
    CHECK(j["n"] == 4);
    CHECK(j.dump().find("domain=finance") != std::string::npos);
}

TEST_CASE("tables") {
    const auto t = render_metrics_table({{"TF-IDF", Metrics::from_counts(1, 0, 1)}, {"Ensemble", Metrics::from_counts(2, 2, 0)}});
    CHECK(t.find("Model/Run") != std::string::npos);
    CHECK(t.find("Hallucination") != std::string::npos);
    CHECK(t.find("0.5000") != std::string::npos);
    CHECK(t.find("Ensemble") != std::string::npos);

    const auto r = render_retrieval_table({{"Cross-encoder", Metrics::from_counts(3, 0, 1)}});
    CHECK(r.find("Retrieval Model") != std::string::npos);
    CHECK(r.find("0.7500") != std::string::npos);
    CHECK(r.find("Hallucination") == std::string::npos);
}

TEST_CASE("verdict and judge-mode names round-trip") {
    for (auto v : {Verdict::Correct, Verdict::Missing, Verdict::Hallucinated}) CHECK(parse_verdict(to_string(v)) == v);
    for (auto m : {JudgeMode::ExactMatch, JudgeMode::LlmJudge}) CHECK(parse_judge_mode(to_string(m)) == m);
    CHECK_FALSE(parse_verdict("maybe"));
}
