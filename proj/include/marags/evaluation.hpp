#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "marags/corpus.hpp"
#include "marags/generation.hpp"
#include "marags/llm_client.hpp"

namespace marags {

// CRAG scoring: +1 correct, 0 missing, -1 hallucinated.
enum class Verdict { Correct, Missing, Hallucinated };
enum class JudgeMode { ExactMatch, LlmJudge };

std::string_view to_string(Verdict v);
std::string_view to_string(JudgeMode m);
std::optional<Verdict> parse_verdict(std::string_view s);
std::optional<JudgeMode> parse_judge_mode(std::string_view s);

struct Facets {
    std::optional<std::string> domain;
    std::optional<std::string> question_type;
    std::optional<std::string> dynamism;
    std::optional<std::string> popularity;

    static Facets of(const Sample& sample);
    bool operator==(const Facets&) const = default;
};

struct EvalRecord {
    std::string sample_id;
    Verdict verdict = Verdict::Missing;
    JudgeMode judge_mode = JudgeMode::ExactMatch;
    Facets facets;

    bool operator==(const EvalRecord&) const = default;
};

/// Returns nullopt when the LLM judge fails: such records are unevaluable
/// and must be excluded rather than assigned a verdict.
std::optional<Verdict> classify_answer(const AnswerRecord& answer, std::string_view truth, JudgeMode mode,
                                       const LlmClient* judge = nullptr, std::string_view question = {},
                                       const Deadline& deadline = {});

struct Metrics {
    std::size_t n = 0;
    std::size_t correct = 0;
    std::size_t missing = 0;
    std::size_t hallucinated = 0;
    double accuracy = 0.0;
    double missing_rate = 0.0;
    double hallucination_rate = 0.0;
    double crag = 0.0;

    static Metrics from_counts(std::size_t correct, std::size_t missing, std::size_t hallucinated);
};

struct MetricsReport : Metrics {
    std::map<std::string, Metrics> by_facet;  // "domain=finance", "popularity=tail", ...
};

// Throws Error{EmptyRecords} for an empty input.
MetricsReport crag_score(const std::vector<EvalRecord>& records);

std::map<std::string, Metrics> facet_breakdown(const std::vector<EvalRecord>& records);

nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const MetricsReport& r);
nlohmann::json to_json(const EvalRecord& r);

// Aligned text table with columns <first_header>, Accuracy, Hallucination, CRAG.
std::string render_metrics_table(const std::vector<std::pair<std::string, Metrics>>& rows,
                                 std::string_view first_header = "Model/Run");

// Aligned text table with columns Retrieval Model, Accuracy, CRAG.
std::string render_retrieval_table(const std::vector<std::pair<std::string, Metrics>>& rows);

}  // namespace marags
