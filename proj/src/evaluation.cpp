#include "marags/evaluation.hpp"

#include <algorithm>
#include <cstdio>

#include "marags/error.hpp"
#include "marags/text.hpp"

namespace marags {

using json = nlohmann::json;

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Correct: return "Correct";
        case Verdict::Missing: return "Missing";
        case Verdict::Hallucinated: return "Hallucinated";
    }
    return "Missing";
}

std::string_view to_string(JudgeMode m) {
    return m == JudgeMode::ExactMatch ? "ExactMatch" : "LlmJudge";
}

std::optional<Verdict> parse_verdict(std::string_view s) {
    for (Verdict v : {Verdict::Correct, Verdict::Missing, Verdict::Hallucinated}) {
        if (to_string(v) == s) return v;
    }
    return std::nullopt;
}

std::optional<JudgeMode> parse_judge_mode(std::string_view s) {
    const std::string lower = text::to_lower_ascii(s);
    if (lower == "exactmatch" || lower == "exact" || lower == "exact-match") return JudgeMode::ExactMatch;
    if (lower == "llmjudge" || lower == "llm" || lower == "llm-judge") return JudgeMode::LlmJudge;
    return std::nullopt;
}

Facets Facets::of(const Sample& s) {
    return {s.domain_tag, s.question_type_tag, s.dynamism_tag, s.popularity_tag};
}

std::optional<Verdict> classify_answer(const AnswerRecord& answer, std::string_view truth, JudgeMode mode,
                                       const LlmClient* judge, std::string_view question, const Deadline& deadline) {
    if (answer.is_miss) return Verdict::Missing;
    if (mode == JudgeMode::ExactMatch) {
        return normalize_answer(answer.normalized) == normalize_answer(truth) ? Verdict::Correct : Verdict::Hallucinated;
    }
    if (!judge) throw Error(ErrorKind::InvalidConfig, "LLM judge mode needs a judge client");
    try {
        return judge_correct(*judge, question, truth, answer.raw_text, deadline) ? Verdict::Correct : Verdict::Hallucinated;
    } catch (const Error&) {
        return std::nullopt;
    }
}

Metrics Metrics::from_counts(std::size_t correct, std::size_t missing, std::size_t hallucinated) {
    Metrics m;
    m.correct = correct;
    m.missing = missing;
    m.hallucinated = hallucinated;
    m.n = correct + missing + hallucinated;
    if (m.n == 0) return m;
    const double n = static_cast<double>(m.n);
    m.accuracy = static_cast<double>(correct) / n;
    m.missing_rate = static_cast<double>(missing) / n;
    m.hallucination_rate = static_cast<double>(hallucinated) / n;
    m.crag = (static_cast<double>(correct) - static_cast<double>(hallucinated)) / n;
    return m;
}

namespace {

struct Counts {
    std::size_t correct = 0, missing = 0, hallucinated = 0;

    void add(Verdict v) {
        switch (v) {
            case Verdict::Correct: ++correct; break;
            case Verdict::Missing: ++missing; break;
            case Verdict::Hallucinated: ++hallucinated; break;
        }
    }
};

}  // namespace

std::map<std::string, Metrics> facet_breakdown(const std::vector<EvalRecord>& records) {
    std::map<std::string, Counts> groups;
    for (const auto& r : records) {
        const std::pair<const char*, const std::optional<std::string>*> facets[] = {
            {"domain", &r.facets.domain},
            {"question_type", &r.facets.question_type},
            {"dynamism", &r.facets.dynamism},
            {"popularity", &r.facets.popularity},
        };
        for (const auto& [name, value] : facets) {
            if (*value) groups[std::string(name) + "=" + **value].add(r.verdict);
        }
    }
    std::map<std::string, Metrics> out;
    for (const auto& [key, c] : groups) out.emplace(key, Metrics::from_counts(c.correct, c.missing, c.hallucinated));
    return out;
}

MetricsReport crag_score(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw Error(ErrorKind::EmptyRecords, "no evaluable records");
    Counts c;
    for (const auto& r : records) c.add(r.verdict);
    MetricsReport report;
    static_cast<Metrics&>(report) = Metrics::from_counts(c.correct, c.missing, c.hallucinated);
    report.by_facet = facet_breakdown(records);
    return report;
}

json to_json(const Metrics& m) {
    return {{"n", m.n},
            {"correct", m.correct},
            {"missing", m.missing},
            {"hallucinated", m.hallucinated},
            {"accuracy", m.accuracy},
            {"missing_rate", m.missing_rate},
            {"hallucination_rate", m.hallucination_rate},
            {"crag", m.crag}};
}

json to_json(const MetricsReport& r) {
    json j = to_json(static_cast<const Metrics&>(r));
    json facets = json::object();
    for (const auto& [key, m] : r.by_facet) facets[key] = to_json(m);
    j["by_facet"] = std::move(facets);
    return j;
}

json to_json(const EvalRecord& r) {
    return {{"sample_id", r.sample_id}, {"verdict", to_string(r.verdict)}, {"judge_mode", to_string(r.judge_mode)}};
}

namespace {

std::string fixed(double v, int digits) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string table(const std::vector<std::string>& headers, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(headers.size());
    for (std::size_t c = 0; c < headers.size(); ++c) {
        width[c] = headers[c].size();
        for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
    }
    auto line = [&](const std::vector<std::string>& cells) {
        std::string out;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == 0) {
                out += cells[c] + std::string(width[c] - cells[c].size(), ' ');
            } else {
                out += "  " + std::string(width[c] - cells[c].size(), ' ') + cells[c];
            }
        }
        return out + "\n";
    };
    std::string out = line(headers);
    std::size_t total = 0;
    for (auto w : width) total += w;
    out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
    for (const auto& row : rows) out += line(row);
    return out;
}

}  // namespace

std::string render_metrics_table(const std::vector<std::pair<std::string, Metrics>>& rows, std::string_view first_header) {
    std::vector<std::vector<std::string>> cells;
    for (const auto& [name, m] : rows) {
        cells.push_back({name, fixed(m.accuracy, 4), fixed(m.hallucination_rate, 4), fixed(m.crag, 4)});
    }
    return table({std::string(first_header), "Accuracy", "Hallucination", "CRAG"}, cells);
}

std::string render_retrieval_table(const std::vector<std::pair<std::string, Metrics>>& rows) {
    std::vector<std::vector<std::string>> cells;
    for (const auto& [name, m] : rows) cells.push_back({name, fixed(m.accuracy, 4), fixed(m.crag, 4)});
    return table({"Retrieval Model", "Accuracy", "CRAG"}, cells);
}

}  // namespace marags
