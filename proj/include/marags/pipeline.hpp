#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "marags/corpus.hpp"
#include "marags/evaluation.hpp"
#include "marags/generation.hpp"
#include "marags/kg.hpp"
#include "marags/llm_client.hpp"
#include "marags/rankers.hpp"

namespace marags {

inline constexpr std::chrono::milliseconds kDefaultSampleDeadline{30000};
inline constexpr std::size_t kDefaultCompareBudget = 500;

struct Endpoints {
    std::string llm;
    std::string embed;
    std::string cross;
    std::string kg;
};

/// Everything a run needs. Populated from defaults, then an optional
/// key/value config file, then environment, then command-line flags.
struct RunConfig {
    std::optional<Task> task;  // restrict the dataset to one task
    std::filesystem::path input;
    std::filesystem::path output_dir = "out";
    RankerKind ranker = kDefaultRanker;
    std::size_t top_k = kDefaultTopK;
    std::size_t char_budget = kDefaultCharBudget;
    std::size_t max_segment_chars = kDefaultMaxSegmentChars;
    std::size_t prompt_char_cap = kDefaultPromptCharCap;
    std::size_t parallelism = 1;       // concurrent samples
    std::size_t doc_parallelism = 8;   // concurrent documents within a sample
    std::chrono::milliseconds per_sample_deadline = kDefaultSampleDeadline;
    Endpoints endpoints;
    JudgeMode judge_mode = JudgeMode::ExactMatch;
    bool use_base_adapter = false;     // ablation: base model for every call
    bool use_snippets = false;         // add page snippets to the candidate pool
    std::filesystem::path registry_path;
    std::map<std::string, std::string> adapter_models;
    std::chrono::milliseconds llm_timeout{30000};
    std::chrono::milliseconds service_timeout{10000};
    std::chrono::milliseconds kg_timeout{5000};
    int max_attempts = 3;
    std::size_t max_inflight = 8;
    std::size_t service_batch_size = 64;
    std::uint64_t seed = 0;
    std::size_t sample_budget = kDefaultCompareBudget;
    std::filesystem::path corrections_path;

    // Throws Error{InvalidConfig}.
    void validate() const;
};

/// Long-lived clients and registry shared by all workers of one run.
class PipelineContext {
public:
    explicit PipelineContext(const RunConfig& config);

    const RunConfig& config() const noexcept { return config_; }
    const LlmClient& llm() const noexcept { return llm_; }
    const EmbeddingClient& embed() const noexcept { return embed_; }
    const CrossEncoderClient& cross() const noexcept { return cross_; }
    const kg::ApiRegistry& registry() const noexcept { return registry_; }
    kg::KgEndpointConfig kg_endpoint() const;
    RankerClients ranker_clients() const noexcept { return {&embed_, &cross_}; }

private:
    RunConfig config_;
    LlmClient llm_;
    EmbeddingClient embed_;
    CrossEncoderClient cross_;
    kg::ApiRegistry registry_;
};

// Runs fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

// Web segments of every document, in document order, segmented concurrently.
std::vector<Segment> segment_documents(const Sample& sample, std::size_t max_segment_chars, bool use_snippets,
                                       std::size_t workers);

struct KgStep {
    bool attempted = false;
    std::string raw_generation;
    kg::CallOutcome outcome;
};

// One generated knowledge-graph call for Tasks 2 and 3; Task 1 never calls.
KgStep knowledge_graph_step(const Sample& sample, const PipelineContext& ctx, const Deadline& deadline);

struct Retrieval {
    std::vector<Segment> pool;  // web segments followed by API segments
    std::vector<ScoredCandidate> selected;
    KgStep kg;
    std::map<std::string, std::int64_t> timings_ms;
};

Retrieval retrieve(const Sample& sample, RankerKind kind, const PipelineContext& ctx, const Deadline& deadline);

// Ranks an existing pool (the KG step is shared across ranker kinds).
std::vector<ScoredCandidate> rank_and_select(const Sample& sample, const std::vector<Segment>& pool, RankerKind kind,
                                             const PipelineContext& ctx, const Deadline& deadline);

struct SampleOutcome {
    AnswerRecord answer;
    std::optional<EvalRecord> eval;
    bool deadline_exceeded = false;
    nlohmann::json log;
};

SampleOutcome process_sample(const Sample& sample, const PipelineContext& ctx, RankerKind kind, bool use_base_adapter);

struct RunSummary {
    std::size_t samples = 0;
    std::size_t evaluated = 0;
    std::size_t unevaluable = 0;
    std::size_t deadline_exceeded = 0;
    std::size_t kg_calls = 0;
    std::size_t skipped_lines = 0;
    std::size_t rejected_samples = 0;
    std::optional<MetricsReport> metrics;
    std::vector<SampleOutcome> outcomes;  // ordered by sample id
};

/// End-to-end run. Writes answers.jsonl, eval.jsonl, metrics.json,
/// metrics.txt and run_log.jsonl to the output directory; files other than
/// the run log depend only on inputs, never on scheduling.
RunSummary run_pipeline(const RunConfig& config);

// Same as run_pipeline over already-loaded samples, without writing files.
RunSummary run_samples(const std::vector<Sample>& samples, const PipelineContext& ctx, RankerKind kind,
                       bool use_base_adapter);

// Seeded Fisher-Yates shuffle, first `budget` samples.
std::vector<Sample> select_subset(const std::vector<Sample>& samples, std::size_t budget, std::uint64_t seed);

struct ComparisonRow {
    RankerKind kind;
    Metrics metrics;
};

/// Runs the same subset once per ranker kind with the base model and
/// writes retrieval_comparison.{txt,json}.
std::vector<ComparisonRow> compare_retrievers(const RunConfig& config, std::size_t sample_budget);

}  // namespace marags
