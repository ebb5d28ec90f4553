#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "marags/corpus.hpp"
#include "marags/pipeline.hpp"

namespace marags {

enum class CurationTask { ApiCall, Task1QA, Task2QA, Task3QA };
enum class Provenance { OriginalLabel, RelabeledMiss, SuccessfulCall, NoneTarget, NeedsReview };

inline constexpr CurationTask kAllCurationTasks[] = {CurationTask::ApiCall, CurationTask::Task1QA,
                                                     CurationTask::Task2QA, CurationTask::Task3QA};

std::string_view to_string(CurationTask t);
std::string_view to_string(Provenance p);
std::optional<CurationTask> parse_curation_task(std::string_view s);
std::optional<Provenance> parse_provenance(std::string_view s);

CurationTask qa_curation_task(Task task);

// Output file name for one task, e.g. "task2_qa.jsonl".
std::string training_file_name(CurationTask t);

struct TrainingExample {
    std::string sample_id;
    CurationTask task = CurationTask::Task1QA;
    std::string prompt;
    std::string target;
    bool relabeled = false;  // == (provenance == RelabeledMiss)
    Provenance provenance = Provenance::OriginalLabel;
    std::string raw_generation;  // API examples only

    bool operator==(const TrainingExample&) const = default;
};

nlohmann::json to_json(const TrainingExample& e);
TrainingExample training_example_from_json(const nlohmann::json& j);

/// One answer per ranker kind from the base model under the always-answer
/// instruction. Any correct judgement keeps the original label, otherwise
/// the target becomes "i don't know". False-premise samples always keep
/// theirs. Samples without ground truth are counted in `skipped`.
/// LLM and judge failures abort with the underlying Error.
std::vector<TrainingExample> relabel_qa_targets(const std::vector<Sample>& samples, const PipelineContext& ctx,
                                                std::size_t* skipped = nullptr);

// A reviewer's answer for one NeedsReview example. "None" means no call.
struct ReviewEntry {
    std::string sample_id;
    std::string raw_generation;
    std::optional<std::string> corrected_call;

    bool operator==(const ReviewEntry&) const = default;
};

/// Base-model call generation for Task 2 and 3 samples. Calls that execute
/// become targets; everything else needs review. `corrections` replaces the
/// review step. Throws Error{ServiceUnavailable} when the KG endpoint is
/// unreachable.
std::vector<TrainingExample> curate_api_targets(const std::vector<Sample>& samples, const PipelineContext& ctx,
                                                const std::map<std::string, std::string>& corrections = {});

std::vector<ReviewEntry> review_entries(const std::vector<TrainingExample>& examples);
void write_review_file(const std::vector<ReviewEntry>& entries, const std::filesystem::path& path);
// Entries with a null corrected_call are ignored. Throws Error{FileUnreadable}.
std::map<std::string, std::string> read_corrections(const std::filesystem::path& path);

inline constexpr int kTrainingLoraRank = 256;
inline constexpr double kTrainingWeightDecay = 1.0;

/// Writes one file per curation task, ordered by sample id, plus
/// training_meta.json. Returns the written paths. Throws
/// Error{UnwritableDirectory}.
std::vector<std::filesystem::path> emit_training_files(std::vector<TrainingExample> examples,
                                                       const std::filesystem::path& out_dir);

struct CurationSummary {
    std::size_t samples = 0;
    std::size_t skipped_no_truth = 0;
    std::map<std::string, std::size_t> by_provenance;
    std::size_t review_entries = 0;
    std::vector<std::filesystem::path> files;
};

/// Relabels QA targets and curates API targets for the configured dataset,
/// then emits the training files and review.jsonl.
CurationSummary run_curation(const RunConfig& config);

}  // namespace marags
