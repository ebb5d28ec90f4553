#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace marags {

enum class Task { Task1, Task2, Task3 };

std::string_view to_string(Task task);
std::optional<Task> parse_task(std::string_view s);

// Task 1 and 2 receive 5 candidate pages, Task 3 receives 50.
std::size_t max_documents(Task task) noexcept;

// Tasks 2 and 3 may consult the knowledge graph.
bool uses_knowledge_graph(Task task) noexcept;

inline constexpr std::string_view kFalsePremiseLabel = "false_premise";

struct SearchResult {
    std::string page_name;
    std::string page_url;
    std::string page_snippet;
    std::string page_html;

    bool operator==(const SearchResult&) const = default;
};

struct Sample {
    std::string id;
    std::string question;
    std::string query_time;
    Task task = Task::Task1;
    std::vector<SearchResult> search_results;
    std::optional<std::string> answer;
    std::optional<std::string> domain_tag;
    std::optional<std::string> question_type_tag;
    std::optional<std::string> dynamism_tag;
    std::optional<std::string> popularity_tag;

    bool false_premise() const noexcept {
        return question_type_tag && *question_type_tag == kFalsePremiseLabel;
    }

    bool operator==(const Sample&) const = default;
};

struct Violation {
    std::string field;
    std::string rule;

    bool operator==(const Violation&) const = default;
};

// A rejected record: which line, which sample (if the id parsed), and why.
struct RejectedSample {
    std::size_t line = 0;
    std::string sample_id;
    std::vector<Violation> violations;
};

struct Dataset {
    std::vector<Sample> samples;
    std::string source_path;
    std::size_t skipped_count = 0;        // malformed lines
    std::vector<RejectedSample> rejected;  // well-formed but invariant-violating
};

std::vector<Violation> validate_sample(const Sample& sample);

// Reads a line-delimited record file. When `task` is given, records of other
// tasks are rejected. Throws Error{FileUnreadable} or Error{EmptyDataset}.
Dataset load_dataset(const std::filesystem::path& path, std::optional<Task> task = std::nullopt);

nlohmann::json to_json(const Sample& sample);
Sample sample_from_json(const nlohmann::json& j);

void write_dataset(const std::filesystem::path& path, const std::vector<Sample>& samples);

}  // namespace marags
