#include "marags/corpus.hpp"

#include <fstream>
#include <unordered_set>

#include "marags/error.hpp"
#include "marags/text.hpp"

namespace marags {

using json = nlohmann::json;

std::string_view to_string(Task task) {
    switch (task) {
        case Task::Task1: return "Task1";
        case Task::Task2: return "Task2";
        case Task::Task3: return "Task3";
    }
    return "Task1";
}

std::optional<Task> parse_task(std::string_view s) {
    const std::string lower = text::to_lower_ascii(s);
    if (lower == "task1" || lower == "1") return Task::Task1;
    if (lower == "task2" || lower == "2") return Task::Task2;
    if (lower == "task3" || lower == "3") return Task::Task3;
    return std::nullopt;
}

std::size_t max_documents(Task task) noexcept {
    return task == Task::Task3 ? 50 : 5;
}

bool uses_knowledge_graph(Task task) noexcept {
    return task != Task::Task1;
}

std::vector<Violation> validate_sample(const Sample& sample) {
    std::vector<Violation> out;
    if (sample.id.empty()) out.push_back({"id", "must be non-empty"});
    if (sample.search_results.size() > max_documents(sample.task)) {
        out.push_back({"search_results", "TaskViolation: " + std::string(to_string(sample.task)) +
                                             " allows at most " +
                                             std::to_string(max_documents(sample.task)) +
                                             " documents, got " +
                                             std::to_string(sample.search_results.size())});
    }
    return out;
}

namespace {

struct BadRecord : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::optional<std::string> optional_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw BadRecord(std::string(key) + " must be a string");
    return it->get<std::string>();
}

Task task_from_json(const json& j) {
    std::optional<Task> task;
    if (j.is_number_integer()) {
        task = parse_task(std::to_string(j.get<int>()));
    } else if (j.is_string()) {
        task = parse_task(j.get<std::string>());
    }
    if (!task) throw BadRecord("unrecognized task value");
    return *task;
}

}  // namespace

Sample sample_from_json(const json& j) {
    Sample s;
    s.id = j.at("id").get<std::string>();
    s.question = j.at("question").get<std::string>();
    s.task = task_from_json(j.at("task"));
    s.query_time = optional_string(j, "query_time").value_or("");
    for (const auto& r : j.at("search_results")) {
        SearchResult sr;
        sr.page_name = optional_string(r, "page_name").value_or("");
        sr.page_url = optional_string(r, "page_url").value_or("");
        sr.page_snippet = optional_string(r, "page_snippet").value_or("");
        sr.page_html = text::sanitize_utf8(optional_string(r, "page_html").value_or(""));
        s.search_results.push_back(std::move(sr));
    }
    s.answer = optional_string(j, "answer");
    s.domain_tag = optional_string(j, "domain");
    s.question_type_tag = optional_string(j, "question_type");
    s.dynamism_tag = optional_string(j, "static_or_dynamic");
    s.popularity_tag = optional_string(j, "popularity");
    return s;
}

json to_json(const Sample& s) {
    json results = json::array();
    for (const auto& r : s.search_results) {
        results.push_back({{"page_name", r.page_name},
                           {"page_url", r.page_url},
                           {"page_snippet", r.page_snippet},
                           {"page_html", r.page_html}});
    }
    json j = {{"id", s.id},
              {"question", s.question},
              {"task", to_string(s.task)},
              {"query_time", s.query_time},
              {"search_results", std::move(results)}};
    if (s.answer) j["answer"] = *s.answer;
    if (s.domain_tag) j["domain"] = *s.domain_tag;
    if (s.question_type_tag) j["question_type"] = *s.question_type_tag;
    if (s.dynamism_tag) j["static_or_dynamic"] = *s.dynamism_tag;
    if (s.popularity_tag) j["popularity"] = *s.popularity_tag;
    return j;
}

Dataset load_dataset(const std::filesystem::path& path, std::optional<Task> task) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::FileUnreadable, "cannot open " + path.string());

    Dataset ds;
    ds.source_path = path.string();
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    std::size_t well_formed = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!text::has_non_space(line)) continue;
        Sample sample;
        try {
            sample = sample_from_json(json::parse(text::sanitize_utf8(line)));
        } catch (const std::exception&) {
            ++ds.skipped_count;
            continue;
        }
        ++well_formed;

        auto violations = validate_sample(sample);
        if (task && sample.task != *task) {
            violations.push_back({"task", "expected " + std::string(to_string(*task))});
        }
        if (!seen_ids.insert(sample.id).second) {
            violations.push_back({"id", "duplicate id within dataset"});
        }
        if (!violations.empty()) {
            ds.rejected.push_back({line_no, sample.id, std::move(violations)});
            continue;
        }
        ds.samples.push_back(std::move(sample));
    }
    if (in.bad()) throw Error(ErrorKind::FileUnreadable, "read failure on " + path.string());
    if (well_formed == 0) throw Error(ErrorKind::EmptyDataset, path.string() + " has no well-formed records");
    return ds;
}

void write_dataset(const std::filesystem::path& path, const std::vector<Sample>& samples) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::UnwritableDirectory, "cannot write " + path.string());
    for (const auto& s : samples) out << to_json(s).dump() << '\n';
}

}  // namespace marags
