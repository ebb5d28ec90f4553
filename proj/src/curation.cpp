#include "marags/curation.hpp"

#include <algorithm>
#include <fstream>

#include "marags/error.hpp"
#include "marags/prompts.hpp"
#include "marags/text.hpp"

namespace marags {

using json = nlohmann::json;

std::string_view to_string(CurationTask t) {
    switch (t) {
        case CurationTask::ApiCall: return "ApiCall";
        case CurationTask::Task1QA: return "Task1QA";
        case CurationTask::Task2QA: return "Task2QA";
        case CurationTask::Task3QA: return "Task3QA";
    }
    return "ApiCall";
}

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::OriginalLabel: return "OriginalLabel";
        case Provenance::RelabeledMiss: return "RelabeledMiss";
        case Provenance::SuccessfulCall: return "SuccessfulCall";
        case Provenance::NoneTarget: return "NoneTarget";
        case Provenance::NeedsReview: return "NeedsReview";
    }
    return "NeedsReview";
}

std::optional<CurationTask> parse_curation_task(std::string_view s) {
    for (auto t : kAllCurationTasks) {
        if (to_string(t) == s) return t;
    }
    return std::nullopt;
}

std::optional<Provenance> parse_provenance(std::string_view s) {
    for (auto p : {Provenance::OriginalLabel, Provenance::RelabeledMiss, Provenance::SuccessfulCall,
                   Provenance::NoneTarget, Provenance::NeedsReview}) {
        if (to_string(p) == s) return p;
    }
    return std::nullopt;
}

CurationTask qa_curation_task(Task task) {
    switch (task) {
        case Task::Task1: return CurationTask::Task1QA;
        case Task::Task2: return CurationTask::Task2QA;
        case Task::Task3: return CurationTask::Task3QA;
    }
    return CurationTask::Task1QA;
}

std::string training_file_name(CurationTask t) {
    switch (t) {
        case CurationTask::ApiCall: return "api_call.jsonl";
        case CurationTask::Task1QA: return "task1_qa.jsonl";
        case CurationTask::Task2QA: return "task2_qa.jsonl";
        case CurationTask::Task3QA: return "task3_qa.jsonl";
    }
    return "api_call.jsonl";
}

json to_json(const TrainingExample& e) {
    json j = {{"sample_id", e.sample_id},
              {"task", to_string(e.task)},
              {"prompt", e.prompt},
              {"target", e.target},
              {"relabeled", e.relabeled},
              {"provenance", to_string(e.provenance)}};
    if (e.task == CurationTask::ApiCall) j["raw_generation"] = e.raw_generation;
    return j;
}

TrainingExample training_example_from_json(const json& j) {
    TrainingExample e;
    try {
        e.sample_id = j.at("sample_id").get<std::string>();
        const auto task = parse_curation_task(j.at("task").get<std::string>());
        const auto prov = parse_provenance(j.at("provenance").get<std::string>());
        if (!task || !prov) throw Error(ErrorKind::MalformedResponse, "unknown task or provenance");
        e.task = *task;
        e.provenance = *prov;
        e.prompt = j.at("prompt").get<std::string>();
        e.target = j.at("target").get<std::string>();
        e.relabeled = j.at("relabeled").get<bool>();
        e.raw_generation = j.value("raw_generation", "");
    } catch (const json::exception& ex) {
        throw Error(ErrorKind::MalformedResponse, std::string("training example: ") + ex.what());
    }
    return e;
}

// ---------------------------------------------------------------------------
// QA relabeling

namespace {

TrainingExample qa_example(const Sample& sample, std::string prompt, bool keep_label) {
    TrainingExample e;
    e.sample_id = sample.id;
    e.task = qa_curation_task(sample.task);
    e.prompt = std::move(prompt);
    if (keep_label) {
        e.target = *sample.answer;
        e.provenance = Provenance::OriginalLabel;
    } else {
        e.target = std::string(prompts::kMissAnswer);
        e.provenance = Provenance::RelabeledMiss;
        e.relabeled = true;
    }
    return e;
}

TrainingExample relabel_one(const Sample& sample, const PipelineContext& ctx) {
    const RunConfig& cfg = ctx.config();
    const Deadline unbounded;
    auto pool = segment_documents(sample, cfg.max_segment_chars, cfg.use_snippets, cfg.doc_parallelism);
    const KgStep kg = knowledge_graph_step(sample, ctx, unbounded);
    if (kg.outcome.executed()) {
        for (auto seg : kg.outcome.segments) {
            seg.doc_index = sample.search_results.size();
            pool.push_back(std::move(seg));
        }
    }

    const PromptOptions standard{cfg.prompt_char_cap, false};
    const PromptOptions always{cfg.prompt_char_cap, true};

    if (sample.false_premise()) {
        const auto selected = rank_and_select(sample, pool, cfg.ranker, ctx, unbounded);
        return qa_example(sample, assemble_prompt(selected, sample, standard).rendered, true);
    }

    std::string stored_prompt;
    bool any_correct = false;
    for (RankerKind kind : kAllRankers) {
        const auto selected = rank_and_select(sample, pool, kind, ctx, unbounded);
        if (kind == cfg.ranker) stored_prompt = assemble_prompt(selected, sample, standard).rendered;
        const PromptBundle bundle = assemble_prompt(selected, sample, always);
        const ChatResponse reply = ctx.llm().chat(answer_request(bundle, AdapterId::base()), unbounded);
        if (judge_correct(ctx.llm(), sample.question, *sample.answer, reply.text, unbounded)) any_correct = true;
    }
    return qa_example(sample, std::move(stored_prompt), any_correct);
}

bool has_truth(const Sample& s) { return s.answer && !s.answer->empty(); }

template <typename T>
void sort_by_id(std::vector<T>& v) {
    std::stable_sort(v.begin(), v.end(), [](const T& a, const T& b) { return a.sample_id < b.sample_id; });
}

}  // namespace

std::vector<TrainingExample> relabel_qa_targets(const std::vector<Sample>& samples, const PipelineContext& ctx,
                                                std::size_t* skipped) {
    std::vector<const Sample*> eligible;
    for (const auto& s : samples) {
        if (has_truth(s)) eligible.push_back(&s);
    }
    if (skipped) *skipped = samples.size() - eligible.size();
    std::vector<TrainingExample> out(eligible.size());
    parallel_for(eligible.size(), ctx.config().parallelism,
                 [&](std::size_t i) { out[i] = relabel_one(*eligible[i], ctx); });
    sort_by_id(out);
    return out;
}

// ---------------------------------------------------------------------------
// API-call targets

namespace {

// Returns the executed call, or nullopt for anything a reviewer must look at.
std::optional<kg::ApiCall> try_call(std::string_view text, const PipelineContext& ctx) {
    std::optional<kg::ApiCall> call;
    try {
        call = kg::parse_call(text, ctx.registry());
    } catch (const Error&) {
        return std::nullopt;
    }
    if (!call) return std::nullopt;
    const kg::CallOutcome outcome = kg::execute_call(*call, ctx.registry(), ctx.kg_endpoint());
    if (outcome.failure == kg::CallFailure::Unreachable) {
        throw Error(ErrorKind::ServiceUnavailable, "knowledge graph unreachable: " + outcome.detail);
    }
    if (!outcome.executed()) return std::nullopt;
    return call;
}

TrainingExample curate_one(const Sample& sample, const PipelineContext& ctx,
                           const std::map<std::string, std::string>& corrections) {
    TrainingExample e;
    e.sample_id = sample.id;
    e.task = CurationTask::ApiCall;
    e.prompt = kg::render_call_prompt(ctx.registry(), sample.question, sample.query_time);
    e.raw_generation = kg::generate_call(ctx.llm(), sample.question, sample.query_time, ctx.registry(), AdapterId::base());

    if (auto call = try_call(e.raw_generation, ctx)) {
        e.target = kg::render_call(*call);
        e.provenance = Provenance::SuccessfulCall;
        return e;
    }
    const auto correction = corrections.find(sample.id);
    if (correction == corrections.end()) {
        e.target = e.raw_generation;
        e.provenance = Provenance::NeedsReview;
        return e;
    }
    if (auto call = try_call(correction->second, ctx)) {
        e.target = kg::render_call(*call);
        e.provenance = Provenance::SuccessfulCall;
    } else {
        e.target = "None";
        e.provenance = Provenance::NoneTarget;
    }
    return e;
}

}  // namespace

std::vector<TrainingExample> curate_api_targets(const std::vector<Sample>& samples, const PipelineContext& ctx,
                                                const std::map<std::string, std::string>& corrections) {
    std::vector<const Sample*> eligible;
    for (const auto& s : samples) {
        if (uses_knowledge_graph(s.task)) eligible.push_back(&s);
    }
    if (!eligible.empty() && ctx.registry().empty()) {
        throw Error(ErrorKind::InvalidConfig, "API target curation needs a function registry");
    }
    std::vector<TrainingExample> out(eligible.size());
    parallel_for(eligible.size(), ctx.config().parallelism,
                 [&](std::size_t i) { out[i] = curate_one(*eligible[i], ctx, corrections); });
    sort_by_id(out);
    return out;
}

std::vector<ReviewEntry> review_entries(const std::vector<TrainingExample>& examples) {
    std::vector<ReviewEntry> out;
    for (const auto& e : examples) {
        if (e.provenance == Provenance::NeedsReview) out.push_back({e.sample_id, e.raw_generation, std::nullopt});
    }
    sort_by_id(out);
    return out;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::UnwritableDirectory, "cannot write " + path.string());
    return out;
}

void make_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw Error(ErrorKind::UnwritableDirectory, "cannot create " + dir.string());
}

}  // namespace

void write_review_file(const std::vector<ReviewEntry>& entries, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    for (const auto& r : entries) {
        out << json{{"sample_id", r.sample_id},
                    {"raw_generation", r.raw_generation},
                    {"corrected_call", r.corrected_call ? json(*r.corrected_call) : json(nullptr)}}
                   .dump()
            << '\n';
    }
}

std::map<std::string, std::string> read_corrections(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::FileUnreadable, "cannot open corrections " + path.string());
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!text::has_non_space(line)) continue;
        try {
            const json j = json::parse(text::sanitize_utf8(line));
            const json& fix = j.at("corrected_call");
            if (fix.is_string()) out[j.at("sample_id").get<std::string>()] = fix.get<std::string>();
        } catch (const json::exception& e) {
            throw Error(ErrorKind::FileUnreadable,
                        path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<std::filesystem::path> emit_training_files(std::vector<TrainingExample> examples,
                                                       const std::filesystem::path& out_dir) {
    make_directory(out_dir);
    sort_by_id(examples);
    std::vector<std::filesystem::path> paths;
    for (CurationTask t : kAllCurationTasks) {
        const auto path = out_dir / training_file_name(t);
        auto out = open_for_write(path);
        for (const auto& e : examples) {
            if (e.task == t) out << to_json(e).dump() << '\n';
        }
        paths.push_back(path);
    }
    std::map<std::string, std::size_t> counts;
    for (CurationTask t : kAllCurationTasks) counts[training_file_name(t)] = 0;
    for (const auto& e : examples) ++counts[training_file_name(e.task)];
    const json meta = {{"lora_rank", kTrainingLoraRank},
                       {"weight_decay", kTrainingWeightDecay},
                       {"baseline_lora_rank", 8},
                       {"baseline_weight_decay", 0.01},
                       {"examples", counts}};
    const auto meta_path = out_dir / "training_meta.json";
    open_for_write(meta_path) << meta.dump(2) << '\n';
    paths.push_back(meta_path);
    return paths;
}

CurationSummary run_curation(const RunConfig& config) {
    RunConfig cfg = config;
    cfg.use_base_adapter = true;
    cfg.validate();
    // An empty dataset still yields the (empty) training files.
    Dataset ds;
    try {
        ds = load_dataset(cfg.input, cfg.task);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::EmptyDataset) throw;
    }
    const PipelineContext ctx(cfg);
    std::map<std::string, std::string> corrections;
    if (!cfg.corrections_path.empty()) corrections = read_corrections(cfg.corrections_path);

    CurationSummary summary;
    summary.samples = ds.samples.size();
    auto examples = relabel_qa_targets(ds.samples, ctx, &summary.skipped_no_truth);
    auto api = curate_api_targets(ds.samples, ctx, corrections);

    const auto review = review_entries(api);
    summary.review_entries = review.size();
    examples.insert(examples.end(), api.begin(), api.end());
    for (const auto& e : examples) ++summary.by_provenance[std::string(to_string(e.provenance))];
    summary.files = emit_training_files(std::move(examples), cfg.output_dir);
    write_review_file(review, cfg.output_dir / "review.jsonl");
    summary.files.push_back(cfg.output_dir / "review.jsonl");
    return summary;
}

}  // namespace marags
