#include "marags/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include "marags/error.hpp"

namespace marags {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

std::int64_t elapsed_ms(Clock::time_point since) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - since).count();
}

}  // namespace

void RunConfig::validate() const {
    if (per_sample_deadline.count() <= 0) throw Error(ErrorKind::InvalidConfig, "per_sample_deadline_ms must be > 0");
    if (parallelism < 1) throw Error(ErrorKind::InvalidConfig, "parallelism must be >= 1");
    if (doc_parallelism < 1) throw Error(ErrorKind::InvalidConfig, "doc_parallelism must be >= 1");
    if (max_segment_chars < 2) throw Error(ErrorKind::InvalidConfig, "max_segment_chars must be >= 2");
}

PipelineContext::PipelineContext(const RunConfig& config)
    : config_(config),
      llm_(LlmConfig{config.endpoints.llm, config.adapter_models, config.llm_timeout, config.max_attempts,
                     std::chrono::milliseconds(50), 2.0, config.max_inflight}),
      embed_(ServiceConfig{config.endpoints.embed, config.service_timeout, config.service_batch_size}),
      cross_(ServiceConfig{config.endpoints.cross, config.service_timeout, config.service_batch_size}) {
    config_.validate();
    if (!config_.registry_path.empty()) registry_ = kg::ApiRegistry::load(config_.registry_path);
}

kg::KgEndpointConfig PipelineContext::kg_endpoint() const {
    return {config_.endpoints.kg, config_.kg_timeout, config_.max_segment_chars};
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            threads.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

std::vector<Segment> segment_documents(const Sample& sample, std::size_t max_segment_chars, bool use_snippets,
                                       std::size_t workers) {
    const std::size_t n = sample.search_results.size();
    std::vector<std::vector<Segment>> per_doc(n);
    parallel_for(n, workers, [&](std::size_t i) {
        const auto& result = sample.search_results[i];
        auto segments = segment_html(result.page_html, i, max_segment_chars);
        if (use_snippets) {
            if (auto snippet = snippet_segment(result, i, max_segment_chars)) segments.insert(segments.begin(), *snippet);
        }
        per_doc[i] = std::move(segments);
    });
    std::vector<Segment> pool;
    for (auto& doc : per_doc) {
        pool.insert(pool.end(), std::make_move_iterator(doc.begin()), std::make_move_iterator(doc.end()));
    }
    return pool;
}

KgStep knowledge_graph_step(const Sample& sample, const PipelineContext& ctx, const Deadline& deadline) {
    KgStep step;
    if (!uses_knowledge_graph(sample.task) || ctx.registry().empty()) return step;
    step.attempted = true;
    const AdapterId adapter = ctx.config().use_base_adapter ? AdapterId::base() : AdapterId::api_call();
    try {
        step.raw_generation = kg::generate_call(ctx.llm(), sample.question, sample.query_time, ctx.registry(), adapter, deadline);
    } catch (const Error& e) {
        step.outcome.status = kg::CallOutcome::Status::Failed;
        step.outcome.failure = kg::CallFailure::GenerationFailed;
        step.outcome.detail = e.what();
        return step;
    }
    std::optional<kg::ApiCall> call;
    try {
        call = kg::parse_call(step.raw_generation, ctx.registry());
    } catch (const Error& e) {
        step.outcome.status = kg::CallOutcome::Status::Failed;
        step.outcome.failure = kg::CallFailure::InvalidCall;
        step.outcome.detail = e.what();
        return step;
    }
    if (!call) return step;  // NoCall
    step.outcome = kg::execute_call(*call, ctx.registry(), ctx.kg_endpoint(), deadline);
    return step;
}

std::vector<ScoredCandidate> rank_and_select(const Sample& sample, const std::vector<Segment>& pool, RankerKind kind,
                                             const PipelineContext& ctx, const Deadline& deadline) {
    const auto ranked = rank_candidates(kind, sample.question, pool, ctx.ranker_clients(), deadline);
    return select_top_k(ranked, ctx.config().top_k, ctx.config().char_budget);
}

Retrieval retrieve(const Sample& sample, RankerKind kind, const PipelineContext& ctx, const Deadline& deadline) {
    const RunConfig& cfg = ctx.config();
    Retrieval r;
    auto t = Clock::now();
    r.pool = segment_documents(sample, cfg.max_segment_chars, cfg.use_snippets, cfg.doc_parallelism);
    r.timings_ms["segment"] = elapsed_ms(t);

    t = Clock::now();
    r.kg = knowledge_graph_step(sample, ctx, deadline);
    if (r.kg.outcome.executed()) {
        for (auto seg : r.kg.outcome.segments) {
            seg.doc_index = sample.search_results.size();
            r.pool.push_back(std::move(seg));
        }
    }
    r.timings_ms["kg"] = elapsed_ms(t);

    t = Clock::now();
    r.selected = rank_and_select(sample, r.pool, kind, ctx, deadline);
    r.timings_ms["rank"] = elapsed_ms(t);
    return r;
}

namespace {

std::string kg_status(const KgStep& step) {
    if (!step.attempted) return "skipped";
    switch (step.outcome.status) {
        case kg::CallOutcome::Status::NoCall: return "NoCall";
        case kg::CallOutcome::Status::Executed: return "Executed";
        case kg::CallOutcome::Status::Failed:
            return "Failed:" + std::string(kg::to_string(step.outcome.failure.value_or(kg::CallFailure::InvalidCall)));
    }
    return "skipped";
}

}  // namespace

SampleOutcome process_sample(const Sample& sample, const PipelineContext& ctx, RankerKind kind, bool use_base_adapter) {
    const RunConfig& cfg = ctx.config();
    const auto started = Clock::now();
    const Deadline deadline(cfg.per_sample_deadline);

    SampleOutcome out;
    out.log = {{"sample_id", sample.id}, {"task", to_string(sample.task)}, {"ranker", to_string(kind)}};
    try {
        Retrieval r = retrieve(sample, kind, ctx, deadline);
        for (const auto& [stage, ms] : r.timings_ms) out.log["timings_ms"][stage] = ms;
        out.log["kg"] = kg_status(r.kg);
        out.log["pool_size"] = r.pool.size();
        out.log["selected"] = r.selected.size();

        const auto t = Clock::now();
        const PromptBundle bundle = assemble_prompt(r.selected, sample, {cfg.prompt_char_cap, false});
        out.answer = generate_answer(ctx.llm(), bundle, select_adapter(sample.task, use_base_adapter), sample.id,
                                     default_miss_phrases(), deadline);
        out.log["timings_ms"]["generate"] = elapsed_ms(t);
    } catch (const Error& e) {
        out.answer = failed_answer(sample.id, to_string(e.kind()));
        out.log["error"] = e.what();
    }

    const auto total = elapsed_ms(started);
    out.log["timings_ms"]["total"] = total;
    if (total > cfg.per_sample_deadline.count() || out.answer.raw_text == "[error] DeadlineExceeded") {
        out.answer = failed_answer(sample.id, to_string(ErrorKind::DeadlineExceeded));
        out.deadline_exceeded = true;
        out.log["note"] = "DeadlineExceeded";
    }

    if (sample.answer && !sample.answer->empty()) {
        const LlmClient* judge = cfg.judge_mode == JudgeMode::LlmJudge ? &ctx.llm() : nullptr;
        if (auto verdict = classify_answer(out.answer, *sample.answer, cfg.judge_mode, judge, sample.question)) {
            out.eval = EvalRecord{sample.id, *verdict, cfg.judge_mode, Facets::of(sample)};
        }
    }
    return out;
}

RunSummary run_samples(const std::vector<Sample>& samples, const PipelineContext& ctx, RankerKind kind,
                       bool use_base_adapter) {
    std::vector<SampleOutcome> outcomes(samples.size());
    parallel_for(samples.size(), ctx.config().parallelism,
                 [&](std::size_t i) { outcomes[i] = process_sample(samples[i], ctx, kind, use_base_adapter); });
    std::stable_sort(outcomes.begin(), outcomes.end(),
                     [](const SampleOutcome& a, const SampleOutcome& b) { return a.answer.sample_id < b.answer.sample_id; });

    RunSummary summary;
    summary.samples = samples.size();
    std::vector<EvalRecord> records;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& o = outcomes[i];
        if (o.deadline_exceeded) ++summary.deadline_exceeded;
        if (o.log.value("kg", "skipped") != "skipped") ++summary.kg_calls;
        if (o.eval) records.push_back(*o.eval);
    }
    for (const auto& s : samples) {
        if (s.answer && !s.answer->empty()) ++summary.evaluated;
    }
    summary.unevaluable = summary.evaluated - records.size();
    summary.evaluated = records.size();
    if (!records.empty()) summary.metrics = crag_score(records);
    summary.outcomes = std::move(outcomes);
    return summary;
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::UnwritableDirectory, "cannot write " + path.string());
    return out;
}

void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw Error(ErrorKind::UnwritableDirectory, "cannot create " + dir.string());
    }
}

json answer_json(const AnswerRecord& a) {
    return {{"sample_id", a.sample_id}, {"raw_text", a.raw_text}, {"normalized", a.normalized}, {"is_miss", a.is_miss}};
}

std::string run_name(const RunConfig& cfg) {
    return std::string(display_name(cfg.ranker)) + (cfg.use_base_adapter ? " / base" : " / adapters");
}

void write_run_outputs(const RunConfig& cfg, const RunSummary& summary) {
    ensure_directory(cfg.output_dir);
    {
        auto out = open_output(cfg.output_dir / "answers.jsonl");
        for (const auto& o : summary.outcomes) out << answer_json(o.answer).dump() << '\n';
    }
    {
        auto out = open_output(cfg.output_dir / "eval.jsonl");
        for (const auto& o : summary.outcomes) {
            if (o.eval) out << to_json(*o.eval).dump() << '\n';
        }
    }
    {
        auto out = open_output(cfg.output_dir / "run_log.jsonl");
        for (const auto& o : summary.outcomes) out << o.log.dump() << '\n';
    }
    json metrics = {{"run", run_name(cfg)},
                    {"judge_mode", to_string(cfg.judge_mode)},
                    {"samples", summary.samples},
                    {"evaluated", summary.evaluated},
                    {"unevaluable", summary.unevaluable},
                    {"deadline_exceeded", summary.deadline_exceeded},
                    {"skipped_lines", summary.skipped_lines},
                    {"rejected_samples", summary.rejected_samples},
                    {"report", summary.metrics ? to_json(*summary.metrics) : json(nullptr)}};
    open_output(cfg.output_dir / "metrics.json") << metrics.dump(2) << '\n';

    auto txt = open_output(cfg.output_dir / "metrics.txt");
    txt << "judge mode: " << to_string(cfg.judge_mode) << "\n\n";
    if (!summary.metrics) {
        txt << "no evaluable records\n";
        return;
    }
    txt << render_metrics_table({{run_name(cfg), *summary.metrics}});
    if (!summary.metrics->by_facet.empty()) {
        std::vector<std::pair<std::string, Metrics>> rows(summary.metrics->by_facet.begin(), summary.metrics->by_facet.end());
        txt << "\n" << render_metrics_table(rows, "Facet");
    }
}

}  // namespace

RunSummary run_pipeline(const RunConfig& config) {
    config.validate();
    const Dataset ds = load_dataset(config.input, config.task);
    const PipelineContext ctx(config);
    RunSummary summary = run_samples(ds.samples, ctx, config.ranker, config.use_base_adapter);
    summary.skipped_lines = ds.skipped_count;
    summary.rejected_samples = ds.rejected.size();
    write_run_outputs(config, summary);
    return summary;
}

std::vector<Sample> select_subset(const std::vector<Sample>& samples, std::size_t budget, std::uint64_t seed) {
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    // std::shuffle's algorithm is unspecified; spell Fisher-Yates out so the
    // subset is identical across standard libraries.
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    order.resize(std::min(budget, order.size()));
    std::vector<Sample> out;
    out.reserve(order.size());
    for (auto i : order) out.push_back(samples[i]);
    return out;
}

std::vector<ComparisonRow> compare_retrievers(const RunConfig& config, std::size_t sample_budget) {
    config.validate();
    const Dataset ds = load_dataset(config.input, config.task);
    const auto subset = select_subset(ds.samples, sample_budget, config.seed);
    const PipelineContext ctx(config);

    std::vector<ComparisonRow> rows;
    json report = json::array();
    for (RankerKind kind : kAllRankers) {
        const RunSummary s = run_samples(subset, ctx, kind, true);
        ComparisonRow row{kind, s.metrics ? static_cast<const Metrics&>(*s.metrics) : Metrics{}};
        report.push_back({{"retrieval_model", display_name(kind)}, {"metrics", to_json(row.metrics)}});
        rows.push_back(row);
    }

    ensure_directory(config.output_dir);
    std::vector<std::pair<std::string, Metrics>> table_rows;
    for (const auto& r : rows) table_rows.emplace_back(std::string(display_name(r.kind)), r.metrics);
    open_output(config.output_dir / "retrieval_comparison.txt") << render_retrieval_table(table_rows);
    open_output(config.output_dir / "retrieval_comparison.json")
        << json{{"samples", subset.size()}, {"seed", config.seed}, {"rows", report}}.dump(2) << '\n';
    return rows;
}

}  // namespace marags
