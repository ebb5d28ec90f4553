// marags command-line entry point.
//
// Options may also come from a key = value config file (--config); flags
// given on the command line win, then environment variables, then the file.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "marags/curation.hpp"
#include "marags/error.hpp"
#include "marags/pipeline.hpp"
#include "marags/segmenter.hpp"
#include "marags/testkit.hpp"

namespace {

using json = nlohmann::json;
using namespace marags;

struct CliOptions {
    std::string task;
    std::string input;
    std::string output_dir = "out";
    std::string ranker = std::string(to_string(kDefaultRanker));
    std::size_t top_k = kDefaultTopK;
    std::size_t char_budget = kDefaultCharBudget;
    std::size_t max_segment_chars = kDefaultMaxSegmentChars;
    std::size_t prompt_char_cap = kDefaultPromptCharCap;
    std::size_t parallelism = 1;
    std::size_t doc_parallelism = 8;
    long deadline_ms = kDefaultSampleDeadline.count();
    std::string llm_url, embed_url, cross_url, kg_url;
    std::string judge = "exact";
    bool base_adapter = false;
    bool snippets = false;
    std::string registry;
    std::vector<std::string> adapter_models;
    long llm_timeout_ms = 30000;
    long service_timeout_ms = 10000;
    long kg_timeout_ms = 5000;
    int max_attempts = 3;
    std::size_t max_inflight = 8;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
};

RunConfig to_run_config(const CliOptions& o) {
    RunConfig c;
    if (!o.task.empty()) {
        c.task = parse_task(o.task);
        if (!c.task) throw Error(ErrorKind::InvalidConfig, "unknown task " + o.task);
    }
    if (o.input.empty()) throw Error(ErrorKind::InvalidConfig, "--input is required");
    c.input = o.input;
    c.output_dir = o.output_dir;
    const auto ranker = parse_ranker(o.ranker);
    if (!ranker) throw Error(ErrorKind::InvalidConfig, "unknown ranker " + o.ranker);
    c.ranker = *ranker;
    c.top_k = o.top_k;
    c.char_budget = o.char_budget;
    c.max_segment_chars = o.max_segment_chars;
    c.prompt_char_cap = o.prompt_char_cap;
    c.parallelism = o.parallelism;
    c.doc_parallelism = o.doc_parallelism;
    c.per_sample_deadline = std::chrono::milliseconds(o.deadline_ms);
    c.endpoints = {o.llm_url, o.embed_url, o.cross_url, o.kg_url};
    const auto judge = parse_judge_mode(o.judge);
    if (!judge) throw Error(ErrorKind::InvalidConfig, "unknown judge mode " + o.judge);
    c.judge_mode = *judge;
    c.use_base_adapter = o.base_adapter;
    c.use_snippets = o.snippets;
    c.registry_path = o.registry;
    for (const auto& m : o.adapter_models) {
        const auto eq = m.find('=');
        if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::InvalidConfig, "expected adapter=model, got " + m);
        c.adapter_models[m.substr(0, eq)] = m.substr(eq + 1);
    }
    c.llm_timeout = std::chrono::milliseconds(o.llm_timeout_ms);
    c.service_timeout = std::chrono::milliseconds(o.service_timeout_ms);
    c.kg_timeout = std::chrono::milliseconds(o.kg_timeout_ms);
    c.max_attempts = o.max_attempts;
    c.max_inflight = o.max_inflight;
    c.service_batch_size = o.batch_size;
    c.seed = o.seed;
    c.validate();
    return c;
}

void add_pipeline_options(CLI::App& app, CliOptions& o) {
    app.add_option("--task", o.task, "Restrict the dataset to one task (task1, task2, task3)");
    app.add_option("--input", o.input, "Line-delimited dataset file");
    app.add_option("--output-dir", o.output_dir, "Directory for output files")->capture_default_str();
    app.add_option("--ranker", o.ranker, "tfidf, biencoder, cross-encoder or ensemble")->capture_default_str();
    app.add_option("--top-k", o.top_k)->capture_default_str();
    app.add_option("--char-budget", o.char_budget, "Character budget of the selected references")->capture_default_str();
    app.add_option("--max-segment-chars", o.max_segment_chars)->capture_default_str();
    app.add_option("--prompt-char-cap", o.prompt_char_cap)->capture_default_str();
    app.add_option("--parallelism", o.parallelism, "Samples processed concurrently")->capture_default_str();
    app.add_option("--doc-parallelism", o.doc_parallelism, "Documents segmented concurrently per sample")
        ->capture_default_str();
    app.add_option("--deadline-ms", o.deadline_ms, "Per-sample wall-clock budget")->capture_default_str();
    app.add_option("--llm-url", o.llm_url)->envname("MARAGS_LLM_URL");
    app.add_option("--embed-url", o.embed_url)->envname("MARAGS_EMBED_URL");
    app.add_option("--cross-url", o.cross_url)->envname("MARAGS_CROSS_URL");
    app.add_option("--kg-url", o.kg_url)->envname("MARAGS_KG_URL");
    app.add_option("--judge", o.judge, "exact or llm")->capture_default_str();
    app.add_flag("--base-adapter", o.base_adapter, "Use the base model for every call");
    app.add_flag("--snippets", o.snippets, "Add page snippets to the candidate pool");
    app.add_option("--registry", o.registry, "Knowledge-graph function registry (JSON)");
    app.add_option("--adapter-model", o.adapter_models, "adapter=model mapping, repeatable");
    app.add_option("--llm-timeout-ms", o.llm_timeout_ms)->capture_default_str();
    app.add_option("--service-timeout-ms", o.service_timeout_ms)->capture_default_str();
    app.add_option("--kg-timeout-ms", o.kg_timeout_ms)->capture_default_str();
    app.add_option("--max-attempts", o.max_attempts)->capture_default_str();
    app.add_option("--max-inflight", o.max_inflight)->capture_default_str();
    app.add_option("--batch-size", o.batch_size, "Texts per embedding or scoring request")->capture_default_str();
    app.add_option("--seed", o.seed)->capture_default_str();
}

void print_summary(const RunSummary& s, const RunConfig& c) {
    std::cout << "samples: " << s.samples << "\n"
              << "evaluated: " << s.evaluated << "\n"
              << "unevaluable: " << s.unevaluable << "\n"
              << "deadline exceeded: " << s.deadline_exceeded << "\n"
              << "kg calls: " << s.kg_calls << "\n"
              << "skipped lines: " << s.skipped_lines << "\n"
              << "rejected samples: " << s.rejected_samples << "\n";
    if (s.metrics) {
        std::cout << "\n" << render_metrics_table({{std::string(display_name(c.ranker)), *s.metrics}});
    }
    std::cout << "\noutputs written to " << c.output_dir.string() << "\n";
}

struct StubOptions {
    std::string llm_rules;
    std::string kg_fixtures;
    std::string cross_rules;
    std::string cross_mode = "overlap";
    std::size_t embed_dim = 64;
    std::uint64_t stub_seed = 0;
    int llm_port = 0, embed_port = 0, cross_port = 0, kg_port = 0;
    long duration_s = 0;
};

int serve_stubs(const StubOptions& o) {
    // Block termination signals before any server thread starts so that
    // only this thread receives them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    std::vector<testkit::StubRule> llm_rules;
    if (!o.llm_rules.empty()) llm_rules = testkit::load_rules(o.llm_rules);
    std::vector<testkit::KgFixture> fixtures;
    if (!o.kg_fixtures.empty()) fixtures = testkit::load_fixtures(o.kg_fixtures);
    std::vector<testkit::StubRule> cross_rules;
    if (!o.cross_rules.empty()) cross_rules = testkit::load_rules(o.cross_rules);
    testkit::CrossMode mode = testkit::CrossMode::TokenOverlap;
    if (o.cross_mode == "canned") {
        mode = testkit::CrossMode::Canned;
    } else if (o.cross_mode != "overlap") {
        throw Error(ErrorKind::InvalidConfig, "cross mode must be overlap or canned");
    }

    testkit::StubLlm llm(llm_rules, o.stub_seed, o.llm_port);
    testkit::StubEmbed embed(o.embed_dim, o.stub_seed, o.embed_port);
    testkit::StubCross cross(mode, cross_rules, o.cross_port);
    testkit::StubKg kg(fixtures, o.kg_port);
    std::cout << "MARAGS_LLM_URL=" << llm.url() << "\n"
              << "MARAGS_EMBED_URL=" << embed.url() << "\n"
              << "MARAGS_CROSS_URL=" << cross.url() << "\n"
              << "MARAGS_KG_URL=" << kg.url() << std::endl;

    if (o.duration_s > 0) {
        timespec timeout{o.duration_s, 0};
        sigtimedwait(&signals, nullptr, &timeout);
    } else {
        int sig = 0;
        sigwait(&signals, &sig);
    }
    return 0;
}

int segment_dump(const std::string& html_path, std::size_t max_chars, std::size_t doc_index) {
    std::ifstream in(html_path, std::ios::binary);
    if (!in) throw Error(ErrorKind::FileUnreadable, "cannot open " + html_path);
    std::stringstream buf;
    buf << in.rdbuf();
    for (const auto& s : segment_html(buf.str(), doc_index, max_chars)) {
        std::cout << json{{"doc_index", s.doc_index}, {"node_path", s.node_path}, {"char_len", s.char_len}, {"text", s.text}}
                         .dump()
                  << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Retrieval-augmented question answering pipeline"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key = value config file; command-line flags override it");

    CliOptions opts;
    auto* run = app.add_subcommand("run", "Answer and score every sample of a dataset");
    auto* compare = app.add_subcommand("compare-retrievers", "Score each ranker on one seeded sample subset");
    auto* curate = app.add_subcommand("curate", "Build training files for the adapters");
    for (auto* sub : {run, compare, curate}) add_pipeline_options(*sub, opts);

    std::size_t budget = kDefaultCompareBudget;
    compare->add_option("--budget", budget, "Number of samples to compare on")->capture_default_str();
    std::string corrections;
    curate->add_option("--corrections", corrections, "Reviewed call corrections (review.jsonl format)");

    StubOptions stub;
    auto* serve = app.add_subcommand("serve-stubs", "Run deterministic stub model and KG servers");
    serve->add_option("--llm-rules", stub.llm_rules, "JSON list of LLM stub rules");
    serve->add_option("--kg-fixtures", stub.kg_fixtures, "JSON list of KG fixtures");
    serve->add_option("--cross-rules", stub.cross_rules, "Rules for the canned cross-encoder");
    serve->add_option("--cross-mode", stub.cross_mode, "overlap or canned")->capture_default_str();
    serve->add_option("--embed-dim", stub.embed_dim)->capture_default_str();
    serve->add_option("--stub-seed", stub.stub_seed)->capture_default_str();
    serve->add_option("--llm-port", stub.llm_port, "0 picks a free port");
    serve->add_option("--embed-port", stub.embed_port);
    serve->add_option("--cross-port", stub.cross_port);
    serve->add_option("--kg-port", stub.kg_port);
    serve->add_option("--duration-s", stub.duration_s, "Exit after this many seconds (0 waits for a signal)");

    std::string fixture_task = "task1";
    std::size_t fixture_n = 10;
    std::string fixture_dir;
    bool gold = false;
    auto* fixtures = app.add_subcommand("make-fixtures", "Write a synthetic dataset with matching stub files");
    fixtures->add_option("--task", fixture_task)->capture_default_str();
    fixtures->add_option("--n", fixture_n)->capture_default_str();
    fixtures->add_option("--seed", opts.seed)->capture_default_str();
    fixtures->add_flag("--retrieval-gold", gold, "Build the retrieval comparison fixture instead");
    fixtures->add_option("--out", fixture_dir)->required();

    std::string html_path;
    std::size_t seg_chars = kDefaultMaxSegmentChars;
    std::size_t doc_index = 0;
    auto* segment = app.add_subcommand("segment", "Debug: print the segments of one HTML file as JSON lines");
    segment->add_option("html", html_path)->required();
    segment->add_option("--max-chars", seg_chars)->capture_default_str();
    segment->add_option("--doc-index", doc_index)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const RunConfig c = to_run_config(opts);
            print_summary(run_pipeline(c), c);
        } else if (*compare) {
            const RunConfig c = to_run_config(opts);
            std::vector<std::pair<std::string, Metrics>> rows;
            for (const auto& r : compare_retrievers(c, budget)) rows.emplace_back(std::string(display_name(r.kind)), r.metrics);
            std::cout << render_retrieval_table(rows);
        } else if (*curate) {
            RunConfig c = to_run_config(opts);
            c.corrections_path = corrections;
            const CurationSummary s = run_curation(c);
            std::cout << "samples: " << s.samples << "\n"
                      << "skipped (no ground truth): " << s.skipped_no_truth << "\n";
            for (const auto& [prov, n] : s.by_provenance) std::cout << prov << ": " << n << "\n";
            std::cout << "review entries: " << s.review_entries << "\n";
            for (const auto& f : s.files) std::cout << "wrote " << f.string() << "\n";
        } else if (*serve) {
            return serve_stubs(stub);
        } else if (*fixtures) {
            const auto task = parse_task(fixture_task);
            if (!task) throw Error(ErrorKind::InvalidConfig, "unknown task " + fixture_task);
            const auto bundle = gold ? testkit::make_retrieval_gold_bundle(fixture_n, opts.seed)
                                     : testkit::make_zorblat_bundle(*task, fixture_n, opts.seed);
            testkit::write_bundle(bundle, fixture_dir);
            std::cout << "wrote " << bundle.samples.size() << " samples to " << fixture_dir << "\n";
        } else if (*segment) {
            return segment_dump(html_path, seg_chars, doc_index);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";  // what() starts with the kind
        return e.kind() == ErrorKind::InvalidConfig ? 2 : 1;
    }
    return 0;
}
