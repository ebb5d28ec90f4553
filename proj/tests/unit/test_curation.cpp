#include <doctest.h>

#include <fstream>

#include "marags/curation.hpp"
#include "marags/prompts.hpp"
#include "marags/testkit.hpp"
#include "test_util.hpp"

using namespace marags;

namespace {

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<nlohmann::json> out;
    for (std::string line; std::getline(in, line);) out.push_back(nlohmann::json::parse(line));
    return out;
}

testkit::StubRule judge_says_no() {
    testkit::StubRule r;
    r.contains = {"Candidate answer: "};
    r.response = "no";
    return r;
}

}  // namespace

TEST_CASE("names round-trip") {
    for (auto t : kAllCurationTasks) CHECK(parse_curation_task(to_string(t)) == t);
    CHECK(training_file_name(CurationTask::Task2QA) == "task2_qa.jsonl");
    CHECK(training_file_name(CurationTask::ApiCall) == "api_call.jsonl");
    CHECK(qa_curation_task(Task::Task3) == CurationTask::Task3QA);
    TrainingExample e{"id", CurationTask::ApiCall, "p", "t", false, Provenance::NeedsReview, "raw"};
    CHECK(training_example_from_json(to_json(e)) == e);
}

TEST_CASE("answerable samples keep their labels") {
    const auto bundle = testkit::make_zorblat_bundle(Task::Task1, 4, 2);
    testkit::StubStack stack(bundle);
    testutil::TempDir dir;
    auto cfg = testkit::hermetic_config(bundle, stack, dir.path());
    cfg.use_base_adapter = true;
    const PipelineContext ctx(cfg);
    const auto out = relabel_qa_targets(bundle.samples, ctx);
    REQUIRE(out.size() == 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i].target == testkit::zorblat_value(i));
        CHECK(out[i].provenance == Provenance::OriginalLabel);
        CHECK_FALSE(out[i].relabeled);
        CHECK(out[i].prompt.find(prompts::kAlwaysAnswerInstruction) == std::string::npos);
    }
    for (const auto& body : stack.llm.captured()) {
        const std::string model = body["model"];
        CHECK((model == "base" || model == "judge"));
    }
}

TEST_CASE("an always-false judge relabels everything except false premises") {
    auto bundle = testkit::make_zorblat_bundle(Task::Task2, 10, 4);
    bundle.llm_rules.insert(bundle.llm_rules.begin(), judge_says_no());
    for (std::size_t i = 0; i < bundle.samples.size(); i += 3) {
        bundle.samples[i].question_type_tag = std::string(kFalsePremiseLabel);
        bundle.samples[i].answer = "invalid question";
    }
    bundle.samples[1].answer.reset();
    testkit::StubStack stack(bundle);
    testutil::TempDir dir;
    const PipelineContext ctx(testkit::hermetic_config(bundle, stack, dir.path()));
    std::size_t skipped = 0;
    const auto out = relabel_qa_targets(bundle.samples, ctx, &skipped);
    CHECK(skipped == 1);
    REQUIRE(out.size() == 9);
    for (const auto& e : out) {
        CAPTURE(e.sample_id);
        const bool fp = e.sample_id == "Task2-000" || e.sample_id == "Task2-003" || e.sample_id == "Task2-006" ||
                        e.sample_id == "Task2-009";
        if (fp) {
            CHECK(e.target == "invalid question");
            CHECK(e.provenance == Provenance::OriginalLabel);
        } else {
            CHECK(e.target == "i don't know");
            CHECK(e.provenance == Provenance::RelabeledMiss);
            CHECK(e.relabeled);
        }
        CHECK(e.task == CurationTask::Task2QA);
    }
}

TEST_CASE("relabeling aborts when the model is unreachable") {
    const auto bundle = testkit::make_zorblat_bundle(Task::Task1, 2, 2);
    testkit::StubStack stack(bundle);
    testutil::TempDir dir;
    auto cfg = testkit::hermetic_config(bundle, stack, dir.path());
    cfg.endpoints.llm = "http://127.0.0.1:1";
    const PipelineContext ctx(cfg);
    CHECK(testutil::error_kind([&] { relabel_qa_targets(bundle.samples, ctx); }) == ErrorKind::ServiceUnavailable);
}

TEST_CASE("API targets keep only calls that execute") {
    auto bundle = testkit::make_zorblat_bundle(Task::Task3, 6, 8);
    // E1 has no fixture (404); E4 makes the model answer None.
    bundle.kg_fixtures.erase(bundle.kg_fixtures.begin() + 1);
    testkit::StubRule none;
    none.contains = {std::string(prompts::kApiCatalogHeader), "entity E4?"};
    none.response = "None";
    bundle.llm_rules.insert(bundle.llm_rules.begin(), none);
    testkit::StubStack stack(bundle);
    testutil::TempDir dir;
    const PipelineContext ctx(testkit::hermetic_config(bundle, stack, dir.path()));

    const auto out = curate_api_targets(bundle.samples, ctx);
    REQUIRE(out.size() == 6);
    for (const auto& e : out) {
        CAPTURE(e.sample_id);
        if (e.sample_id == "Task3-001" || e.sample_id == "Task3-004") {
            CHECK(e.provenance == Provenance::NeedsReview);
            CHECK(e.target == e.raw_generation);
        } else {
            CHECK(e.provenance == Provenance::SuccessfulCall);
            CHECK(e.target.starts_with("get_zorblat(\"E"));
        }
    }
    const auto review = review_entries(out);
    REQUIRE(review.size() == 2);
    CHECK(review[0].raw_generation == "get_zorblat(\"E1\")");

    const std::map<std::string, std::string> fixes = {{"Task3-001", "None"}, {"Task3-004", "get_zorblat(\"E4\")"}};
    const auto fixed = curate_api_targets(bundle.samples, ctx, fixes);
    CHECK(fixed[1].provenance == Provenance::NoneTarget);
    CHECK(fixed[1].target == "None");
    CHECK(fixed[4].provenance == Provenance::SuccessfulCall);
    CHECK(fixed[4].target == "get_zorblat(\"E4\")");

    const auto t1 = testkit::make_zorblat_bundle(Task::Task1, 3, 8);
    CHECK(curate_api_targets(t1.samples, ctx).empty());
}

TEST_CASE("review files round-trip into corrections") {
    testutil::TempDir dir;
    const auto path = dir.path() / "review.jsonl";
    write_review_file({{"a", "raw", std::nullopt}, {"b", "raw", "get_x(\"1\")"}}, path);
    const auto fixes = read_corrections(path);
    CHECK(fixes == std::map<std::string, std::string>{{"b", "get_x(\"1\")"}});
    CHECK(testutil::error_kind([&] { read_corrections(dir.path() / "missing"); }) == ErrorKind::FileUnreadable);
}

TEST_CASE("run_curation writes four training files and the sidecar") {
    auto bundle = testkit::make_zorblat_bundle(Task::Task2, 4, 6);
    auto t3 = testkit::make_zorblat_bundle(Task::Task3, 2, 6);
    bundle.samples.insert(bundle.samples.end(), t3.samples.begin(), t3.samples.end());
    testkit::StubStack stack(bundle);
    testutil::TempDir dir;
    const auto summary = run_curation(testkit::hermetic_config(bundle, stack, dir.path()));
    CHECK(summary.samples == 6);
    const auto out = dir.path() / "out";
    CHECK(read_jsonl(out / "task1_qa.jsonl").empty());
    CHECK(read_jsonl(out / "task2_qa.jsonl").size() == 4);
    CHECK(read_jsonl(out / "task3_qa.jsonl").size() == 2);
    CHECK(read_jsonl(out / "api_call.jsonl").size() == 6);
    CHECK(read_jsonl(out / "review.jsonl").empty());
    std::ifstream meta_in(out / "training_meta.json");
    const auto meta = nlohmann::json::parse(meta_in);
    CHECK(meta["lora_rank"] == 256);
    CHECK(meta["weight_decay"] == 1.0);

    testutil::TempDir empty;
    std::ofstream(empty.path() / "dataset.jsonl").close();
    RunConfig cfg;
    cfg.input = empty.path() / "dataset.jsonl";
    cfg.output_dir = empty.path() / "out";
    cfg.endpoints = stack.endpoints();
    const auto none = run_curation(cfg);
    CHECK(none.samples == 0);
    for (auto t : kAllCurationTasks) CHECK(read_jsonl(cfg.output_dir / training_file_name(t)).empty());
}
