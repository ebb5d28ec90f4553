#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>

#include "marags/error.hpp"
#include "marags/evaluation.hpp"
#include "marags/generation.hpp"
#include "marags/kg.hpp"
#include "marags/pipeline.hpp"
#include "marags/rankers.hpp"
#include "marags/segmenter.hpp"
#include "marags/testkit.hpp"

namespace py = pybind11;
using namespace marags;

namespace {

template <typename T, typename Parse>
T parse_or_throw(const std::string& s, Parse parse, const char* what) {
    auto v = parse(s);
    if (!v) throw Error(ErrorKind::InvalidConfig, std::string("unknown ") + what + ": " + s);
    return *v;
}

py::dict segment_dict(const Segment& s) {
    py::dict d;
    d["doc_index"] = s.doc_index;
    d["text"] = s.text;
    d["char_len"] = s.char_len;
    d["origin"] = std::string(to_string(s.origin));
    d["node_path"] = s.node_path;
    return d;
}

py::object literal_object(const kg::Literal& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return py::str(*s);
    return py::float_(std::get<double>(v));
}

kg::ApiRegistry registry_from(const std::string& json_text) {
    return kg::ApiRegistry::from_json(nlohmann::json::parse(json_text));
}

RunConfig config_from(const py::dict& kw) {
    RunConfig c;
    for (auto [key, value] : kw) {
        const auto k = key.cast<std::string>();
        if (k == "input") c.input = value.cast<std::string>();
        else if (k == "output_dir") c.output_dir = value.cast<std::string>();
        else if (k == "task") c.task = parse_or_throw<Task>(value.cast<std::string>(), parse_task, "task");
        else if (k == "ranker") c.ranker = parse_or_throw<RankerKind>(value.cast<std::string>(), parse_ranker, "ranker");
        else if (k == "judge")
            c.judge_mode = parse_or_throw<JudgeMode>(value.cast<std::string>(), parse_judge_mode, "judge mode");
        else if (k == "top_k") c.top_k = value.cast<std::size_t>();
        else if (k == "char_budget") c.char_budget = value.cast<std::size_t>();
        else if (k == "parallelism") c.parallelism = value.cast<std::size_t>();
        else if (k == "deadline_ms") c.per_sample_deadline = std::chrono::milliseconds(value.cast<long long>());
        else if (k == "llm_url") c.endpoints.llm = value.cast<std::string>();
        else if (k == "embed_url") c.endpoints.embed = value.cast<std::string>();
        else if (k == "cross_url") c.endpoints.cross = value.cast<std::string>();
        else if (k == "kg_url") c.endpoints.kg = value.cast<std::string>();
        else if (k == "registry") c.registry_path = value.cast<std::string>();
        else if (k == "base_adapter") c.use_base_adapter = value.cast<bool>();
        else if (k == "snippets") c.use_snippets = value.cast<bool>();
        else if (k == "seed") c.seed = value.cast<std::uint64_t>();
        else throw Error(ErrorKind::InvalidConfig, "unknown option: " + k);
    }
    return c;
}

py::dict metrics_dict(const Metrics& m) {
    py::dict d;
    d["n"] = m.n;
    d["correct"] = m.correct;
    d["missing"] = m.missing;
    d["hallucinated"] = m.hallucinated;
    d["accuracy"] = m.accuracy;
    d["missing_rate"] = m.missing_rate;
    d["hallucination_rate"] = m.hallucination_rate;
    d["crag"] = m.crag;
    return d;
}

// A zorblat bundle written to disk with all four stubs serving it.
class Hermetic {
public:
    Hermetic(const std::string& task, std::size_t n, std::uint64_t seed, const std::string& dir)
        : bundle_(testkit::make_zorblat_bundle(parse_or_throw<Task>(task, parse_task, "task"), n, seed)),
          stack_(std::make_unique<testkit::StubStack>(bundle_)),
          config_(testkit::hermetic_config(bundle_, *stack_, dir)) {}

    py::dict config() const {
        py::dict d;
        d["input"] = config_.input.string();
        d["output_dir"] = config_.output_dir.string();
        d["registry"] = config_.registry_path.string();
        d["llm_url"] = config_.endpoints.llm;
        d["embed_url"] = config_.endpoints.embed;
        d["cross_url"] = config_.endpoints.cross;
        d["kg_url"] = config_.endpoints.kg;
        return d;
    }
    std::size_t kg_requests() const { return stack_->kg.request_count(); }
    std::size_t llm_requests() const { return stack_->llm.request_count(); }
    void close() { stack_.reset(); }

private:
    testkit::SyntheticBundle bundle_;
    std::unique_ptr<testkit::StubStack> stack_;
    RunConfig config_;
};

}  // namespace

PYBIND11_MODULE(_marags, m) {
    m.doc() = "Native core of the marags retrieval-augmented QA pipeline.";

    static py::handle error_type = py::exception<Error>(m, "MaragsError", PyExc_RuntimeError).release();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            // args = (kind, message)
            py::tuple args = py::make_tuple(std::string(to_string(e.kind())), std::string(e.what()));
            PyErr_SetObject(error_type.ptr(), args.ptr());
        }
    });

    m.def("split_oversize_text", &split_oversize_text, py::arg("text"), py::arg("max_chars") = kDefaultMaxSegmentChars);
    m.def(
        "segment_html",
        [](const std::string& html, std::size_t doc_index, std::size_t max_chars) {
            py::list out;
            for (const auto& s : segment_html(html, doc_index, max_chars)) out.append(segment_dict(s));
            return out;
        },
        py::arg("html"), py::arg("doc_index") = 0, py::arg("max_chars") = kDefaultMaxSegmentChars);

    m.def("tokenize", &tokenize);
    m.def(
        "tfidf_scores",
        [](const std::vector<std::string>& documents, const std::string& question) {
            return TfidfIndex::build(documents).score(question);
        },
        py::arg("documents"), py::arg("question"));
    m.def("ranks_from_scores", &ranks_from_scores);
    m.def("fuse_mean_rank", &fuse_mean_rank);
    m.def("mean_rank_order", &mean_rank_order);

    m.def(
        "parse_call",
        [](const std::string& raw, const std::string& registry_json) -> py::object {
            const auto call = kg::parse_call(raw, registry_from(registry_json));
            if (!call) return py::none();
            py::list args;
            for (const auto& a : call->args) args.append(literal_object(a));
            return py::make_tuple(call->function, args);
        },
        py::arg("raw"), py::arg("registry_json"),
        "Returns (function, args), or None when the text declines to call.");
    m.def(
        "render_call",
        [](const std::string& function, const std::vector<std::variant<double, std::string>>& args) {
            kg::ApiCall call{function, {}, ""};
            for (const auto& a : args) {
                if (const auto* s = std::get_if<std::string>(&a)) call.args.emplace_back(*s);
                else call.args.emplace_back(std::get<double>(a));
            }
            return kg::render_call(call);
        },
        py::arg("function"), py::arg("args"));
    m.def(
        "render_catalog", [](const std::string& registry_json) { return kg::render_catalog(registry_from(registry_json)); },
        py::arg("registry_json"));

    m.def("normalize_answer", &normalize_answer);
    m.def(
        "is_miss_answer",
        [](const std::string& answer) { return is_miss_answer(normalize_answer(answer), default_miss_phrases()); },
        py::arg("answer"));
    m.def(
        "metrics_from_counts",
        [](std::size_t correct, std::size_t missing, std::size_t hallucinated) {
            return metrics_dict(Metrics::from_counts(correct, missing, hallucinated));
        },
        py::arg("correct"), py::arg("missing"), py::arg("hallucinated"));
    m.def(
        "crag_score",
        [](const std::vector<std::string>& verdicts) {
            std::vector<EvalRecord> records;
            for (const auto& v : verdicts) {
                EvalRecord r;
                r.verdict = parse_or_throw<Verdict>(v, parse_verdict, "verdict");
                records.push_back(r);
            }
            return metrics_dict(crag_score(records));
        },
        py::arg("verdicts"));

    m.def(
        "run_pipeline",
        [](const py::dict& options) {
            const RunConfig cfg = config_from(options);
            RunSummary s;
            {
                py::gil_scoped_release release;
                s = run_pipeline(cfg);
            }
            py::dict d;
            d["samples"] = s.samples;
            d["evaluated"] = s.evaluated;
            d["unevaluable"] = s.unevaluable;
            d["deadline_exceeded"] = s.deadline_exceeded;
            d["kg_calls"] = s.kg_calls;
            d["metrics"] = s.metrics ? py::object(metrics_dict(*s.metrics)) : py::none();
            return d;
        },
        py::arg("options"));

    py::class_<Hermetic>(m, "Hermetic", "Synthetic dataset plus local stub services, for tests.")
        .def(py::init<const std::string&, std::size_t, std::uint64_t, const std::string&>(), py::arg("task"),
             py::arg("n"), py::arg("seed"), py::arg("directory"))
        .def("config", &Hermetic::config)
        .def_property_readonly("kg_requests", &Hermetic::kg_requests)
        .def_property_readonly("llm_requests", &Hermetic::llm_requests)
        .def("close", &Hermetic::close);
}
