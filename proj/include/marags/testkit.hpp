#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "marags/corpus.hpp"
#include "marags/pipeline.hpp"

namespace httplib {
class Server;
}

namespace marags::testkit {

struct CompiledRules;

/// First matching rule wins. A rule matches when every condition it sets
/// holds: `model` equals the request model, every `contains` string occurs
/// in the request content, and `pattern` (ECMAScript regex) is found in it.
/// `response` may reference capture groups as $1, $2, ...
struct StubRule {
    std::optional<std::string> model;
    std::vector<std::string> contains;
    std::optional<std::string> pattern;
    std::string response;
    std::chrono::milliseconds delay{0};
};

std::vector<StubRule> rules_from_json(const nlohmann::json& j);
std::vector<StubRule> load_rules(const std::filesystem::path& path);

// Rule evaluation without a server; nullopt when no rule matches.
std::optional<std::string> apply_rules(const std::vector<StubRule>& rules, const std::string& model,
                                       const std::string& content, std::chrono::milliseconds* delay = nullptr);

/// Base for the HTTP stubs: binds 127.0.0.1 (port 0 picks a free port) and
/// serves on a background thread until destroyed.
class StubServer {
public:
    StubServer(const StubServer&) = delete;
    StubServer& operator=(const StubServer&) = delete;
    virtual ~StubServer();

    int port() const noexcept { return port_; }
    std::string url() const;
    std::size_t request_count() const noexcept { return requests_.load(); }
    void reset_count() noexcept { requests_ = 0; }
    void stop();

protected:
    StubServer();
    void start(int port);

    httplib::Server& server() { return *server_; }
    void count_request() noexcept { ++requests_; }

private:
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<std::size_t> requests_{0};
};

/// OpenAI-compatible chat completions. Unmatched requests echo the last
/// non-blank line of the last user message.
class StubLlm : public StubServer {
public:
    explicit StubLlm(std::vector<StubRule> rules, std::uint64_t seed = 0, int port = 0);
    ~StubLlm() override;

    // Request bodies received so far, in arrival order.
    std::vector<nlohmann::json> captured() const;

    std::string respond(const std::string& model, const nlohmann::json& messages,
                        std::chrono::milliseconds* delay = nullptr) const;

private:
    std::vector<StubRule> rules_;
    std::shared_ptr<const CompiledRules> compiled_;
    std::uint64_t seed_;
    mutable std::mutex mutex_;
    std::vector<nlohmann::json> captured_;
};

// Unit vector derived from a seeded hash of the text.
std::vector<double> stub_embedding(const std::string& text, std::size_t dim, std::uint64_t seed);

class StubEmbed : public StubServer {
public:
    explicit StubEmbed(std::size_t dim = 64, std::uint64_t seed = 0, int port = 0);
    ~StubEmbed() override;

    std::size_t dim() const noexcept { return dim_; }

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

enum class CrossMode { TokenOverlap, Canned };

// |shared query tokens| / |query tokens|, 0 for a token-less query.
double token_overlap(const std::string& query, const std::string& passage);

/// Canned mode matches rules against "query\npassage" with model "cross";
/// the response is parsed as the score (0 when nothing matches).
class StubCross : public StubServer {
public:
    explicit StubCross(CrossMode mode = CrossMode::TokenOverlap, std::vector<StubRule> rules = {}, int port = 0);
    ~StubCross() override;

private:
    CrossMode mode_;
    std::vector<StubRule> rules_;
    std::shared_ptr<const CompiledRules> compiled_;
};

/// Fixture for one KG request. `args` holds the call's named arguments,
/// whether they arrive in a JSON body or a query string; those bound into
/// the path are part of `path` instead.
struct KgFixture {
    std::string method = "POST";
    std::string path;
    nlohmann::json args = nlohmann::json::object();
    nlohmann::json body;
    int status = 200;
    std::chrono::milliseconds delay{0};
};

std::vector<KgFixture> fixtures_from_json(const nlohmann::json& j);
std::vector<KgFixture> load_fixtures(const std::filesystem::path& path);

// Argument object in comparable form: every value rendered as text.
std::map<std::string, std::string> canonical_args(const nlohmann::json& args);

class StubKg : public StubServer {
public:
    explicit StubKg(std::vector<KgFixture> fixtures, int port = 0);
    ~StubKg() override;

private:
    std::vector<KgFixture> fixtures_;
};

// ---------------------------------------------------------------------------
// Synthetic fixtures

/// Samples ask for an entity's "zorblat index". The value appears in one
/// web page and, for Tasks 2 and 3, in the knowledge graph. The rules make
/// the stub LLM emit calls, answer from whichever reference carries the
/// value, judge by string equality, and otherwise say "i don't know".
struct SyntheticBundle {
    std::vector<Sample> samples;
    nlohmann::json registry;
    std::vector<StubRule> llm_rules;
    std::vector<KgFixture> kg_fixtures;
};

SyntheticBundle make_zorblat_bundle(Task task, std::size_t n, std::uint64_t seed);

/// Value the KG reports for sample `i` of a zorblat bundle; web pages carry
/// the same value.
std::string zorblat_value(std::size_t i);

/// Retrieval fixture for top_k = 1: each sample's gold page shares the
/// question's terms, so TF-IDF and the token-overlap cross stub rank it
/// first, while distractors are chosen so that the hashed embedding stub
/// ranks some distractor above it. The LLM rules answer correctly only when
/// the gold segment reaches the prompt.
SyntheticBundle make_retrieval_gold_bundle(std::size_t n, std::uint64_t seed, std::size_t embed_dim = 64,
                                           std::uint64_t embed_seed = 0);

// Writes dataset.jsonl, registry.json, llm_rules.json, kg_fixtures.json.
void write_bundle(const SyntheticBundle& bundle, const std::filesystem::path& dir);

/// All four stubs serving one bundle on free ports.
struct StubStack {
    explicit StubStack(const SyntheticBundle& bundle, CrossMode cross_mode = CrossMode::TokenOverlap,
                       std::size_t embed_dim = 64, std::uint64_t seed = 0);

    StubLlm llm;
    StubEmbed embed;
    StubCross cross;
    StubKg kg;

    Endpoints endpoints() const;
};

/// Writes the bundle under `dir` and returns a run configuration pointing at
/// it and at the stack. Outputs go to dir/out.
RunConfig hermetic_config(const SyntheticBundle& bundle, const StubStack& stack, const std::filesystem::path& dir);

nlohmann::json to_json(const StubRule& rule);
nlohmann::json to_json(const KgFixture& fixture);

}  // namespace marags::testkit
