#include "marags/testkit.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <regex>
#include <set>

#include <httplib.h>

#include "marags/error.hpp"
#include "marags/kg.hpp"
#include "marags/prompts.hpp"
#include "marags/rankers.hpp"
#include "marags/segmenter.hpp"
#include "marags/text.hpp"

namespace marags::testkit {

using json = nlohmann::json;

namespace {

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::FileUnreadable, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::InvalidConfig, path.string() + ": " + e.what());
    }
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct CompiledRule {
    const StubRule* rule;
    std::optional<std::regex> pattern;
};

std::vector<CompiledRule> compile(const std::vector<StubRule>& rules) {
    std::vector<CompiledRule> out;
    out.reserve(rules.size());
    for (const auto& r : rules) {
        CompiledRule c{&r, std::nullopt};
        if (r.pattern) {
            try {
                c.pattern.emplace(*r.pattern, std::regex::ECMAScript);
            } catch (const std::regex_error& e) {
                throw Error(ErrorKind::InvalidConfig, "bad rule pattern " + *r.pattern + ": " + e.what());
            }
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::optional<std::string> first_match(const std::vector<CompiledRule>& rules, const std::string& model,
                                       const std::string& content, std::chrono::milliseconds* delay) {
    for (const auto& c : rules) {
        const StubRule& r = *c.rule;
        if (r.model && *r.model != model) continue;
        bool all = true;
        for (const auto& needle : r.contains) {
            if (content.find(needle) == std::string::npos) {
                all = false;
                break;
            }
        }
        if (!all) continue;
        std::string response = r.response;
        if (c.pattern) {
            std::smatch m;
            if (!std::regex_search(content, m, *c.pattern)) continue;
            response = m.format(r.response, std::regex_constants::format_default);
        }
        if (delay) *delay = r.delay;
        return response;
    }
    return std::nullopt;
}

}  // namespace

struct CompiledRules {
    std::vector<CompiledRule> rules;
};

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

}  // namespace

// ---------------------------------------------------------------------------
// Rules

std::vector<StubRule> rules_from_json(const json& j) {
    const json& list = j.is_object() ? j.at("rules") : j;
    std::vector<StubRule> out;
    try {
        for (const auto& r : list) {
            StubRule rule;
            if (r.contains("model") && !r.at("model").is_null()) rule.model = r.at("model").get<std::string>();
            if (r.contains("contains")) {
                const json& c = r.at("contains");
                if (c.is_string()) {
                    rule.contains.push_back(c.get<std::string>());
                } else {
                    rule.contains = c.get<std::vector<std::string>>();
                }
            }
            if (r.contains("pattern") && !r.at("pattern").is_null()) rule.pattern = r.at("pattern").get<std::string>();
            rule.response = r.at("response").get<std::string>();
            const auto delay = r.value("delay_ms", 0);
            if (delay < 0) throw Error(ErrorKind::InvalidConfig, "delay_ms must be >= 0");
            rule.delay = std::chrono::milliseconds(delay);
            out.push_back(std::move(rule));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("stub rules: ") + e.what());
    }
    compile(out);  // validates patterns
    return out;
}

std::vector<StubRule> load_rules(const std::filesystem::path& path) { return rules_from_json(read_json_file(path)); }

json to_json(const StubRule& rule) {
    json j = {{"response", rule.response}};
    if (rule.model) j["model"] = *rule.model;
    if (!rule.contains.empty()) j["contains"] = rule.contains;
    if (rule.pattern) j["pattern"] = *rule.pattern;
    if (rule.delay.count()) j["delay_ms"] = rule.delay.count();
    return j;
}

std::optional<std::string> apply_rules(const std::vector<StubRule>& rules, const std::string& model,
                                       const std::string& content, std::chrono::milliseconds* delay) {
    return first_match(compile(rules), model, content, delay);
}

// ---------------------------------------------------------------------------
// Server plumbing

StubServer::StubServer() : server_(std::make_unique<httplib::Server>()) {}

StubServer::~StubServer() { stop(); }

void StubServer::start(int port) {
    if (port == 0) {
        port_ = server_->bind_to_any_port("127.0.0.1");
        if (port_ < 0) throw Error(ErrorKind::ServiceUnavailable, "stub server could not bind");
    } else {
        if (!server_->bind_to_port("127.0.0.1", port)) {
            throw Error(ErrorKind::ServiceUnavailable, "port " + std::to_string(port) + " is in use");
        }
        port_ = port;
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void StubServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string StubServer::url() const { return "http://127.0.0.1:" + std::to_string(port_); }

// ---------------------------------------------------------------------------
// LLM

namespace {

std::string echo_reply(const json& messages) {
    std::string last_user;
    for (const auto& m : messages) {
        if (m.value("role", "") == "user") last_user = m.value("content", "");
    }
    std::string last_line;
    std::size_t start = 0;
    while (start <= last_user.size()) {
        std::size_t end = last_user.find('\n', start);
        if (end == std::string::npos) end = last_user.size();
        const auto line = std::string_view(last_user).substr(start, end - start);
        if (text::has_non_space(line)) last_line = text::collapse_whitespace(line);
        start = end + 1;
    }
    return last_line;
}

}  // namespace

StubLlm::StubLlm(std::vector<StubRule> rules, std::uint64_t seed, int port)
    : rules_(std::move(rules)), compiled_(std::make_shared<CompiledRules>(CompiledRules{compile(rules_)})), seed_(seed) {
    server().Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
        count_request();
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception&) {
            send_json(res, 400, {{"error", "invalid JSON"}});
            return;
        }
        {
            std::lock_guard lock(mutex_);
            captured_.push_back(body);
        }
        if (!body.is_object() || !body.contains("messages") || !body["messages"].is_array()) {
            send_json(res, 400, {{"error", "messages required"}});
            return;
        }
        const std::string model = body.value("model", "");
        std::chrono::milliseconds delay{0};
        const std::string text = respond(model, body["messages"], &delay);
        if (delay.count()) std::this_thread::sleep_for(delay);
        char id[32];
        std::snprintf(id, sizeof id, "stub-%016llx",
                      static_cast<unsigned long long>(splitmix64(fnv1a(req.body) ^ seed_)));
        send_json(res, 200,
                  {{"id", id},
                   {"object", "chat.completion"},
                   {"model", model},
                   {"choices", json::array({{{"index", 0},
                                             {"message", {{"role", "assistant"}, {"content", text}}},
                                             {"finish_reason", "stop"}}})}});
    });
    start(port);
}

StubLlm::~StubLlm() { stop(); }

std::vector<json> StubLlm::captured() const {
    std::lock_guard lock(mutex_);
    return captured_;
}

std::string StubLlm::respond(const std::string& model, const json& messages, std::chrono::milliseconds* delay) const {
    std::string content;
    for (const auto& m : messages) {
        if (!content.empty()) content += "\n";
        content += m.value("content", "");
    }
    if (auto r = first_match(compiled_->rules, model, content, delay)) return *r;
    return echo_reply(messages);
}

// ---------------------------------------------------------------------------
// Embedding

std::vector<double> stub_embedding(const std::string& text, std::size_t dim, std::uint64_t seed) {
    std::vector<double> v(dim);
    const std::uint64_t h = fnv1a(text) ^ splitmix64(seed);
    double norm = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const std::uint64_t x = splitmix64(h + 0x9e3779b97f4a7c15ULL * (i + 1));
        v[i] = static_cast<double>(x >> 11) * 0x1.0p-53 * 2.0 - 1.0;
        norm += v[i] * v[i];
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        if (dim) v[0] = 1.0;
        return v;
    }
    for (auto& x : v) x /= norm;
    return v;
}

StubEmbed::StubEmbed(std::size_t dim, std::uint64_t seed, int port) : dim_(dim), seed_(seed) {
    if (dim == 0) throw Error(ErrorKind::InvalidConfig, "embedding dimension must be > 0");
    server().Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
        count_request();
        try {
            const json body = json::parse(req.body);
            json vectors = json::array();
            for (const auto& t : body.at("texts")) vectors.push_back(stub_embedding(t.get<std::string>(), dim_, seed_));
            send_json(res, 200, {{"vectors", std::move(vectors)}});
        } catch (const json::exception& e) {
            send_json(res, 400, {{"error", e.what()}});
        }
    });
    start(port);
}

StubEmbed::~StubEmbed() { stop(); }

// ---------------------------------------------------------------------------
// Cross-encoder

double token_overlap(const std::string& query, const std::string& passage) {
    const auto q = tokenize(query);
    const auto p = tokenize(passage);
    const std::set<std::string> qs(q.begin(), q.end());
    const std::set<std::string> ps(p.begin(), p.end());
    if (qs.empty()) return 0.0;
    std::size_t shared = 0;
    for (const auto& t : qs) shared += ps.count(t);
    return static_cast<double>(shared) / static_cast<double>(qs.size());
}

StubCross::StubCross(CrossMode mode, std::vector<StubRule> rules, int port)
    : mode_(mode), rules_(std::move(rules)), compiled_(std::make_shared<CompiledRules>(CompiledRules{compile(rules_)})) {
    server().Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
        count_request();
        try {
            const json body = json::parse(req.body);
            const std::string query = body.at("query").get<std::string>();
            json scores = json::array();
            for (const auto& p : body.at("passages")) {
                const std::string passage = p.get<std::string>();
                if (mode_ == CrossMode::TokenOverlap) {
                    scores.push_back(token_overlap(query, passage));
                    continue;
                }
                double score = 0.0;
                if (auto r = first_match(compiled_->rules, "cross", query + "\n" + passage, nullptr)) {
                    try {
                        score = std::stod(*r);
                    } catch (const std::exception&) {
                        score = 0.0;
                    }
                }
                scores.push_back(score);
            }
            send_json(res, 200, {{"scores", std::move(scores)}});
        } catch (const json::exception& e) {
            send_json(res, 400, {{"error", e.what()}});
        }
    });
    start(port);
}

StubCross::~StubCross() { stop(); }

// ---------------------------------------------------------------------------
// Knowledge graph

std::map<std::string, std::string> canonical_args(const json& args) {
    std::map<std::string, std::string> out;
    if (!args.is_object()) return out;
    for (const auto& [key, value] : args.items()) {
        if (value.is_string()) {
            out[key] = value.get<std::string>();
        } else if (value.is_number()) {
            out[key] = kg::render_literal(value.get<double>());
        } else {
            out[key] = value.dump();
        }
    }
    return out;
}

std::vector<KgFixture> fixtures_from_json(const json& j) {
    const json& list = j.is_object() ? j.at("fixtures") : j;
    std::vector<KgFixture> out;
    try {
        for (const auto& f : list) {
            KgFixture fx;
            fx.method = text::to_lower_ascii(f.value("method", "POST")) == "get" ? "GET" : "POST";
            fx.path = f.at("path").get<std::string>();
            fx.args = f.value("args", json::object());
            fx.body = f.value("body", json(nullptr));
            fx.status = f.value("status", 200);
            const auto delay = f.value("delay_ms", 0);
            if (delay < 0) throw Error(ErrorKind::InvalidConfig, "delay_ms must be >= 0");
            fx.delay = std::chrono::milliseconds(delay);
            out.push_back(std::move(fx));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("kg fixtures: ") + e.what());
    }
    return out;
}

std::vector<KgFixture> load_fixtures(const std::filesystem::path& path) {
    return fixtures_from_json(read_json_file(path));
}

json to_json(const KgFixture& f) {
    json j = {{"method", f.method}, {"path", f.path}, {"args", f.args}, {"body", f.body}, {"status", f.status}};
    if (f.delay.count()) j["delay_ms"] = f.delay.count();
    return j;
}

StubKg::StubKg(std::vector<KgFixture> fixtures, int port) : fixtures_(std::move(fixtures)) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        count_request();
        json args = json::object();
        if (req.method == "POST") {
            try {
                if (text::has_non_space(req.body)) args = json::parse(req.body);
            } catch (const json::exception&) {
                send_json(res, 400, {{"error", "invalid JSON"}});
                return;
            }
            if (!args.is_object()) {
                send_json(res, 400, {{"error", "arguments must be an object"}});
                return;
            }
        } else {
            for (const auto& [key, value] : req.params) args[key] = value;
        }
        const auto wanted = canonical_args(args);
        for (const auto& fx : fixtures_) {
            if (fx.method != req.method || fx.path != req.path || canonical_args(fx.args) != wanted) continue;
            if (fx.delay.count()) std::this_thread::sleep_for(fx.delay);
            res.status = fx.status;
            res.set_content(fx.body.is_string() && fx.status != 200 ? fx.body.get<std::string>() : fx.body.dump(),
                            "application/json");
            return;
        }
        send_json(res, 404, {{"error", "no fixture"}, {"path", req.path}});
    };
    server().Post(R"(/.*)", handler);
    server().Get(R"(/.*)", handler);
    start(port);
}

StubKg::~StubKg() { stop(); }

// ---------------------------------------------------------------------------
// Synthetic fixtures

namespace {

const char* const kDomains[] = {"finance", "music", "movie", "sports", "open"};
const char* const kPopularity[] = {"head", "torso", "tail"};

const char* const kFillerWords[] = {
    "amber",  "basalt", "cobalt", "delta",  "ember",  "fjord",  "garnet", "harbor", "indigo", "juniper",
    "kelp",   "lagoon", "meadow", "nectar", "onyx",   "pebble", "quartz", "reed",   "saffron", "tundra",
    "umber",  "vellum", "willow", "xenon",  "yarrow", "zephyr", "acorn",  "bramble", "cinder", "dune",
};

std::string filler_sentence(std::mt19937_64& rng, std::size_t words) {
    std::uniform_int_distribution<std::size_t> pick(0, std::size(kFillerWords) - 1);
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) out += ' ';
        out += kFillerWords[pick(rng)];
    }
    return out + ".";
}

std::string filler_page(std::mt19937_64& rng, const std::string& title, std::size_t paragraphs) {
    std::string html = "<html><head><title>" + title + "</title></head><body><h1>" + title + "</h1>";
    for (std::size_t p = 0; p < paragraphs; ++p) html += "<p>" + filler_sentence(rng, 12) + "</p>";
    return html + "</body></html>";
}

std::string padded(std::size_t i) {
    std::string s = std::to_string(i);
    return s.size() < 3 ? std::string(3 - s.size(), '0') + s : s;
}

Sample base_sample(Task task, const std::string& id, std::size_t i) {
    Sample s;
    s.id = id;
    s.task = task;
    s.query_time = "03/14/2024, 09:00:00 PT";
    s.domain_tag = kDomains[i % std::size(kDomains)];
    s.question_type_tag = "simple";
    s.dynamism_tag = "static";
    s.popularity_tag = kPopularity[i % std::size(kPopularity)];
    return s;
}

// Judge rules: "yes" exactly when the candidate equals the ground truth.
std::vector<StubRule> equality_judge_rules() {
    StubRule yes;
    yes.contains = {"Candidate answer:"};
    yes.pattern = "Ground truth: ([^\\n]*)\\nCandidate answer: \\1\\n";
    yes.response = "yes";
    StubRule no;
    no.contains = {"Candidate answer:"};
    no.response = "no";
    return {yes, no};
}

StubRule unknown_answer_rule() {
    StubRule r;
    r.contains = {std::string(prompts::kQuestionHeader)};
    r.response = std::string(prompts::kMissAnswer);
    return r;
}

}  // namespace

std::string zorblat_value(std::size_t i) { return "zv" + std::to_string(1000 + 37 * i); }

SyntheticBundle make_zorblat_bundle(Task task, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    SyntheticBundle b;
    const std::size_t docs = task == Task::Task3 ? 8 : max_documents(task);
    const std::string prefix = std::string(to_string(task)) + "-";
    for (std::size_t i = 0; i < n; ++i) {
        const std::string entity = "E" + std::to_string(i);
        Sample s = base_sample(task, prefix + padded(i), i);
        s.question = "What is the zorblat index of entity " + entity + "?";
        s.answer = zorblat_value(i);
        const std::size_t gold_doc = i % docs;
        for (std::size_t d = 0; d < docs; ++d) {
            SearchResult r;
            r.page_name = "Page " + std::to_string(d) + " about " + entity;
            r.page_url = "https://example.test/" + s.id + "/" + std::to_string(d);
            r.page_snippet = filler_sentence(rng, 8);
            r.page_html = filler_page(rng, r.page_name, 3);
            if (d == gold_doc) {
                const std::string fact = "<p>The zorblat index of " + entity + " is " + zorblat_value(i) + ".</p>";
                r.page_html.insert(r.page_html.find("</body>"), fact);
            }
            s.search_results.push_back(std::move(r));
        }
        if (uses_knowledge_graph(task)) {
            KgFixture fx;
            fx.path = "/zorblat";
            fx.args = {{"entity", entity}};
            fx.body = {{"entity", entity}, {"zorblat_index", zorblat_value(i)}};
            b.kg_fixtures.push_back(std::move(fx));
        }
        b.samples.push_back(std::move(s));
    }

    b.registry = {{"functions",
                   json::array({{{"name", "get_zorblat"},
                                 {"doc", "Returns the zorblat index recorded for an entity."},
                                 {"params", json::array({{{"name", "entity"}, {"kind", "string"}, {"required", true}}})},
                                 {"method", "POST"},
                                 {"endpoint_path", "/zorblat"},
                                 {"formatter", "generic"}}})}};

    StubRule call;
    call.contains = {std::string(prompts::kApiCatalogHeader)};
    call.pattern = "zorblat index of entity (E\\d+)";
    call.response = "get_zorblat(\"$1\")";
    StubRule no_call;
    no_call.contains = {std::string(prompts::kApiCatalogHeader)};
    no_call.response = "None";
    b.llm_rules = {call, no_call};
    for (auto& r : equality_judge_rules()) b.llm_rules.push_back(r);
    StubRule from_web;
    from_web.pattern = "zorblat index of E\\d+ is (\\w+)";
    from_web.response = "$1";
    StubRule from_kg;
    from_kg.pattern = "zorblat_index: (\\w+)";
    from_kg.response = "$1";
    b.llm_rules.push_back(from_web);
    b.llm_rules.push_back(from_kg);
    b.llm_rules.push_back(unknown_answer_rule());
    return b;
}

SyntheticBundle make_retrieval_gold_bundle(std::size_t n, std::uint64_t seed, std::size_t embed_dim,
                                           std::uint64_t embed_seed) {
    static const char* const kKeyWords[] = {"violet", "falcon", "granite", "lantern", "marble", "orchid",
                                            "pepper", "raven",  "silver",  "thistle", "velvet", "walnut"};
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, std::size(kKeyWords) - 1);
    SyntheticBundle b;
    constexpr std::size_t kDocs = 5;
    for (std::size_t i = 0; i < n; ++i) {
        Sample s = base_sample(Task::Task1, "gold-" + padded(i), i);
        const std::string subject =
            std::string(kKeyWords[pick(rng)]) + " " + kKeyWords[pick(rng)] + " " + kKeyWords[pick(rng)];
        const std::string code = "SC" + std::to_string(500 + 11 * i);
        s.question = "What is the secret code of the " + subject + "?";
        s.answer = code;
        const std::string gold_html =
            "<html><body><p>The secret code of the " + subject + " is " + code + ".</p></body></html>";
        const auto gold_text = segment_html(gold_html, 0).at(0).text;
        const auto q = stub_embedding(s.question, embed_dim, embed_seed);
        auto cosine = [&](const std::string& t) {
            const auto v = stub_embedding(t, embed_dim, embed_seed);
            double dot = 0.0;
            for (std::size_t k = 0; k < embed_dim; ++k) dot += q[k] * v[k];
            return dot;
        };
        const double gold_cos = cosine(gold_text);
        // Redraw distractors until one of them outscores the gold page under
        // the hashed embedding.
        std::vector<std::string> distractors;
        for (int attempt = 0;; ++attempt) {
            if (attempt > 10000) throw Error(ErrorKind::InvalidConfig, "could not build a biencoder distractor");
            distractors.clear();
            bool beaten = false;
            for (std::size_t d = 1; d < kDocs; ++d) {
                const std::string html = "<html><body><p>" + filler_sentence(rng, 10) + "</p></body></html>";
                if (cosine(segment_html(html, d).at(0).text) > gold_cos) beaten = true;
                distractors.push_back(html);
            }
            if (beaten) break;
        }
        SearchResult gold;
        gold.page_name = "Gold page";
        gold.page_url = "https://example.test/" + s.id + "/gold";
        gold.page_html = gold_html;
        s.search_results.push_back(std::move(gold));
        for (std::size_t d = 0; d < distractors.size(); ++d) {
            SearchResult r;
            r.page_name = "Distractor " + std::to_string(d);
            r.page_url = "https://example.test/" + s.id + "/" + std::to_string(d);
            r.page_html = distractors[d];
            s.search_results.push_back(std::move(r));
        }
        b.samples.push_back(std::move(s));
    }
    b.llm_rules = equality_judge_rules();
    StubRule answer;
    answer.pattern = "secret code of the \\w+ \\w+ \\w+ is (SC\\d+)";
    answer.response = "$1";
    b.llm_rules.push_back(answer);
    b.llm_rules.push_back(unknown_answer_rule());
    b.registry = {{"functions", json::array()}};
    return b;
}

void write_bundle(const SyntheticBundle& bundle, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::UnwritableDirectory, "cannot create " + dir.string());
    write_dataset(dir / "dataset.jsonl", bundle.samples);
    auto write = [&](const std::string& name, const json& j) {
        std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::UnwritableDirectory, "cannot write " + (dir / name).string());
        out << j.dump(2) << '\n';
    };
    write("registry.json", bundle.registry);
    json rules = json::array();
    for (const auto& r : bundle.llm_rules) rules.push_back(to_json(r));
    write("llm_rules.json", rules);
    json fixtures = json::array();
    for (const auto& f : bundle.kg_fixtures) fixtures.push_back(to_json(f));
    write("kg_fixtures.json", fixtures);
}

StubStack::StubStack(const SyntheticBundle& bundle, CrossMode cross_mode, std::size_t embed_dim, std::uint64_t seed)
    : llm(bundle.llm_rules, seed), embed(embed_dim, seed), cross(cross_mode), kg(bundle.kg_fixtures) {}

Endpoints StubStack::endpoints() const { return {llm.url(), embed.url(), cross.url(), kg.url()}; }

RunConfig hermetic_config(const SyntheticBundle& bundle, const StubStack& stack, const std::filesystem::path& dir) {
    write_bundle(bundle, dir);
    RunConfig c;
    c.input = dir / "dataset.jsonl";
    c.output_dir = dir / "out";
    c.registry_path = dir / "registry.json";
    c.endpoints = stack.endpoints();
    return c;
}

}  // namespace marags::testkit
