#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "marags/error.hpp"
#include "marags/llm_client.hpp"
#include "marags/prompts.hpp"
#include "marags/testkit.hpp"
#include "test_util.hpp"

using namespace marags;

namespace {

// Minimal chat server whose behaviour is scripted per test.
class ScriptedServer {
public:
    explicit ScriptedServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
        server_.Post("/v1/chat/completions", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~ScriptedServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

std::string completion(const std::string& text) {
    return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}}.dump();
}

LlmConfig fast_config(const std::string& url) {
    LlmConfig c;
    c.base_url = url;
    c.timeout = std::chrono::milliseconds(2000);
    c.initial_backoff = std::chrono::milliseconds(1);
    return c;
}

ChatRequest user(const std::string& text, AdapterId adapter = AdapterId::base()) {
    ChatRequest r;
    r.adapter = std::move(adapter);
    r.user = text;
    return r;
}

}  // namespace

TEST_CASE("adapters map to model ids") {
    LlmConfig c;
    c.base_url = "http://127.0.0.1:1";
    c.adapter_models = {{"task1-qa", "llama-3-8b-task1"}};
    const LlmClient llm(c);
    CHECK(llm.model_for(AdapterId::task1_qa()) == "llama-3-8b-task1");
    CHECK(llm.model_for(AdapterId::api_call()) == "api-call");
}

TEST_CASE("chat sends an OpenAI-style body and returns the trimmed reply") {
    testkit::StubRule rule;
    rule.model = "task2-qa";
    rule.response = "  forty two \n";
    testkit::StubLlm stub({rule});
    const LlmClient llm(fast_config(stub.url()));
    ChatRequest req = user("question", AdapterId::task2_qa());
    req.system = "sys";
    const auto reply = llm.chat(req);
    CHECK(reply.text == "forty two");
    CHECK(reply.attempt_count == 1);
    const auto body = stub.captured().at(0);
    CHECK(body["model"] == "task2-qa");
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][1]["content"] == "question");
    CHECK(body["temperature"] == 0.0);
}

TEST_CASE("5xx and 429 are retried with backoff") {
    std::atomic<int> calls{0};
    ScriptedServer server([&](const httplib::Request&, httplib::Response& res) {
        const int n = ++calls;
        if (n == 1) {
            res.status = 503;
        } else if (n == 2) {
            res.status = 429;
        } else {
            res.set_content(completion("ok"), "application/json");
        }
    });
    const LlmClient llm(fast_config(server.url()));
    const auto reply = llm.chat(user("x"));
    CHECK(reply.text == "ok");
    CHECK(reply.attempt_count == 3);
}

TEST_CASE("exhausted retries raise ServiceUnavailable with the attempt count") {
    std::atomic<int> calls{0};
    ScriptedServer server([&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 500;
    });
    const LlmClient llm(fast_config(server.url()));
    try {
        llm.chat(user("x"));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ServiceUnavailable);
        CHECK(e.attempts() == 3);
    }
    CHECK(calls == 3);
}

TEST_CASE("4xx is not retried") {
    std::atomic<int> calls{0};
    ScriptedServer server([&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 400;
    });
    const LlmClient llm(fast_config(server.url()));
    CHECK(testutil::error_kind([&] { llm.chat(user("x")); }) == ErrorKind::ServiceUnavailable);
    CHECK(calls == 1);
}

TEST_CASE("unreachable server, malformed body and timeouts") {
    const LlmClient down(fast_config("http://127.0.0.1:1"));
    CHECK(testutil::error_kind([&] { down.chat(user("x")); }) == ErrorKind::ServiceUnavailable);

    ScriptedServer garbage([](const httplib::Request&, httplib::Response& res) { res.set_content("{}", "application/json"); });
    const LlmClient g(fast_config(garbage.url()));
    CHECK(testutil::error_kind([&] { g.chat(user("x")); }) == ErrorKind::MalformedResponse);

    testkit::StubRule slow;
    slow.response = "late";
    slow.delay = std::chrono::milliseconds(600);
    testkit::StubLlm stub({slow});
    const LlmClient llm(fast_config(stub.url()));
    const auto started = std::chrono::steady_clock::now();
    CHECK(testutil::error_kind([&] { llm.chat(user("x"), Deadline(std::chrono::milliseconds(150))); }) ==
          ErrorKind::DeadlineExceeded);
    CHECK(std::chrono::steady_clock::now() - started < std::chrono::milliseconds(550));
    CHECK(testutil::error_kind([&] { llm.chat(user("x"), Deadline(std::chrono::milliseconds(0))); }) ==
          ErrorKind::DeadlineExceeded);
}

TEST_CASE("max_inflight bounds concurrent requests") {
    std::atomic<int> active{0}, peak{0};
    ScriptedServer server([&](const httplib::Request&, httplib::Response& res) {
        const int now = ++active;
        int seen = peak.load();
        while (now > seen && !peak.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(30));
        --active;
        res.set_content(completion("ok"), "application/json");
    });
    LlmConfig c = fast_config(server.url());
    c.max_inflight = 2;
    const LlmClient llm(c);
    std::vector<std::thread> threads;
    for (int i = 0; i < 6; ++i) threads.emplace_back([&] { llm.chat(user("x")); });
    for (auto& t : threads) t.join();
    CHECK(peak.load() <= 2);
    CHECK(peak.load() >= 1);
}

TEST_CASE("judge prompt and reply parsing") {
    const auto prompt = render_judge_prompt("Who {candidate}?", "Paris", "paris\nfrance");
    CHECK(prompt.find("Question: Who {candidate}?") != std::string::npos);
    CHECK(prompt.find("Ground truth: Paris\n") != std::string::npos);
    CHECK(prompt.find("Candidate answer: paris france\n") != std::string::npos);
    CHECK(parse_judge_reply("Yes"));
    CHECK(parse_judge_reply(" yes, it is"));
    CHECK_FALSE(parse_judge_reply("no"));
    CHECK_FALSE(parse_judge_reply("yesterday"));
    CHECK_FALSE(parse_judge_reply("I think yes"));
    CHECK_FALSE(parse_judge_reply(""));
}

TEST_CASE("judge_correct uses the judge adapter") {
    testkit::StubRule yes;
    yes.model = "judge";
    yes.contains = {"Candidate answer: 42"};
    yes.response = "yes";
    testkit::StubRule no;
    no.response = "no";
    testkit::StubLlm stub({yes, no});
    const LlmClient llm(fast_config(stub.url()));
    CHECK(judge_correct(llm, "q", "42", "42"));
    CHECK_FALSE(judge_correct(llm, "q", "42", "41"));
}
