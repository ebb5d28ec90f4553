#include "marags/llm_client.hpp"

#include <algorithm>
#include <cctype>
#include <thread>

#include <nlohmann/json.hpp>

#include "marags/error.hpp"
#include "marags/prompts.hpp"
#include "marags/text.hpp"

namespace marags {

using json = nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && text::is_space(s[b])) ++b;
    while (e > b && text::is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

bool retryable(const HttpResponse& res) {
    if (res.transport == Transport::ConnectionFailed || res.transport == Transport::OtherFailure) return true;
    return res.transport == Transport::Ok && (res.status >= 500 || res.status == 429);
}

// Releases the in-flight slot on every exit path.
class GateSlot {
public:
    explicit GateSlot(std::counting_semaphore<4096>& gate) : gate_(gate) { gate_.acquire(); }
    ~GateSlot() { gate_.release(); }
    GateSlot(const GateSlot&) = delete;
    GateSlot& operator=(const GateSlot&) = delete;

private:
    std::counting_semaphore<4096>& gate_;
};

}  // namespace

LlmClient::LlmClient(LlmConfig config)
    : config_(std::move(config)),
      endpoint_(config_.base_url),
      gate_(std::make_shared<Gate>(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config_.max_inflight, 1, 4096)))) {
    if (config_.max_attempts < 1) config_.max_attempts = 1;
}

std::string LlmClient::model_for(const AdapterId& adapter) const {
    auto it = config_.adapter_models.find(adapter.name);
    if (it != config_.adapter_models.end() && !it->second.empty()) return it->second;
    return adapter.name;
}

ChatResponse LlmClient::chat(const ChatRequest& request, const Deadline& deadline) const {
    if (request.user.empty()) throw Error(ErrorKind::InvalidConfig, "chat request has an empty user prompt");

    json messages = json::array();
    if (request.system) messages.push_back({{"role", "system"}, {"content", *request.system}});
    messages.push_back({{"role", "user"}, {"content", request.user}});
    json body = {{"model", model_for(request.adapter)},
                 {"messages", std::move(messages)},
                 {"max_tokens", request.max_tokens},
                 {"temperature", request.temperature}};
    if (request.seed) body["seed"] = *request.seed;
    const std::string payload = body.dump();

    GateSlot slot(*gate_);
    const auto started = std::chrono::steady_clock::now();
    auto backoff = config_.initial_backoff;
    HttpResponse res;
    int attempt = 0;
    while (true) {
        if (deadline.expired()) {
            throw Error(ErrorKind::DeadlineExceeded, "sample budget exhausted before chat completion", attempt);
        }
        ++attempt;
        res = endpoint_.post_json("/v1/chat/completions", payload, deadline.clamp(config_.timeout));
        if (res.transport == Transport::Timeout) {
            throw Error(ErrorKind::DeadlineExceeded, "chat completion timed out", attempt);
        }
        if (!retryable(res) || attempt >= config_.max_attempts) break;
        std::this_thread::sleep_for(deadline.clamp(backoff));
        backoff = std::chrono::milliseconds(static_cast<std::int64_t>(static_cast<double>(backoff.count()) * config_.backoff_multiplier));
    }
    if (!res.ok()) {
        const std::string why = res.transport == Transport::Ok ? "status " + std::to_string(res.status) : "connection failed";
        throw Error(ErrorKind::ServiceUnavailable,
                    endpoint_.base_url() + " unavailable after " + std::to_string(attempt) + " attempt(s): " + why,
                    attempt);
    }

    ChatResponse out;
    try {
        const json reply = json::parse(res.body);
        out.text = trim(reply.at("choices").at(0).at("message").at("content").get<std::string>());
    } catch (const json::exception& e) {
        throw Error(ErrorKind::MalformedResponse, std::string("chat completion body: ") + e.what(), attempt);
    }
    out.attempt_count = attempt;
    out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
    return out;
}

std::string render_judge_prompt(std::string_view question, std::string_view ground_truth, std::string_view candidate) {
    std::string out(prompts::kJudgeTemplate);
    std::size_t cursor = 0;
    auto substitute = [&](std::string_view key, const std::string& value) {
        const auto pos = out.find(key, cursor);
        if (pos == std::string::npos) return;
        out.replace(pos, key.size(), value);
        cursor = pos + value.size();
    };
    // Single-line fields keep the template's line structure intact.
    substitute("{question}", text::collapse_whitespace(question));
    substitute("{ground_truth}", text::collapse_whitespace(ground_truth));
    substitute("{candidate}", text::collapse_whitespace(candidate));
    return out;
}

bool parse_judge_reply(std::string_view reply) {
    const std::string lower = text::to_lower_ascii(trim(reply));
    if (lower.rfind("yes", 0) != 0) return false;
    return lower.size() == 3 || !std::isalnum(static_cast<unsigned char>(lower[3]));
}

bool judge_correct(const LlmClient& llm, std::string_view question, std::string_view ground_truth,
                   std::string_view candidate, const Deadline& deadline) {
    if (!text::has_non_space(ground_truth)) throw Error(ErrorKind::InvalidConfig, "judge needs a non-empty ground truth");
    ChatRequest req;
    req.adapter = AdapterId::judge();
    req.system = std::string(prompts::kJudgeSystem);
    req.user = render_judge_prompt(question, ground_truth, candidate);
    req.max_tokens = 4;
    return parse_judge_reply(llm.chat(req, deadline).text);
}

}  // namespace marags
