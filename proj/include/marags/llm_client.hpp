#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>

#include "marags/http.hpp"

namespace marags {

/// Names one fine-tuned adapter (or the bare base model). Switching adapters
/// is a per-request model id, resolved through LlmConfig::adapter_models.
struct AdapterId {
    std::string name;

    static AdapterId api_call() { return {"api-call"}; }
    static AdapterId task1_qa() { return {"task1-qa"}; }
    static AdapterId task2_qa() { return {"task2-qa"}; }
    static AdapterId task3_qa() { return {"task3-qa"}; }
    static AdapterId base() { return {"base"}; }
    static AdapterId judge() { return {"judge"}; }

    bool operator==(const AdapterId&) const = default;
};

struct ChatRequest {
    AdapterId adapter = AdapterId::base();
    std::optional<std::string> system;
    std::string user;
    int max_tokens = 256;
    double temperature = 0.0;
    std::optional<std::int64_t> seed = 0;
};

struct ChatResponse {
    std::string text;
    std::int64_t latency_ms = 0;
    int attempt_count = 1;
};

struct LlmConfig {
    std::string base_url;
    std::map<std::string, std::string> adapter_models;  // unmapped adapters use their own name
    std::chrono::milliseconds timeout{30000};
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{50};
    double backoff_multiplier = 2.0;
    std::size_t max_inflight = 8;
};

/// OpenAI-compatible chat client. Shareable across threads; at most
/// `max_inflight` requests are outstanding at once.
class LlmClient {
public:
    explicit LlmClient(LlmConfig config);

    const LlmConfig& config() const noexcept { return config_; }
    std::string model_for(const AdapterId& adapter) const;

    /// Retries connection failures and 5xx/429 replies with exponential
    /// backoff. Throws Error{ServiceUnavailable | DeadlineExceeded |
    /// MalformedResponse}; the error's attempts() reports tries made.
    ChatResponse chat(const ChatRequest& request, const Deadline& deadline = {}) const;

private:
    using Gate = std::counting_semaphore<4096>;

    LlmConfig config_;
    HttpEndpoint endpoint_;
    std::shared_ptr<Gate> gate_;
};

std::string render_judge_prompt(std::string_view question, std::string_view ground_truth, std::string_view candidate);

// Leading "yes" -> true; "no" or anything unparseable -> false.
bool parse_judge_reply(std::string_view reply);

bool judge_correct(const LlmClient& llm, std::string_view question, std::string_view ground_truth,
                   std::string_view candidate, const Deadline& deadline = {});

}  // namespace marags
