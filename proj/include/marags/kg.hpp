#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "marags/http.hpp"
#include "marags/llm_client.hpp"
#include "marags/segmenter.hpp"

namespace marags::kg {

enum class ParamKind { String, Number, DateString };

std::string_view to_string(ParamKind kind);

struct ApiParam {
    std::string name;
    ParamKind kind = ParamKind::String;
    bool required = true;
};

struct ApiFunction {
    std::string name;
    std::string doc;
    std::vector<ApiParam> params;  // required parameters come first
    std::string method = "POST";
    std::string endpoint_path;     // may contain {param} placeholders
    std::string formatter_id = "generic";

    std::size_t required_count() const noexcept;
    std::string signature() const;  // e.g. "get_price(ticker, date)"
};

/// Immutable, ordered set of callable knowledge-graph functions.
class ApiRegistry {
public:
    ApiRegistry() = default;
    explicit ApiRegistry(std::vector<ApiFunction> functions);  // validates

    static ApiRegistry from_json(const nlohmann::json& j);
    static ApiRegistry load(const std::filesystem::path& path);

    const std::vector<ApiFunction>& functions() const noexcept { return functions_; }
    const ApiFunction* find(std::string_view name) const noexcept;
    bool empty() const noexcept { return functions_.empty(); }

private:
    std::vector<ApiFunction> functions_;
};

using Literal = std::variant<std::string, double>;

struct ApiCall {
    std::string function;
    std::vector<Literal> args;
    std::string raw;  // text the call was parsed from; ignored by ==

    bool operator==(const ApiCall& other) const { return function == other.function && args == other.args; }
};

std::string render_catalog_entry(const ApiFunction& fn);
std::string render_catalog(const ApiRegistry& registry);

std::string render_call_prompt(const ApiRegistry& registry, std::string_view question, std::string_view query_time);

// Raw model text for one call-generation request.
std::string generate_call(const LlmClient& llm, std::string_view question, std::string_view query_time,
                          const ApiRegistry& registry, const AdapterId& adapter = AdapterId::api_call(),
                          const Deadline& deadline = {});

/// Extracts the first registry call from free-form model output.
/// Returns nullopt for a "None" answer. Throws Error{UnknownFunction |
/// ArityMismatch | BadLiteral}.
std::optional<ApiCall> parse_call(std::string_view raw, const ApiRegistry& registry);

// Canonical form: name("string", 3.5) with shortest round-trip numbers.
std::string render_call(const ApiCall& call);

std::string render_literal(const Literal& value);

enum class CallFailure { Http4xx, Http5xx, Timeout, BadBody, Unreachable, InvalidCall, GenerationFailed };

std::string_view to_string(CallFailure failure);

struct CallOutcome {
    enum class Status { NoCall, Executed, Failed };

    Status status = Status::NoCall;
    nlohmann::json body;            // Executed only
    std::vector<Segment> segments;  // Executed only
    std::optional<CallFailure> failure;
    std::string detail;

    bool executed() const noexcept { return status == Status::Executed; }
};

struct KgEndpointConfig {
    std::string base_url;
    std::chrono::milliseconds timeout{5000};
    std::size_t max_segment_chars = kDefaultMaxSegmentChars;
};

/// Sends the call and formats the reply. Never throws for remote failures:
/// they come back as a Failed outcome.
CallOutcome execute_call(const ApiCall& call, const ApiRegistry& registry, const KgEndpointConfig& config,
                         const Deadline& deadline = {});

/// Renders a response body into ApiResponse segments ("key.path: value"
/// lines packed under the threshold). Throws Error{BadBody} when the body
/// does not have the shape the formatter expects.
std::vector<Segment> format_response(const nlohmann::json& body, std::string_view formatter_id,
                                     std::size_t max_chars = kDefaultMaxSegmentChars);

bool known_formatter(std::string_view formatter_id) noexcept;

}  // namespace marags::kg
