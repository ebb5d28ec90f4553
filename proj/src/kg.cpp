#include "marags/kg.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "marags/error.hpp"
#include "marags/prompts.hpp"
#include "marags/text.hpp"

namespace marags::kg {

using json = nlohmann::json;

std::string_view to_string(ParamKind kind) {
    switch (kind) {
        case ParamKind::String: return "string";
        case ParamKind::Number: return "number";
        case ParamKind::DateString: return "date-string";
    }
    return "string";
}

std::string_view to_string(CallFailure failure) {
    switch (failure) {
        case CallFailure::Http4xx: return "Http4xx";
        case CallFailure::Http5xx: return "Http5xx";
        case CallFailure::Timeout: return "Timeout";
        case CallFailure::BadBody: return "BadBody";
        case CallFailure::Unreachable: return "Unreachable";
        case CallFailure::InvalidCall: return "InvalidCall";
        case CallFailure::GenerationFailed: return "GenerationFailed";
    }
    return "Unreachable";
}

std::size_t ApiFunction::required_count() const noexcept {
    std::size_t n = 0;
    for (const auto& p : params) n += p.required ? 1 : 0;
    return n;
}

std::string ApiFunction::signature() const {
    std::string out = name + "(";
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (i) out += ", ";
        out += params[i].name;
    }
    return out + ")";
}

// ---------------------------------------------------------------------------
// Registry

ApiRegistry::ApiRegistry(std::vector<ApiFunction> functions) : functions_(std::move(functions)) {
    std::unordered_set<std::string> names;
    for (const auto& fn : functions_) {
        if (fn.name.empty()) throw Error(ErrorKind::InvalidConfig, "registry function without a name");
        if (!names.insert(fn.name).second) throw Error(ErrorKind::InvalidConfig, "duplicate function " + fn.name);
        bool optional_seen = false;
        for (const auto& p : fn.params) {
            if (!p.required) optional_seen = true;
            if (p.required && optional_seen) {
                throw Error(ErrorKind::InvalidConfig, fn.name + ": required parameter " + p.name + " follows an optional one");
            }
        }
        if (!known_formatter(fn.formatter_id)) {
            throw Error(ErrorKind::InvalidConfig, fn.name + ": unknown formatter " + fn.formatter_id);
        }
        if (fn.method != "GET" && fn.method != "POST") {
            throw Error(ErrorKind::InvalidConfig, fn.name + ": method must be GET or POST");
        }
    }
}

const ApiFunction* ApiRegistry::find(std::string_view name) const noexcept {
    for (const auto& fn : functions_) {
        if (fn.name == name) return &fn;
    }
    return nullptr;
}

ApiRegistry ApiRegistry::from_json(const json& j) {
    const json& list = j.is_object() ? j.at("functions") : j;
    std::vector<ApiFunction> fns;
    try {
        for (const auto& f : list) {
            ApiFunction fn;
            fn.name = f.at("name").get<std::string>();
            fn.doc = f.value("doc", "");
            fn.method = text::to_lower_ascii(f.value("method", "POST")) == "get" ? "GET" : "POST";
            fn.endpoint_path = f.at("endpoint_path").get<std::string>();
            fn.formatter_id = f.value("formatter", "generic");
            for (const auto& p : f.value("params", json::array())) {
                ApiParam param;
                param.name = p.at("name").get<std::string>();
                const std::string kind = p.value("kind", "string");
                if (kind == "string") {
                    param.kind = ParamKind::String;
                } else if (kind == "number") {
                    param.kind = ParamKind::Number;
                } else if (kind == "date-string" || kind == "date") {
                    param.kind = ParamKind::DateString;
                } else {
                    throw Error(ErrorKind::InvalidConfig, fn.name + ": unknown parameter kind " + kind);
                }
                param.required = p.value("required", true);
                fn.params.push_back(std::move(param));
            }
            fns.push_back(std::move(fn));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("registry: ") + e.what());
    }
    return ApiRegistry(std::move(fns));
}

ApiRegistry ApiRegistry::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::FileUnreadable, "cannot open registry " + path.string());
    try {
        return from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::InvalidConfig, "registry " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Catalog and call generation

std::string render_catalog_entry(const ApiFunction& fn) {
    std::string out = "- " + fn.signature() + "\n";
    if (text::has_non_space(fn.doc)) out += "    " + text::collapse_whitespace(fn.doc) + "\n";
    if (!fn.params.empty()) {
        out += "    Arguments:";
        for (std::size_t i = 0; i < fn.params.size(); ++i) {
            const auto& p = fn.params[i];
            out += (i ? ", " : " ") + p.name + " (" + std::string(to_string(p.kind)) + (p.required ? "" : ", optional") + ")";
        }
        out += "\n";
    }
    return out;
}

std::string render_catalog(const ApiRegistry& registry) {
    std::string out;
    for (const auto& fn : registry.functions()) out += render_catalog_entry(fn);
    return out;
}

std::string render_call_prompt(const ApiRegistry& registry, std::string_view question, std::string_view query_time) {
    std::string out;
    out += prompts::kApiCatalogHeader;
    out += "\n";
    out += render_catalog(registry);
    out += prompts::kQueryTimeHeader;
    out += query_time;
    out += "\n";
    out += prompts::kQuestionHeader;
    out += text::collapse_whitespace(question);
    out += "\n";
    out += prompts::kApiCallInstruction;
    return out;
}

std::string generate_call(const LlmClient& llm, std::string_view question, std::string_view query_time,
                          const ApiRegistry& registry, const AdapterId& adapter, const Deadline& deadline) {
    if (registry.empty()) throw Error(ErrorKind::InvalidConfig, "call generation needs a non-empty registry");
    ChatRequest req;
    req.adapter = adapter;
    req.system = std::string(prompts::kApiCallSystem);
    req.user = render_call_prompt(registry, question, query_time);
    req.max_tokens = 128;
    return llm.chat(req, deadline).text;
}

// ---------------------------------------------------------------------------
// Call grammar

namespace {

bool ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

struct RawLiteral {
    bool quoted = false;
    std::string value;  // unescaped content, or the number's source text
};

std::optional<double> parse_number(std::string_view s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = s.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

class ArgScanner {
public:
    ArgScanner(std::string_view s, std::size_t pos) : s_(s), pos_(pos) {}

    // `pos` points just past '('. Returns the literals up to the matching ')'.
    std::vector<RawLiteral> scan() {
        std::vector<RawLiteral> out;
        skip_space();
        if (peek() == ')') return out;
        while (true) {
            skip_space();
            out.push_back(literal());
            skip_space();
            const char c = peek();
            ++pos_;
            if (c == ')') return out;
            if (c != ',') fail("expected ',' or ')'");
        }
    }

private:
    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

    void skip_space() {
        while (pos_ < s_.size() && text::is_space(s_[pos_])) ++pos_;
    }

    [[noreturn]] void fail(const std::string& why) const {
        throw Error(ErrorKind::BadLiteral, why + " at offset " + std::to_string(pos_));
    }

    RawLiteral literal() {
        const char c = peek();
        if (c == '"' || c == '\'') return quoted(c);
        std::size_t end = pos_;
        while (end < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[end])) || s_[end] == '-' ||
                                   s_[end] == '+' || s_[end] == '.' || s_[end] == 'e' || s_[end] == 'E')) {
            ++end;
        }
        const std::string_view token = s_.substr(pos_, end - pos_);
        if (!parse_number(token)) fail("unquoted argument is not a number");
        pos_ = end;
        return {false, std::string(token)};
    }

    RawLiteral quoted(char quote) {
        ++pos_;
        std::string value;
        while (pos_ < s_.size()) {
            const char c = s_[pos_++];
            if (c == quote) return {true, std::move(value)};
            if (c != '\\') {
                value.push_back(c);
                continue;
            }
            if (pos_ >= s_.size()) break;
            const char e = s_[pos_++];
            switch (e) {
                case 'n': value.push_back('\n'); break;
                case 't': value.push_back('\t'); break;
                case 'r': value.push_back('\r'); break;
                default: value.push_back(e); break;
            }
        }
        fail("unterminated string literal");
    }

    std::string_view s_;
    std::size_t pos_;
};

bool standalone_none(std::string_view raw) {
    const std::string lower = text::to_lower_ascii(raw);
    for (std::size_t pos = lower.find("none"); pos != std::string::npos; pos = lower.find("none", pos + 1)) {
        const bool left = pos == 0 || !ident_char(lower[pos - 1]);
        const bool right = pos + 4 >= lower.size() || !ident_char(lower[pos + 4]);
        if (left && right) return true;
    }
    return false;
}

Literal coerce(const RawLiteral& lit, const ApiParam& param) {
    if (param.kind == ParamKind::Number) {
        auto v = parse_number(text::collapse_whitespace(lit.value));
        if (!v) throw Error(ErrorKind::BadLiteral, param.name + " expects a number, got \"" + lit.value + "\"");
        return *v;
    }
    if (!lit.quoted && param.kind == ParamKind::DateString) {
        throw Error(ErrorKind::BadLiteral, param.name + " expects a quoted date string");
    }
    return lit.value;
}

}  // namespace

std::optional<ApiCall> parse_call(std::string_view raw, const ApiRegistry& registry) {
    std::string stripped = text::collapse_whitespace(raw);
    while (!stripped.empty() && (stripped.back() == '.' || stripped.back() == '`' || stripped.back() == '"')) stripped.pop_back();
    while (!stripped.empty() && (stripped.front() == '`' || stripped.front() == '"')) stripped.erase(0, 1);
    if (text::to_lower_ascii(stripped) == "none") return std::nullopt;

    bool saw_unknown_call = false;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!ident_start(raw[i]) || (i > 0 && ident_char(raw[i - 1]))) continue;
        std::size_t j = i;
        while (j < raw.size() && ident_char(raw[j])) ++j;
        const std::string_view name = raw.substr(i, j - i);
        std::size_t k = j;
        while (k < raw.size() && text::is_space(raw[k])) ++k;
        const bool call_like = k < raw.size() && raw[k] == '(';
        const ApiFunction* fn = call_like ? registry.find(name) : nullptr;
        if (!fn) {
            saw_unknown_call = saw_unknown_call || call_like;
            i = j - 1;
            continue;
        }

        const auto literals = ArgScanner(raw, k + 1).scan();
        if (literals.size() < fn->required_count() || literals.size() > fn->params.size()) {
            throw Error(ErrorKind::ArityMismatch, fn->signature() + " called with " + std::to_string(literals.size()) +
                                                      " argument(s)");
        }
        ApiCall call;
        call.function = fn->name;
        call.raw = std::string(raw);
        for (std::size_t a = 0; a < literals.size(); ++a) call.args.push_back(coerce(literals[a], fn->params[a]));
        return call;
    }
    if (!saw_unknown_call && standalone_none(raw)) return std::nullopt;
    throw Error(ErrorKind::UnknownFunction, "no registry function call found in: " + std::string(raw.substr(0, 200)));
}

std::string render_literal(const Literal& value) {
    if (const auto* d = std::get_if<double>(&value)) {
        char buf[64];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, *d);
        return std::string(buf, ptr);
    }
    const auto& s = std::get<std::string>(value);
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out.push_back(c); break;
        }
    }
    return out + "\"";
}

std::string render_call(const ApiCall& call) {
    std::string out = call.function + "(";
    for (std::size_t i = 0; i < call.args.size(); ++i) {
        if (i) out += ", ";
        out += render_literal(call.args[i]);
    }
    return out + ")";
}

// ---------------------------------------------------------------------------
// Execution and formatting

namespace {

json literal_json(const Literal& v) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    return std::get<std::string>(v);
}

std::string literal_text(const Literal& v) {
    if (std::holds_alternative<double>(v)) return render_literal(v);
    return std::get<std::string>(v);
}

CallOutcome failed(CallFailure failure, std::string detail) {
    CallOutcome out;
    out.status = CallOutcome::Status::Failed;
    out.failure = failure;
    out.detail = std::move(detail);
    return out;
}

void flatten(const json& value, const std::string& path, std::vector<std::string>& lines) {
    if (value.is_object()) {
        for (const auto& [key, child] : value.items()) flatten(child, path.empty() ? key : path + "." + key, lines);
    } else if (value.is_array()) {
        for (std::size_t i = 0; i < value.size(); ++i) flatten(value[i], path + "[" + std::to_string(i) + "]", lines);
    } else {
        const std::string rendered = value.is_string() ? value.get<std::string>() : value.dump();
        lines.push_back(path.empty() ? rendered : path + ": " + rendered);
    }
}

std::vector<Segment> pack_lines(const std::vector<std::string>& lines, std::size_t max_chars) {
    std::vector<std::string> chunks;
    std::string current;
    std::size_t current_len = 0;
    for (const auto& line : lines) {
        const std::size_t len = text::char_count(line);
        if (!current.empty() && current_len + 1 + len >= max_chars) {
            chunks.push_back(std::move(current));
            current.clear();
            current_len = 0;
        }
        if (!current.empty()) {
            current.push_back('\n');
            ++current_len;
        }
        current += line;
        current_len += len;
    }
    if (!current.empty()) chunks.push_back(std::move(current));

    std::vector<Segment> out;
    for (const auto& chunk : chunks) {
        for (auto& piece : split_oversize_text(chunk, max_chars)) {
            out.push_back(make_segment(std::move(piece), 0, Origin::ApiResponse));
        }
    }
    return out;
}

}  // namespace

bool known_formatter(std::string_view formatter_id) noexcept {
    return formatter_id == "generic" || formatter_id == "result";
}

std::vector<Segment> format_response(const json& body, std::string_view formatter_id, std::size_t max_chars) {
    std::vector<std::string> lines;
    if (formatter_id == "generic") {
        if (!body.is_object() && !body.is_array()) throw Error(ErrorKind::BadBody, "generic formatter expects an object or array");
        flatten(body, "", lines);
    } else if (formatter_id == "result") {
        if (!body.is_object() || !body.contains("result")) throw Error(ErrorKind::BadBody, "result formatter expects {\"result\": ...}");
        const json& result = body.at("result");
        if (result.is_null()) return {};
        flatten(result, result.is_primitive() ? "result" : "", lines);
    } else {
        throw Error(ErrorKind::BadBody, "unknown formatter " + std::string(formatter_id));
    }
    return pack_lines(lines, max_chars);
}

CallOutcome execute_call(const ApiCall& call, const ApiRegistry& registry, const KgEndpointConfig& config,
                         const Deadline& deadline) {
    const ApiFunction* fn = registry.find(call.function);
    if (!fn || call.args.size() > fn->params.size() || call.args.size() < fn->required_count()) {
        return failed(CallFailure::InvalidCall, "call does not match the registry: " + render_call(call));
    }

    std::string path = fn->endpoint_path;
    json body = json::object();
    std::vector<std::pair<std::string, std::string>> query;
    for (std::size_t i = 0; i < call.args.size(); ++i) {
        const std::string& name = fn->params[i].name;
        const std::string placeholder = "{" + name + "}";
        if (auto pos = path.find(placeholder); pos != std::string::npos) {
            path.replace(pos, placeholder.size(), url_encode(literal_text(call.args[i])));
        } else if (fn->method == "GET") {
            query.emplace_back(name, literal_text(call.args[i]));
        } else {
            body[name] = literal_json(call.args[i]);
        }
    }

    if (deadline.expired()) return failed(CallFailure::Timeout, "sample budget exhausted");
    const auto timeout = deadline.clamp(config.timeout);
    const HttpEndpoint endpoint(config.base_url);
    const HttpResponse res = fn->method == "GET" ? endpoint.get(path, query, timeout)
                                                 : endpoint.post_json(path, body.dump(), timeout);
    switch (res.transport) {
        case Transport::Timeout: return failed(CallFailure::Timeout, path + " timed out");
        case Transport::ConnectionFailed:
        case Transport::OtherFailure: return failed(CallFailure::Unreachable, config.base_url + " unreachable");
        case Transport::Ok: break;
    }
    if (res.status >= 500) return failed(CallFailure::Http5xx, path + " returned " + std::to_string(res.status));
    if (res.status < 200 || res.status >= 300) return failed(CallFailure::Http4xx, path + " returned " + std::to_string(res.status));

    CallOutcome out;
    try {
        out.body = json::parse(res.body);
        out.segments = format_response(out.body, fn->formatter_id, config.max_segment_chars);
    } catch (const json::exception& e) {
        return failed(CallFailure::BadBody, e.what());
    } catch (const Error& e) {
        return failed(CallFailure::BadBody, e.what());
    }
    out.status = CallOutcome::Status::Executed;
    return out;
}

}  // namespace marags::kg
