#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace marags {

/// Wall-clock budget shared by every remote call made for one sample.
class Deadline {
public:
    using Clock = std::chrono::steady_clock;

    Deadline() = default;  // unbounded
    explicit Deadline(std::chrono::milliseconds budget) : until_(Clock::now() + budget) {}

    bool bounded() const noexcept { return until_.has_value(); }
    bool expired() const noexcept { return until_ && Clock::now() >= *until_; }

    // Remaining budget, clamped to `cap` (and to at least 1 ms when bounded).
    std::chrono::milliseconds clamp(std::chrono::milliseconds cap) const;

private:
    std::optional<Clock::time_point> until_;
};

enum class Transport { Ok, ConnectionFailed, Timeout, OtherFailure };

struct HttpResponse {
    Transport transport = Transport::Ok;
    int status = 0;
    std::string body;

    bool ok() const noexcept { return transport == Transport::Ok && status >= 200 && status < 300; }
};

/// A service base URL such as "http://127.0.0.1:8080" or
/// "http://host:9000/prefix"; request paths are appended to the prefix.
class HttpEndpoint {
public:
    HttpEndpoint() = default;
    explicit HttpEndpoint(std::string base_url);

    const std::string& base_url() const noexcept { return base_url_; }
    bool configured() const noexcept { return !origin_.empty(); }

    HttpResponse post_json(const std::string& path, const std::string& body,
                           std::chrono::milliseconds timeout) const;
    HttpResponse get(const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& query,
                     std::chrono::milliseconds timeout) const;

private:
    std::string base_url_;
    std::string origin_;  // scheme://host:port
    std::string prefix_;  // path prefix without trailing slash
};

std::string url_encode(const std::string& s);

}  // namespace marags
