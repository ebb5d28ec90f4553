#include "marags/http.hpp"

#include <httplib.h>

#include "marags/error.hpp"

namespace marags {

std::chrono::milliseconds Deadline::clamp(std::chrono::milliseconds cap) const {
    if (!until_) return cap;
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(*until_ - Clock::now());
    if (left < std::chrono::milliseconds(1)) left = std::chrono::milliseconds(1);
    return std::min(left, cap);
}

HttpEndpoint::HttpEndpoint(std::string base_url) : base_url_(std::move(base_url)) {
    const auto scheme_end = base_url_.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorKind::InvalidConfig, "endpoint URL needs a scheme: " + base_url_);
    }
    const auto path_start = base_url_.find('/', scheme_end + 3);
    origin_ = base_url_.substr(0, path_start);
    if (path_start != std::string::npos) {
        prefix_ = base_url_.substr(path_start);
        while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }
}

namespace {

HttpResponse convert(const httplib::Result& res) {
    HttpResponse out;
    if (res) {
        out.status = res->status;
        out.body = res->body;
        return out;
    }
    switch (res.error()) {
        case httplib::Error::Connection:
            out.transport = Transport::ConnectionFailed;
            break;
        case httplib::Error::Read:
        case httplib::Error::ConnectionTimeout:
            out.transport = Transport::Timeout;
            break;
        default:
            out.transport = Transport::OtherFailure;
            break;
    }
    return out;
}

httplib::Client make_client(const std::string& origin, std::chrono::milliseconds timeout) {
    httplib::Client cli(origin);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    cli.set_keep_alive(false);
    return cli;
}

}  // namespace

HttpResponse HttpEndpoint::post_json(const std::string& path, const std::string& body,
                                     std::chrono::milliseconds timeout) const {
    if (!configured()) return {Transport::ConnectionFailed, 0, {}};
    auto cli = make_client(origin_, timeout);
    return convert(cli.Post(prefix_ + path, body, "application/json"));
}

HttpResponse HttpEndpoint::get(const std::string& path,
                               const std::vector<std::pair<std::string, std::string>>& query,
                               std::chrono::milliseconds timeout) const {
    if (!configured()) return {Transport::ConnectionFailed, 0, {}};
    auto cli = make_client(origin_, timeout);
    httplib::Params params;
    for (const auto& [k, v] : query) params.emplace(k, v);
    return convert(cli.Get(prefix_ + path, params, httplib::Headers{}));
}

std::string url_encode(const std::string& s) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        const bool unreserved = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                                (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.' || c == '~';
        if (unreserved) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(kHex[c >> 4]);
            out.push_back(kHex[c & 0xF]);
        }
    }
    return out;
}

}  // namespace marags
