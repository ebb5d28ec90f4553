#include "marags/segmenter.hpp"

#include <deque>
#include <utility>

#include "marags/error.hpp"
#include "marags/text.hpp"

namespace marags {

std::string_view to_string(Origin origin) {
    switch (origin) {
        case Origin::WebPage: return "WebPage";
        case Origin::ApiResponse: return "ApiResponse";
        case Origin::Snippet: return "Snippet";
    }
    return "WebPage";
}

Segment make_segment(std::string text, std::size_t doc_index, Origin origin,
                     std::vector<std::size_t> node_path) {
    Segment seg;
    seg.doc_index = doc_index;
    seg.char_len = text::char_count(text);
    seg.text = std::move(text);
    seg.origin = origin;
    seg.node_path = std::move(node_path);
    return seg;
}

namespace {

void require_threshold(std::size_t max_chars) {
    if (max_chars < 2) throw Error(ErrorKind::InvalidConfig, "max segment chars must be >= 2");
}

}  // namespace

std::vector<std::string> split_oversize_text(std::string_view input, std::size_t max_chars) {
    require_threshold(max_chars);
    std::vector<std::string> pieces;
    std::string current;
    std::size_t current_len = 0;

    auto flush = [&] {
        if (!current.empty()) pieces.push_back(std::move(current));
        current.clear();
        current_len = 0;
    };

    for (auto& token : text::split_whitespace(input)) {
        const std::size_t len = text::char_count(token);
        if (len >= max_chars) {
            flush();
            std::string_view rest = token;
            std::size_t rest_len = len;
            while (rest_len >= max_chars) {
                const std::size_t cut = text::byte_offset(rest, max_chars - 1);
                pieces.emplace_back(rest.substr(0, cut));
                rest.remove_prefix(cut);
                rest_len -= max_chars - 1;
            }
            current = std::string(rest);
            current_len = rest_len;
            continue;
        }
        if (current.empty()) {
            current = std::move(token);
            current_len = len;
        } else if (current_len + 1 + len < max_chars) {
            current.push_back(' ');
            current += token;
            current_len += 1 + len;
        } else {
            flush();
            current = std::move(token);
            current_len = len;
        }
    }
    flush();
    return pieces;
}

std::vector<Segment> segment_tree(const html::DomNode& root, std::size_t doc_index, std::size_t max_chars) {
    require_threshold(max_chars);
    std::vector<Segment> out;

    struct Pending {
        const html::DomNode* node;
        std::vector<std::size_t> path;
    };
    std::deque<Pending> queue;
    queue.push_back({&root, {}});

    while (!queue.empty()) {
        Pending item = std::move(queue.front());
        queue.pop_front();
        const html::DomNode& node = *item.node;
        if (node.total_text_len == 0) continue;

        if (node.total_text_len < max_chars) {
            std::string body = text::collapse_whitespace(
                node.is_text() ? node.direct_text : html::visible_text(node));
            if (!body.empty()) out.push_back(make_segment(std::move(body), doc_index, Origin::WebPage, std::move(item.path)));
            continue;
        }

        if (node.is_text()) {
            auto fragments = split_oversize_text(node.direct_text, max_chars);
            for (std::size_t k = 0; k < fragments.size(); ++k) {
                auto path = item.path;
                path.push_back(k);
                out.push_back(make_segment(std::move(fragments[k]), doc_index, Origin::WebPage, std::move(path)));
            }
            continue;
        }

        for (std::size_t i = 0; i < node.children.size(); ++i) {
            auto path = item.path;
            path.push_back(i);
            queue.push_back({&node.children[i], std::move(path)});
        }
    }
    return out;
}

std::vector<Segment> segment_html(std::string_view raw_html, std::size_t doc_index, std::size_t max_chars) {
    return segment_tree(html::parse_html(raw_html), doc_index, max_chars);
}

std::optional<Segment> snippet_segment(const SearchResult& result, std::size_t doc_index, std::size_t max_chars) {
    auto pieces = split_oversize_text(result.page_snippet, max_chars);
    if (pieces.empty()) return std::nullopt;
    return make_segment(std::move(pieces.front()), doc_index, Origin::Snippet);
}

}  // namespace marags
