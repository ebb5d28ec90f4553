#include "marags/html.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <utility>

#include "marags/text.hpp"

namespace marags::html {

namespace {

constexpr std::array<std::string_view, 5> kExcluded = {"script", "style", "head", "noscript", "template"};

constexpr std::array<std::string_view, 16> kVoid = {
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr", "keygen", "frame"};

// Content is taken verbatim up to the matching end tag.
constexpr std::array<std::string_view, 6> kRawText = {"script", "style", "textarea", "title", "xmp", "plaintext"};

// Start tags that implicitly close an open <p> sitting on top of the stack.
constexpr std::array<std::string_view, 26> kClosesParagraph = {
    "address", "article", "aside", "blockquote", "details", "div", "dl", "fieldset", "figure",
    "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "header", "hr", "main", "nav",
    "ol", "p", "pre", "section", "table"};

struct Entity {
    std::string_view name;
    char32_t cp;
};

constexpr std::array<Entity, 24> kEntities = {{
    {"amp", '&'}, {"lt", '<'}, {"gt", '>'}, {"quot", '"'}, {"apos", '\''},
    {"nbsp", 0xA0}, {"copy", 0xA9}, {"reg", 0xAE}, {"trade", 0x2122},
    {"mdash", 0x2014}, {"ndash", 0x2013}, {"hellip", 0x2026}, {"lsquo", 0x2018},
    {"rsquo", 0x2019}, {"ldquo", 0x201C}, {"rdquo", 0x201D}, {"bull", 0x2022},
    {"middot", 0xB7}, {"times", 0xD7}, {"euro", 0x20AC}, {"pound", 0xA3},
    {"deg", 0xB0}, {"cent", 0xA2}, {"yen", 0xA5},
}};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& set, std::string_view v) {
    return std::find(set.begin(), set.end(), v) != set.end();
}

bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_name_char(char c) {
    return is_alpha(c) || (c >= '0' && c <= '9') || c == '-' || c == ':' || c == '_';
}

// Case-insensitive search for `</name` starting at `from`.
std::size_t find_end_tag(std::string_view s, std::string_view name, std::size_t from) {
    for (std::size_t i = s.find("</", from); i != std::string_view::npos; i = s.find("</", i + 1)) {
        if (i + 2 + name.size() > s.size()) return std::string_view::npos;
        if (text::to_lower_ascii(s.substr(i + 2, name.size())) != name) continue;
        const std::size_t after = i + 2 + name.size();
        if (after == s.size() || !is_name_char(s[after])) return i;
    }
    return std::string_view::npos;
}

// Index just past the '>' closing a tag that starts at `from`, honoring
// quoted attribute values. Returns npos when the tag is unterminated.
std::size_t tag_end(std::string_view s, std::size_t from) {
    char quote = 0;
    for (std::size_t i = from; i < s.size(); ++i) {
        const char c = s[i];
        if (quote) {
            if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            // Only a quote directly following '=' (possibly spaced) opens a value.
            std::size_t k = i;
            while (k > from && text::is_space(s[k - 1])) --k;
            if (k > from && s[k - 1] == '=') quote = c;
        } else if (c == '>') {
            return i + 1;
        }
    }
    return std::string_view::npos;
}

class TreeBuilder {
public:
    TreeBuilder() { root_.tag = "#document"; stack_.push_back(&root_); }

    void text(std::string_view decoded) {
        if (decoded.empty()) return;
        DomNode& top = *stack_.back();
        if (!top.children.empty() && top.children.back().is_text()) {
            top.children.back().direct_text.append(decoded);
            return;
        }
        DomNode node;
        node.tag = "#text";
        node.direct_text = std::string(decoded);
        top.children.push_back(std::move(node));
    }

    void comment() {
        DomNode node;
        node.tag = "#comment";
        stack_.back()->children.push_back(std::move(node));
    }

    // Returns false when the element was not opened (void or too deep).
    bool start(const std::string& tag, bool self_closing) {
        apply_implied_end(tag);
        DomNode node;
        node.tag = tag;
        DomNode& parent = *stack_.back();
        parent.children.push_back(std::move(node));
        if (self_closing || contains(kVoid, tag) || stack_.size() >= kMaxNestingDepth) return false;
        stack_.push_back(&parent.children.back());
        return true;
    }

    void end(const std::string& tag) {
        for (std::size_t i = stack_.size(); i-- > 1;) {
            if (stack_[i]->tag == tag) {
                stack_.resize(i);
                return;
            }
        }
    }

    DomNode finish() {
        stack_.clear();
        prune_and_measure(root_);
        return std::move(root_);
    }

private:
    void apply_implied_end(const std::string& tag) {
        const std::string& top = stack_.back()->tag;
        if (top == "p" && contains(kClosesParagraph, tag)) {
            stack_.pop_back();
        } else if (tag == "li" && top == "li") {
            stack_.pop_back();
        } else if ((tag == "dt" || tag == "dd") && (top == "dt" || top == "dd")) {
            stack_.pop_back();
        } else if (tag == "option" && top == "option") {
            stack_.pop_back();
        } else if ((tag == "td" || tag == "th") && (top == "td" || top == "th")) {
            stack_.pop_back();
        } else if (tag == "tr" && (top == "td" || top == "th" || top == "tr")) {
            if (top != "tr") stack_.pop_back();
            if (stack_.back()->tag == "tr") stack_.pop_back();
        }
    }

    static void prune_and_measure(DomNode& node) {
        if (node.is_text()) {
            node.total_text_len = text::char_count(node.direct_text);
            return;
        }
        if (is_excluded_element(node.tag)) node.children.clear();
        std::size_t total = 0;
        for (auto& child : node.children) {
            prune_and_measure(child);
            total += child.total_text_len;
        }
        node.total_text_len = total;
    }

    DomNode root_;
    // Pointers stay valid: a node's children vector only grows while it is
    // the top of the stack, and deeper entries are popped before that.
    std::vector<DomNode*> stack_;
};

}  // namespace

bool is_excluded_element(std::string_view tag) noexcept {
    return contains(kExcluded, tag);
}

std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] != '&') {
            out.push_back(s[i++]);
            continue;
        }
        const std::size_t semi = s.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 12) {
            out.push_back(s[i++]);
            continue;
        }
        const std::string_view body = s.substr(i + 1, semi - i - 1);
        bool decoded = false;
        if (body.size() >= 2 && body[0] == '#') {
            char32_t cp = 0;
            const bool hex = body[1] == 'x' || body[1] == 'X';
            const std::string_view digits = body.substr(hex ? 2 : 1);
            std::uint32_t value = 0;
            auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value, hex ? 16 : 10);
            if (ec == std::errc() && ptr == digits.data() + digits.size() && !digits.empty()) {
                cp = value;
                if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
                text::append_codepoint(out, cp);
                decoded = true;
            }
        } else {
            for (const auto& e : kEntities) {
                if (e.name == body) {
                    text::append_codepoint(out, e.cp);
                    decoded = true;
                    break;
                }
            }
        }
        if (decoded) {
            i = semi + 1;
        } else {
            out.push_back(s[i++]);
        }
    }
    return out;
}

DomNode parse_html(std::string_view raw) {
    const std::string input = text::sanitize_utf8(raw);
    const std::string_view s = input;
    TreeBuilder builder;

    std::size_t i = 0;
    std::size_t text_start = 0;
    auto flush_text = [&](std::size_t until) {
        if (until > text_start) builder.text(decode_entities(s.substr(text_start, until - text_start)));
    };

    while (i < s.size()) {
        if (s[i] != '<' || i + 1 >= s.size()) {
            ++i;
            continue;
        }
        const char next = s[i + 1];
        if (s.compare(i, 4, "<!--") == 0) {
            flush_text(i);
            const std::size_t close = s.find("-->", i + 4);
            i = close == std::string_view::npos ? s.size() : close + 3;
            text_start = i;
            builder.comment();
        } else if (next == '!' || next == '?') {
            flush_text(i);
            const std::size_t close = s.find('>', i + 2);
            i = close == std::string_view::npos ? s.size() : close + 1;
            text_start = i;
        } else if (next == '/' && i + 2 < s.size() && is_alpha(s[i + 2])) {
            flush_text(i);
            std::size_t j = i + 2;
            while (j < s.size() && is_name_char(s[j])) ++j;
            const std::string name = text::to_lower_ascii(s.substr(i + 2, j - i - 2));
            const std::size_t close = s.find('>', j);
            i = close == std::string_view::npos ? s.size() : close + 1;
            text_start = i;
            builder.end(name);
        } else if (is_alpha(next)) {
            const std::size_t close = tag_end(s, i + 1);
            if (close == std::string_view::npos) {
                // Unterminated tag: the rest is treated as text.
                i = s.size();
                break;
            }
            flush_text(i);
            std::size_t j = i + 1;
            while (j < s.size() && is_name_char(s[j])) ++j;
            const std::string name = text::to_lower_ascii(s.substr(i + 1, j - i - 1));
            const bool self_closing = close >= 2 && s[close - 2] == '/';
            i = close;
            text_start = i;
            const bool opened = builder.start(name, self_closing);
            if (!self_closing && contains(kRawText, name)) {
                std::size_t end = name == "plaintext" ? std::string_view::npos : find_end_tag(s, name, i);
                if (end == std::string_view::npos) end = s.size();
                const std::string_view content = s.substr(i, end - i);
                // Past the depth cap the element was not opened; its content
                // then lands in the current node unless it is excluded.
                if (opened || !is_excluded_element(name)) {
                    if (name == "textarea" || name == "title") {
                        builder.text(decode_entities(content));
                    } else {
                        builder.text(content);
                    }
                }
                if (opened) builder.end(name);
                const std::size_t gt = end == s.size() ? std::string_view::npos : s.find('>', end);
                i = gt == std::string_view::npos ? s.size() : gt + 1;
                text_start = i;
            }
        } else {
            ++i;
        }
    }
    flush_text(s.size());
    return builder.finish();
}

namespace {

void append_text(const DomNode& node, std::string& out) {
    if (node.is_text()) {
        out += node.direct_text;
        return;
    }
    for (const auto& child : node.children) append_text(child, out);
}

}  // namespace

std::string visible_text(const DomNode& node) {
    std::string out;
    append_text(node, out);
    return out;
}

}  // namespace marags::html
