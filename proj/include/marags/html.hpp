#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace marags::html {

/// One node of a parsed document. Text lives only in text nodes
/// (`tag == "#text"`), so an element's own text chunks appear as ordinary
/// children interleaved with its child elements in document order.
struct DomNode {
    std::string tag;           // lowercase element name, "#text", "#comment" or "#document"
    std::string direct_text;   // text nodes only
    std::vector<DomNode> children;
    std::size_t total_text_len = 0;  // code points of all descendant text

    bool is_text() const noexcept { return tag == "#text"; }
};

inline constexpr std::size_t kMaxNestingDepth = 512;

// Elements whose content never contributes visible text.
bool is_excluded_element(std::string_view tag) noexcept;

/// Lenient HTML parse. Never fails: unknown or unbalanced markup is
/// recovered from, invalid UTF-8 is replaced with U+FFFD, and excluded
/// elements (script, style, head, noscript, template) keep their node but
/// lose their content.
DomNode parse_html(std::string_view raw);

// Concatenation of all descendant text in document order.
std::string visible_text(const DomNode& node);

// Decodes character references in `s` (named subset plus numeric forms).
std::string decode_entities(std::string_view s);

}  // namespace marags::html
