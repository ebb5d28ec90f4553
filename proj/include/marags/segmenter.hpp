#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "marags/corpus.hpp"
#include "marags/html.hpp"

namespace marags {

inline constexpr std::size_t kDefaultMaxSegmentChars = 2000;

enum class Origin { WebPage, ApiResponse, Snippet };

std::string_view to_string(Origin origin);

/// A unit of rankable context. `char_len` counts code points and is always
/// strictly below the segmenter threshold that produced it.
struct Segment {
    std::size_t doc_index = 0;
    std::string text;
    std::size_t char_len = 0;
    Origin origin = Origin::WebPage;
    // Child indices from the document root. Fragments of a split text node
    // carry the node's path with the fragment ordinal appended.
    std::vector<std::size_t> node_path;

    bool operator==(const Segment&) const = default;
};

Segment make_segment(std::string text, std::size_t doc_index, Origin origin,
                     std::vector<std::size_t> node_path = {});

/// Greedy whitespace packing into pieces of fewer than `max_chars` code
/// points. A token that alone reaches the limit is cut into pieces of
/// `max_chars - 1`; its tail keeps packing with the tokens that follow.
std::vector<std::string> split_oversize_text(std::string_view text, std::size_t max_chars);

/// Breadth-first segmentation. A node whose descendant text is non-blank
/// and shorter than `max_chars` becomes one segment and its subtree is not
/// visited; larger nodes enqueue their children. Oversized text leaves are
/// split with split_oversize_text.
std::vector<Segment> segment_tree(const html::DomNode& root, std::size_t doc_index,
                                  std::size_t max_chars = kDefaultMaxSegmentChars);

std::vector<Segment> segment_html(std::string_view raw_html, std::size_t doc_index,
                                  std::size_t max_chars = kDefaultMaxSegmentChars);

std::optional<Segment> snippet_segment(const SearchResult& result, std::size_t doc_index,
                                       std::size_t max_chars = kDefaultMaxSegmentChars);

}  // namespace marags
