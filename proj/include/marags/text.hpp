#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers. All "character" counts in the library are Unicode code
// points, and whitespace means ASCII whitespace.
namespace marags::text {

bool is_space(char c) noexcept;

// Replaces invalid UTF-8 sequences with U+FFFD.
std::string sanitize_utf8(std::string_view bytes);

std::size_t char_count(std::string_view utf8) noexcept;

// Byte offset of the code point with index `chars` (or size() if past the end).
std::size_t byte_offset(std::string_view utf8, std::size_t chars) noexcept;

void append_codepoint(std::string& out, char32_t cp);

// Splits on runs of whitespace, dropping empties.
std::vector<std::string> split_whitespace(std::string_view s);

// Collapses whitespace runs to one space and trims both ends.
std::string collapse_whitespace(std::string_view s);

std::string to_lower_ascii(std::string_view s);

bool has_non_space(std::string_view s) noexcept;

}  // namespace marags::text
