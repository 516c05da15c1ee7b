#pragma once

#include <string>
#include <string_view>

namespace aicatcher::unicode {

// Decodes UTF-8; malformed sequences become U+FFFD.
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view text);
std::string encode(char32_t cp);

std::u32string nfc(std::u32string_view text);

bool is_space(char32_t cp);
bool is_alnum(char32_t cp);
bool is_mark(char32_t cp);
bool is_punct(char32_t cp);
bool is_upper(char32_t cp);
bool is_lower(char32_t cp);
char32_t to_lower(char32_t cp);

std::string to_lower(std::string_view utf8);
std::size_t codepoint_count(std::string_view utf8);

}  // namespace aicatcher::unicode
