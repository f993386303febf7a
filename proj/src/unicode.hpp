#pragma once

#include <cstdint>
#include <string>
#include <string_view>

// Minimal code-point utilities for narrative normalization. Case mapping and
// letter classification cover Latin, Greek and Cyrillic blocks, which is all a
// Portuguese corpus needs.
namespace dvrisk::unicode {

inline constexpr char32_t kReplacement = 0xFFFD;

/// Decodes one code point at `pos`, advancing it; invalid sequences yield
/// U+FFFD and consume a single byte.
char32_t decode_next(std::string_view text, std::size_t& pos);

void append_utf8(std::string& out, char32_t cp);

bool is_letter(char32_t cp);
bool is_digit(char32_t cp);
/// Combining diacritical marks, kept inside words so decomposed accents survive.
bool is_combining_mark(char32_t cp);
bool is_whitespace(char32_t cp);

/// Simple (single code point) case fold.
char32_t fold_case(char32_t cp);

}  // namespace dvrisk::unicode
