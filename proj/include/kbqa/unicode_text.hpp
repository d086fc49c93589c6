#pragma once

#include <string>
#include <string_view>

namespace kbqa::text {

bool is_valid_utf8(std::string_view bytes);

std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view code_points);
void append_utf8(std::string& out, char32_t cp);

std::size_t code_point_count(std::string_view bytes);

/// NFC-normalizes and lowercases (root locale). Invalid UTF-8 sequences are
/// replaced with U+FFFD by ICU.
std::string nfc_fold(std::string_view bytes);

enum class CharClass {
  kWord,   // letters, numbers, combining marks outside CJK
  kCjk,    // CJK ideographs and kana
  kSpace,
  kDrop,   // punctuation, symbols, emoji, controls
};

CharClass classify(char32_t cp);

}  // namespace kbqa::text
