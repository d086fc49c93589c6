#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace kbqa {

enum class Lang { kEn, kZh };

/// Accepts "en" / "zh" (case-insensitive); throws InvalidArgument otherwise.
Lang parse_lang(std::string_view tag);
std::string_view lang_tag(Lang lang);

inline constexpr std::size_t kMaxQuestionCodePoints = 4096;

struct RawQuestion {
  std::string text;
  Lang lang = Lang::kEn;
};

struct CleanQuestion {
  std::string text;                 // tokens joined by single spaces
  std::vector<std::string> tokens;  // non-empty, no stop words or symbols
  RawQuestion original;
};

class StopwordList {
 public:
  StopwordList() = default;
  StopwordList(std::initializer_list<std::string_view> words);

  void insert(std::string_view word);
  bool contains(std::string_view token) const;
  std::size_t size() const noexcept { return words_.size(); }
  bool empty() const noexcept { return words_.empty(); }
  const std::set<std::string, std::less<>>& words() const noexcept { return words_; }

 private:
  std::set<std::string, std::less<>> words_;
};

StopwordList load_stoplist(const std::filesystem::path& path);
StopwordList parse_stoplist(std::istream& in);

/// Surface forms used to merge CJK character runs into whole tokens.
/// Forms are stored already folded; lookups are longest-first.
class MergeLexicon {
 public:
  void add(std::string_view surface);
  bool empty() const noexcept { return forms_.empty(); }

  /// Length (in code points) of the longest form starting at `pos`, or 0.
  std::size_t longest_match(std::u32string_view run, std::size_t pos) const;

 private:
  std::set<std::u32string, std::less<>> forms_;
  std::size_t max_len_ = 0;
};

/// Normalizes (NFC + lowercase), drops symbol code points and splits into
/// tokens. No stop-word filtering.
std::vector<std::string> tokenize(std::string_view text, Lang lang = Lang::kEn,
                                  const MergeLexicon* merge = nullptr);

/// Throws EmptyInput if nothing survives, InputTooLong over the 4096 code
/// point cap.
CleanQuestion clean(const RawQuestion& raw, const StopwordList& stoplist,
                    const MergeLexicon* merge = nullptr);

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace kbqa
