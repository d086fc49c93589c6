#include "kbqa/preprocess.hpp"

#include <cctype>
#include <fstream>
#include <istream>

#include "kbqa/error.hpp"
#include "kbqa/unicode_text.hpp"

namespace kbqa {

Lang parse_lang(std::string_view tag) {
  std::string lower;
  for (char c : tag) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "en") return Lang::kEn;
  if (lower == "zh") return Lang::kZh;
  throw Error(Errc::kInvalidArgument, "unsupported language tag '" + std::string(tag) + "'");
}

std::string_view lang_tag(Lang lang) { return lang == Lang::kZh ? "zh" : "en"; }

StopwordList::StopwordList(std::initializer_list<std::string_view> words) {
  for (auto w : words) insert(w);
}

void StopwordList::insert(std::string_view word) {
  std::string folded = text::nfc_fold(word);
  if (!folded.empty()) words_.insert(std::move(folded));
}

bool StopwordList::contains(std::string_view token) const {
  return words_.find(token) != words_.end();
}

StopwordList parse_stoplist(std::istream& in) {
  StopwordList list;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!text::is_valid_utf8(line)) {
      throw Error(Errc::kMalformedLine, "stoplist line " + std::to_string(line_no) + " is not UTF-8",
                  {{"line", std::to_string(line_no)}});
    }
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t");
    list.insert(std::string_view(line).substr(first, last - first + 1));
  }
  return list;
}

StopwordList load_stoplist(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::kFileUnreadable, "cannot read stoplist " + path.string());
  }
  return parse_stoplist(in);
}

void MergeLexicon::add(std::string_view surface) {
  std::u32string folded = text::decode_utf8(text::nfc_fold(surface));
  if (folded.empty()) return;
  max_len_ = std::max(max_len_, folded.size());
  forms_.insert(std::move(folded));
}

std::size_t MergeLexicon::longest_match(std::u32string_view run, std::size_t pos) const {
  const std::size_t limit = std::min(max_len_, run.size() - pos);
  for (std::size_t len = limit; len >= 2; --len) {
    if (forms_.find(run.substr(pos, len)) != forms_.end()) return len;
  }
  return 0;
}

namespace {

void segment_cjk_run(std::u32string_view run, const MergeLexicon* merge,
                     std::vector<std::string>& out) {
  std::size_t pos = 0;
  while (pos < run.size()) {
    std::size_t len = merge != nullptr ? merge->longest_match(run, pos) : 0;
    if (len == 0) len = 1;
    out.push_back(text::encode_utf8(run.substr(pos, len)));
    pos += len;
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view input, Lang lang, const MergeLexicon* merge) {
  const std::u32string cps = text::decode_utf8(text::nfc_fold(input));
  std::vector<std::string> tokens;
  std::string word;
  std::u32string cjk_run;

  auto flush_word = [&] {
    if (!word.empty()) tokens.push_back(std::move(word));
    word.clear();
  };
  auto flush_cjk = [&] {
    if (!cjk_run.empty()) segment_cjk_run(cjk_run, merge, tokens);
    cjk_run.clear();
  };

  for (char32_t cp : cps) {
    switch (text::classify(cp)) {
      case text::CharClass::kWord:
        flush_cjk();
        text::append_utf8(word, cp);
        break;
      case text::CharClass::kCjk:
        if (lang == Lang::kZh) {
          flush_word();
          cjk_run.push_back(cp);
        } else {
          text::append_utf8(word, cp);
        }
        break;
      case text::CharClass::kSpace:
      case text::CharClass::kDrop:
        flush_word();
        flush_cjk();
        break;
    }
  }
  flush_word();
  flush_cjk();
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

CleanQuestion clean(const RawQuestion& raw, const StopwordList& stoplist, const MergeLexicon* merge) {
  if (text::code_point_count(raw.text) > kMaxQuestionCodePoints) {
    throw Error(Errc::kInputTooLong, "question exceeds " + std::to_string(kMaxQuestionCodePoints) +
                                         " code points");
  }
  CleanQuestion out;
  out.original = raw;
  for (auto& token : tokenize(raw.text, raw.lang, merge)) {
    if (!stoplist.contains(token)) out.tokens.push_back(std::move(token));
  }
  if (out.tokens.empty()) {
    throw Error(Errc::kEmptyInput, "question is empty after cleaning; please rephrase");
  }
  out.text = join_tokens(out.tokens);
  return out;
}

}  // namespace kbqa
