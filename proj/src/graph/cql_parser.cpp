#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <set>

#include "kbqa/error.hpp"
#include "kbqa/graph/cql.hpp"

namespace kbqa::graph {

namespace {

constexpr std::array<std::string_view, 8> kReserved = {"MATCH", "RETURN", "ORDER", "BY",
                                                       "ASC",   "DESC",   "LIMIT", "COUNT"};

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

enum class Tok { kIdent, kString, kNumber, kPunct, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;  // identifier, decoded string, number source, or punct char
  double number = 0.0;
  std::size_t line = 1;
  std::size_t column = 1;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::kEnd: return "end of input";
    case Tok::kString: return "string literal";
    case Tok::kNumber: return "number " + t.text;
    case Tok::kIdent: return "'" + t.text + "'";
    case Tok::kPunct: return "'" + t.text + "'";
  }
  return "token";
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = column_;
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Tok::kIdent;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          t.text.push_back(advance());
        }
      } else if (c == '"') {
        t.kind = Tok::kString;
        t.text = lex_string(t);
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '-' && pos_ + 1 < src_.size() &&
                  std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        t.kind = Tok::kNumber;
        lex_number(t);
      } else if (std::string_view("()[]{}:,.-<>").find(c) != std::string_view::npos) {
        t.kind = Tok::kPunct;
        t.text = std::string(1, advance());
      } else {
        throw ParseError(t.line, t.column, "a token", "unexpected character '" + std::string(1, c) + "'");
      }
      out.push_back(std::move(t));
    }
  }

 private:
  char advance() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      column_ = 1;
    } else if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) {
      ++column_;
    }
    return c;
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance();
  }

  std::string lex_string(const Token& start) {
    advance();  // opening quote
    std::string out;
    while (true) {
      if (pos_ >= src_.size()) {
        throw ParseError(start.line, start.column, "closing '\"'", "unterminated string literal");
      }
      const char c = advance();
      if (c == '"') return out;
      if (c == '\\') {
        if (pos_ >= src_.size()) {
          throw ParseError(line_, column_, "escape character", "end of input");
        }
        const char e = advance();
        switch (e) {
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          default:
            throw ParseError(line_, column_ - 1, "one of \\\" \\\\ \\n \\t",
                             "'\\" + std::string(1, e) + "'");
        }
        continue;
      }
      out.push_back(c);
    }
  }

  void lex_number(Token& t) {
    const std::size_t begin = pos_;
    if (src_[pos_] == '-') advance();
    auto digits = [&] {
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    };
    digits();
    if (pos_ + 1 < src_.size() && src_[pos_] == '.' &&
        std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
      advance();
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
        while (pos_ < look) advance();
        digits();
      }
    }
    t.text = std::string(src_.substr(begin, pos_ - begin));
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size()) {
      throw ParseError(t.line, t.column, "a finite number", "'" + t.text + "'");
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

struct ItemSite {
  ReturnItem item;
  std::size_t line;
  std::size_t column;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  CqlQuery parse() {
    CqlQuery q;
    expect_keyword("MATCH");
    q.patterns.push_back(pattern());
    while (accept_punct(',')) q.patterns.push_back(pattern());
    expect_keyword("RETURN");
    std::vector<ItemSite> sites;
    sites.push_back(item());
    while (accept_punct(',')) sites.push_back(item());
    for (const auto& s : sites) q.items.push_back(s.item);

    std::optional<ItemSite> order_site;
    if (peek_keyword("ORDER")) {
      next();
      expect_keyword("BY");
      order_site = item();
      OrderBy ob{order_site->item, false};
      if (peek_keyword("ASC")) {
        next();
      } else if (peek_keyword("DESC")) {
        next();
        ob.descending = true;
      }
      q.order_by = ob;
    }
    if (peek_keyword("LIMIT")) {
      next();
      const Token& t = peek();
      if (t.kind != Tok::kNumber || t.text.find_first_not_of("0123456789") != std::string::npos ||
          t.number < 1 || t.number > 9.0e15) {
        fail("a positive integer");
      }
      q.limit = static_cast<std::uint64_t>(t.number);
      next();
    }
    if (peek().kind != Tok::kEnd) fail(q.limit ? "end of input" : "'ORDER BY', 'LIMIT', ',' or end of input");
    validate(q, sites, order_site);
    return q;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_ == toks_.size() - 1 ? pos_ : pos_++]; }

  [[noreturn]] void fail(const std::string& expected) const {
    const Token& t = peek();
    throw ParseError(t.line, t.column, expected, describe(t));
  }

  bool is_keyword(const Token& t, std::string_view kw) const {
    return t.kind == Tok::kIdent && upper(t.text) == kw;
  }
  bool peek_keyword(std::string_view kw) const { return is_keyword(peek(), kw); }
  void expect_keyword(std::string_view kw) {
    if (!peek_keyword(kw)) fail("'" + std::string(kw) + "'");
    next();
  }
  bool peek_punct(char c) const { return peek().kind == Tok::kPunct && peek().text[0] == c; }
  bool accept_punct(char c) {
    if (!peek_punct(c)) return false;
    next();
    return true;
  }
  void expect_punct(char c, const std::string& expected = {}) {
    if (!peek_punct(c)) fail(expected.empty() ? "'" + std::string(1, c) + "'" : expected);
    next();
  }
  bool peek_ident() const { return peek().kind == Tok::kIdent && !is_reserved_word(peek().text); }
  std::string expect_ident(const std::string& what) {
    if (!peek_ident()) fail(what);
    return next().text;
  }

  PathPattern pattern() {
    PathPattern p;
    p.start = node();
    while (peek_punct('-') || peek_punct('<')) {
      EdgeStep step;
      if (accept_punct('<')) {
        expect_punct('-');
        expect_punct('[');
        step.relation = relation();
        expect_punct(']');
        expect_punct('-');
        step.direction = Direction::kIn;
      } else {
        expect_punct('-');
        expect_punct('[');
        step.relation = relation();
        expect_punct(']');
        expect_punct('-');
        expect_punct('>');
        step.direction = Direction::kOut;
      }
      step.node = node();
      p.steps.push_back(std::move(step));
    }
    return p;
  }

  std::optional<std::string> relation() {
    if (!accept_punct(':')) {
      if (!peek_punct(']')) fail("':' or ']'");
      return std::nullopt;
    }
    return expect_ident("relation name");
  }

  NodePattern node() {
    NodePattern n;
    expect_punct('(', "'('");
    if (peek_ident()) n.variable = next().text;
    if (accept_punct(':')) n.label = expect_ident("label name");
    if (accept_punct('{')) {
      do {
        PropConstraint pc;
        pc.key = expect_ident("property name");
        expect_punct(':');
        pc.literal = literal();
        n.props.push_back(std::move(pc));
      } while (accept_punct(','));
      expect_punct('}', "',' or '}'");
    }
    if (!peek_punct(')')) {
      std::string expected = "')'";
      if (!n.label && n.props.empty()) expected = n.variable ? "':', '{' or ')'" : "identifier, ':', '{' or ')'";
      else if (n.props.empty()) expected = "'{' or ')'";
      fail(expected);
    }
    next();
    return n;
  }

  Value literal() {
    const Token& t = peek();
    if (t.kind == Tok::kString) {
      next();
      return Value::string(t.text);
    }
    if (t.kind == Tok::kNumber) {
      next();
      return Value::number(t.number);
    }
    fail("a string or number literal");
  }

  ItemSite item() {
    ItemSite site{{}, peek().line, peek().column};
    if (peek_keyword("COUNT")) {
      next();
      expect_punct('(');
      site.item.kind = ReturnItem::Kind::kCount;
      site.item.variable = expect_ident("variable name");
      expect_punct(')');
      return site;
    }
    site.item.variable = expect_ident("return item");
    if (accept_punct('.')) {
      site.item.kind = ReturnItem::Kind::kProperty;
      site.item.property = expect_ident("property name");
    }
    return site;
  }

  static void collect(const NodePattern& n, std::set<std::string>& vars) {
    if (n.variable) vars.insert(*n.variable);
  }

  static void validate(const CqlQuery& q, const std::vector<ItemSite>& sites,
                       const std::optional<ItemSite>& order_site) {
    std::set<std::string> vars;
    for (const auto& p : q.patterns) {
      collect(p.start, vars);
      for (const auto& s : p.steps) collect(s.node, vars);
    }
    int counts = 0;
    for (const auto& s : sites) {
      if (!vars.count(s.item.variable)) {
        throw ParseError(s.line, s.column, "a variable bound in MATCH",
                         "unbound variable '" + s.item.variable + "'");
      }
      if (s.item.kind == ReturnItem::Kind::kCount && ++counts > 1) {
        throw ParseError(s.line, s.column, "at most one COUNT item", "second COUNT");
      }
    }
    if (order_site) {
      const bool listed = std::any_of(q.items.begin(), q.items.end(),
                                      [&](const ReturnItem& it) { return it == order_site->item; });
      if (!listed) {
        throw ParseError(order_site->line, order_site->column, "an item listed in RETURN",
                         "ORDER BY " + column_name(order_site->item));
      }
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

bool is_reserved_word(std::string_view word) {
  const std::string u = upper(word);
  return std::find(kReserved.begin(), kReserved.end(), u) != kReserved.end();
}

std::string column_name(const ReturnItem& item) {
  switch (item.kind) {
    case ReturnItem::Kind::kVariable: return item.variable;
    case ReturnItem::Kind::kProperty: return item.variable + "." + item.property;
    case ReturnItem::Kind::kCount: return "COUNT(" + item.variable + ")";
  }
  return item.variable;
}

CqlQuery parse_cql(std::string_view text) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw ParseError(1, 1, "'MATCH'", "empty query");
  }
  return Parser(Lexer(text).run()).parse();
}

}  // namespace kbqa::graph
