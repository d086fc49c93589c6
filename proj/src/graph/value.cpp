#include "kbqa/graph/value.hpp"

#include <charconv>
#include <cmath>

#include "kbqa/error.hpp"

namespace kbqa::graph {

Value Value::number(double v) {
  if (!std::isfinite(v)) {
    throw Error(Errc::kInvalidTriple, "numeric values must be finite");
  }
  // normalize -0 so equality and ordering agree
  return Value(ValueKind::kNumber, {}, v == 0.0 ? 0.0 : v);
}

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string_view kind_name(ValueKind kind) {
  switch (kind) {
    case ValueKind::kNull: return "null";
    case ValueKind::kNumber: return "number";
    case ValueKind::kString: return "string";
    case ValueKind::kEntity: return "entity";
  }
  return "null";
}

std::string Value::display() const {
  switch (kind_) {
    case ValueKind::kNull: return "null";
    case ValueKind::kNumber: return format_number(number_);
    case ValueKind::kString:
    case ValueKind::kEntity: return text_;
  }
  return {};
}

bool operator==(const Value& a, const Value& b) noexcept {
  if (a.kind_ != b.kind_) return false;
  if (a.kind_ == ValueKind::kNumber) return a.number_ == b.number_;
  return a.text_ == b.text_;
}

std::strong_ordering operator<=>(const Value& a, const Value& b) noexcept {
  if (a.kind_ != b.kind_) return a.kind_ <=> b.kind_;
  if (a.kind_ == ValueKind::kNumber) {
    if (a.number_ < b.number_) return std::strong_ordering::less;
    if (a.number_ > b.number_) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }
  const int c = a.text_.compare(b.text_);
  return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater
                                                    : std::strong_ordering::equal;
}

}  // namespace kbqa::graph
