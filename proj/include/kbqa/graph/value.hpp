#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace kbqa::graph {

enum class ValueKind { kNull, kNumber, kString, kEntity };

/// Object of a triple or a bound query value. Total order: kind first
/// (null < number < string < entity), then numeric or byte-wise comparison.
class Value {
 public:
  Value() = default;

  static Value null() { return Value(); }
  /// Throws InvalidTriple on NaN or infinity.
  static Value number(double v);
  static Value string(std::string s) { return Value(ValueKind::kString, std::move(s), 0.0); }
  static Value entity(std::string id) { return Value(ValueKind::kEntity, std::move(id), 0.0); }

  ValueKind kind() const noexcept { return kind_; }
  bool is_null() const noexcept { return kind_ == ValueKind::kNull; }
  bool is_number() const noexcept { return kind_ == ValueKind::kNumber; }
  bool is_entity() const noexcept { return kind_ == ValueKind::kEntity; }
  /// Entity id or string literal; empty for numbers and null.
  const std::string& text() const noexcept { return text_; }
  double as_number() const noexcept { return number_; }

  /// Plain rendering: numbers in shortest round-trip form, text as-is,
  /// null as "null".
  std::string display() const;

  friend bool operator==(const Value& a, const Value& b) noexcept;
  friend std::strong_ordering operator<=>(const Value& a, const Value& b) noexcept;

 private:
  Value(ValueKind kind, std::string text, double number)
      : kind_(kind), text_(std::move(text)), number_(number) {}

  ValueKind kind_ = ValueKind::kNull;
  std::string text_;
  double number_ = 0.0;
};

std::string format_number(double v);
std::string_view kind_name(ValueKind kind);

struct Triple {
  std::string subject;
  std::string predicate;
  Value object;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

}  // namespace kbqa::graph
