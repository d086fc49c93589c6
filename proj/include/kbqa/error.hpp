#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kbqa {

enum class Errc {
  kEmptyInput,
  kInputTooLong,
  kFileUnreadable,
  kMalformedLine,
  kUnknownFormat,
  kProviderUnavailable,
  kDimensionMismatch,
  kInvalidArgument,
  kUnresolvedIntent,
  kInvalidTriple,
  kParseError,
  kUnboundVariable,
  kArityMismatch,
  kArityDeclarationMismatch,
  kNoTemplateForIntent,
  kWrongState,
  kInvalidLabel,
  kUnknownSession,
  kDatasetInvalid,
  kConfigError,
  kInternal,
};

std::string_view errc_name(Errc code);

/// Base exception for every failure surfaced by the engine. `detail` carries
/// structured fields (expected/got counts, labels, positions) for API errors.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::map<std::string, std::string> detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  Errc code() const noexcept { return code_; }
  const std::map<std::string, std::string>& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::map<std::string, std::string> detail_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, std::string expected, std::string found);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string expected_;
};

}  // namespace kbqa
