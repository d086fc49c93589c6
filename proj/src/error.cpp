#include "kbqa/error.hpp"

namespace kbqa {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kEmptyInput: return "EmptyInput";
    case Errc::kInputTooLong: return "InputTooLong";
    case Errc::kFileUnreadable: return "FileUnreadable";
    case Errc::kMalformedLine: return "MalformedLine";
    case Errc::kUnknownFormat: return "UnknownFormat";
    case Errc::kProviderUnavailable: return "ProviderUnavailable";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kUnresolvedIntent: return "UnresolvedIntent";
    case Errc::kInvalidTriple: return "InvalidTriple";
    case Errc::kParseError: return "ParseError";
    case Errc::kUnboundVariable: return "UnboundVariable";
    case Errc::kArityMismatch: return "ArityMismatch";
    case Errc::kArityDeclarationMismatch: return "ArityDeclarationMismatch";
    case Errc::kNoTemplateForIntent: return "NoTemplateForIntent";
    case Errc::kWrongState: return "WrongState";
    case Errc::kInvalidLabel: return "InvalidLabel";
    case Errc::kUnknownSession: return "UnknownSession";
    case Errc::kDatasetInvalid: return "DatasetInvalid";
    case Errc::kConfigError: return "ConfigError";
    case Errc::kInternal: return "Internal";
  }
  return "Internal";
}

namespace {

std::string describe(std::size_t line, std::size_t column, const std::string& expected,
                     const std::string& found) {
  return "parse error at " + std::to_string(line) + ":" + std::to_string(column) + ": expected " +
         expected + ", found " + found;
}

}  // namespace

ParseError::ParseError(std::size_t line, std::size_t column, std::string expected, std::string found)
    : Error(Errc::kParseError, describe(line, column, expected, found),
            {{"line", std::to_string(line)},
             {"column", std::to_string(column)},
             {"expected", expected},
             {"found", found}}),
      line_(line),
      column_(column),
      expected_(std::move(expected)) {}

}  // namespace kbqa
