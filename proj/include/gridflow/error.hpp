#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gridflow {

enum class ErrorCode {
  // case_io
  FileNotFound,
  MissingSection,
  MalformedNumber,
  RowTooShort,
  // to_graph validation
  MultipleSlack,
  NoSlack,
  DanglingReference,
  IslandDetected,
  ZeroImpedance,
  MissingGenerator,
  // numeric
  SingularPivot,
  DimensionMismatch,
  PatternMismatch,
  // misc
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Library error. `line` is set for parse errors (1-based), `index` for
/// errors tied to a node/bus/row (0-based).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<std::size_t> line = std::nullopt,
        std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(what), code_(code), line_(line), index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
  std::optional<std::size_t> index_;
};

}  // namespace gridflow
