#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trusthresh {

// Base class of every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- dataset construction -------------------------------------------------

struct DimensionMismatch : Error {
  using Error::Error;
};

struct ScoreOutOfRange : Error {
  ScoreOutOfRange(std::size_t sample, std::size_t subtask, double value)
      : Error("score out of [0,1] at sample " + std::to_string(sample) +
              ", subtask " + std::to_string(subtask) + ": " + std::to_string(value)),
        sample(sample), subtask(subtask), value(value) {}
  std::size_t sample;
  std::size_t subtask;
  double value;
};

struct DuplicateSubtaskName : Error {
  explicit DuplicateSubtaskName(const std::string& name)
      : Error("duplicate subtask name: " + name), name(name) {}
  std::string name;
};

struct InvalidSubtaskName : Error {
  explicit InvalidSubtaskName(const std::string& name)
      : Error("invalid subtask name: '" + name + "'"), name(name) {}
  std::string name;
};

struct InvalidLabel : Error {
  InvalidLabel(std::size_t sample, double value)
      : Error("label at sample " + std::to_string(sample) +
              " is not 0 or 1: " + std::to_string(value)),
        sample(sample) {}
  std::size_t sample;
};

struct EmptyDataset : Error {
  using Error::Error;
};

// Recall-at-precision fitting needs at least one positive and one negative
// label; anything else makes the objective vacuous.
struct DegenerateLabels : Error {
  using Error::Error;
};

// ---- expression parsing ---------------------------------------------------

struct SyntaxError : Error {
  SyntaxError(std::size_t position, const std::string& message)
      : Error("syntax error at position " + std::to_string(position) + ": " + message),
        position(position) {}
  std::size_t position;
};

struct UnknownSubtask : Error {
  UnknownSubtask(std::size_t position, const std::string& name)
      : Error("unknown subtask '" + name + "' at position " + std::to_string(position)),
        position(position), name(name) {}
  std::size_t position;
  std::string name;
};

struct EmptyExpression : Error {
  using Error::Error;
};

// ---- numerics ---------------------------------------------------------------

struct LengthMismatch : Error {
  using Error::Error;
};

struct WidthOutOfRange : Error {
  explicit WidthOutOfRange(double w)
      : Error("width must lie in (0,1), got " + std::to_string(w)), width(w) {}
  double width;
};

struct EmptyMap : Error {
  using Error::Error;
};

struct NonFiniteGradient : Error {
  using Error::Error;
};

struct TooManySubtasks : Error {
  using Error::Error;
};

// ---- file ingestion ---------------------------------------------------------

struct ParseError : Error {
  ParseError(std::size_t line, std::size_t column, const std::string& message)
      : Error("parse error at line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + message),
        line(line), column(column) {}
  std::size_t line;
  std::size_t column;
};

struct MissingLabelColumn : Error {
  explicit MissingLabelColumn(std::size_t line, const std::string& message)
      : Error("line " + std::to_string(line) + ": " + message), line(line) {}
  std::size_t line;
};

struct InconsistentKeys : Error {
  InconsistentKeys(std::size_t line, const std::string& message)
      : Error("line " + std::to_string(line) + ": " + message), line(line) {}
  std::size_t line;
};

struct NonNumericScore : Error {
  NonNumericScore(std::size_t row, const std::string& column, const std::string& text)
      : Error("non-numeric score at row " + std::to_string(row) + ", column '" +
              column + "': \"" + text + "\""),
        row(row), column(column) {}
  std::size_t row;
  std::string column;
};

// CLI / run configuration problems (exit code 2 territory).
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace trusthresh
