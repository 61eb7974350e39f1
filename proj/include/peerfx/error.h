#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace peerfx {

// Base of every error the toolkit raises. kind() is a stable name the CLI
// prints and tests match on.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define PEERFX_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

PEERFX_DEFINE_ERROR(NotFound);
PEERFX_DEFINE_ERROR(InvalidParameter);
PEERFX_DEFINE_ERROR(Diverged);
PEERFX_DEFINE_ERROR(InsufficientPool);
PEERFX_DEFINE_ERROR(InsufficientClusters);
PEERFX_DEFINE_ERROR(GenerationFailed);
PEERFX_DEFINE_ERROR(ConfigError);
PEERFX_DEFINE_ERROR(IoError);
PEERFX_DEFINE_ERROR(EmptyPanel);

#undef PEERFX_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error("ParseError", source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class RankDeficient : public Error {
 public:
  explicit RankDeficient(std::vector<std::string> columns)
      : Error("RankDeficient", describe(columns)), columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const noexcept { return columns_; }

 private:
  static std::string describe(const std::vector<std::string>& columns) {
    std::string out = "collinear or degenerate columns:";
    for (const auto& c : columns) out += " " + c;
    return out;
  }
  std::vector<std::string> columns_;
};

class WeakIdentification : public Error {
 public:
  WeakIdentification(double first_stage_stat, double canonical_correlation)
      : Error("WeakIdentification",
              "instruments do not identify the endogenous regressors (first-stage Wald " +
                  std::to_string(first_stage_stat) + ", min canonical correlation " +
                  std::to_string(canonical_correlation) + ")"),
        first_stage_stat_(first_stage_stat) {}

  double first_stage_stat() const noexcept { return first_stage_stat_; }

 private:
  double first_stage_stat_;
};

}  // namespace peerfx
