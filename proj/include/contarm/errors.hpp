#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace contarm {

/// Base class for every contract violation raised by the library.
/// The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define CONTARM_DEFINE_ERROR(Name)                                     \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  };

CONTARM_DEFINE_ERROR(InvalidArgument)
CONTARM_DEFINE_ERROR(ResidualTooLarge)
CONTARM_DEFINE_ERROR(RankDeficient)
CONTARM_DEFINE_ERROR(NearStraightConfiguration)
CONTARM_DEFINE_ERROR(SingularStiffness)
CONTARM_DEFINE_ERROR(NonOrthonormal)
CONTARM_DEFINE_ERROR(EmptyLog)
CONTARM_DEFINE_ERROR(NonMonotonicTimestamps)
CONTARM_DEFINE_ERROR(UnsupportedVersion)

#undef CONTARM_DEFINE_ERROR

/// A log row that could not be parsed. `line()` is 1-based and counts the header.
class MalformedRow : public Error {
 public:
  MalformedRow(std::size_t line, const std::string& what)
      : Error("MalformedRow", "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace contarm
