#pragma once

#include <stdexcept>
#include <string>

namespace psl {

/// Base class for all library errors. Maps to exit code 1 at the CLI.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid models, graphs, configs or arguments. Maps to exit code 2.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

/// Support-condition and similar domain violations.
class DomainError : public ValidationError {
 public:
  explicit DomainError(const std::string& what) : ValidationError(what) {}
};

/// Random generation could not satisfy its constraints within the retry budget.
class GenerationError : public Error {
 public:
  explicit GenerationError(const std::string& what) : Error(what) {}
};

}  // namespace psl
