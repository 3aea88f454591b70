#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace orpr {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad scenario / experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; message names the offending row.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Argument outside its documented domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Selection instance whose minimum attainable loss exceeds the budget.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& msg, std::int64_t min_attainable_loss,
                  std::int64_t budget)
      : Error(msg),
        min_attainable_loss(min_attainable_loss),
        budget(budget) {}
  std::int64_t min_attainable_loss;
  std::int64_t budget;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite value where a finite one is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace orpr
