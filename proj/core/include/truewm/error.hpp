#pragma once

#include <stdexcept>
#include <string>

namespace truewm {

/// Caller broke a documented precondition (shape, range, length).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

/// Malformed input file or text.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Well-formed input that uses a codec or feature we do not handle.
class UnsupportedFormat : public std::runtime_error {
 public:
  explicit UnsupportedFormat(const std::string& what) : std::runtime_error(what) {}
};

/// Bad configuration (empty corpus, inconsistent bundle, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Training produced a NaN/Inf somewhere in the graph.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

#define TRUEWM_REQUIRE(cond, msg)                                   \
  do {                                                              \
    if (!(cond)) throw ::truewm::ContractViolation(std::string(msg)); \
  } while (0)

}  // namespace truewm
