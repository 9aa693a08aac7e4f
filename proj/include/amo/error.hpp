#pragma once

#include <stdexcept>
#include <string>

namespace amo {

// Precondition violated by the caller.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure could not deliver a meaningful answer (e.g. an exact
// eigenvalue hit, a truncation too short for the requested resolution).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameters fall outside the hypotheses an experiment relies on.
class RegimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

}  // namespace amo
