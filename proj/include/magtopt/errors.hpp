#pragma once

#include <stdexcept>
#include <string>

namespace magtopt {

/// Invalid user input: config keys, curve parameters, mesh specs.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical solve that did not converge or hit a singular system.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system and parse failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace magtopt
