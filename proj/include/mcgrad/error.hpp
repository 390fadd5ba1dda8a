#pragma once

#include <stdexcept>
#include <string>

namespace mcgrad {

/// Invalid user-supplied configuration: model strings, condition constants,
/// config files. The CLI maps this to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine was handed parameters outside its domain.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace mcgrad
