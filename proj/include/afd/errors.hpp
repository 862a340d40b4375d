#pragma once

#include <stdexcept>
#include <string>

namespace afd {

/// Numerical breakdown (eigensolver non-convergence, zero-norm kernel, ...).
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed experiment configuration (unknown key, bad value, empty n list).
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem failure while reading or writing artifacts.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace afd
