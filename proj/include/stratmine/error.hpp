#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stratmine {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (files, configs, logs).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A formula string that does not follow the concrete syntax.
class FormulaSyntaxError : public Error {
 public:
  FormulaSyntaxError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace stratmine
