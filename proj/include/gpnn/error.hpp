#pragma once

#include <stdexcept>
#include <string>

namespace gpnn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range input text (edge lists, feature files, configs).
class ParseError : public Error {
public:
  using Error::Error;
};

} // namespace gpnn
