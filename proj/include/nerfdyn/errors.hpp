#pragma once

#include <stdexcept>
#include <string>

namespace nerfdyn {

// Error taxonomy mirrored by CLI exit codes: usage errors are handled by the
// argument parser, DataError maps to 3, NumericalError to 4.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed inputs, missing files, inconsistent dataset contents.
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

// Shape/dimension mismatches in tensor expressions.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Non-finite values or diverging computations.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

}  // namespace nerfdyn
