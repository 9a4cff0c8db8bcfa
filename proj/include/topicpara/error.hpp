#pragma once

#include <stdexcept>
#include <string>

namespace topicpara {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes disagree or violate an op's geometry.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf appeared in a computed value.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed file, record, or config.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace topicpara
