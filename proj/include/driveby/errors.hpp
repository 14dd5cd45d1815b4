#pragma once

#include <stdexcept>
#include <string>

namespace driveby {

// Base of every error the library throws. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Missing or malformed column in a tabular input.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Inputs that parse but are inconsistent (unknown ids, bad rows, shape mismatch).
class DataError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Exhaustive search refused because the subset count exceeds its budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

}  // namespace driveby
