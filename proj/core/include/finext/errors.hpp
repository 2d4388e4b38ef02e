#pragma once

#include <stdexcept>
#include <string>

namespace finext {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input or violated operation precondition.
class InputError : public Error {
public:
  using Error::Error;
};

/// Scalars from different discriminant contexts were mixed.
class ContextError : public InputError {
public:
  using InputError::InputError;
};

/// A configured search or size budget was exhausted.
class BudgetError : public Error {
public:
  BudgetError(const std::string& what, long last_tried)
      : Error(what), last_tried(last_tried) {}
  long last_tried;
};

/// The instance is outside the class the implementation supports.
class UnsupportedInstanceError : public Error {
public:
  using Error::Error;
};

/// A postcondition that must hold on successful construction failed.
class InternalInvariantError : public Error {
public:
  using Error::Error;
};

}  // namespace finext
