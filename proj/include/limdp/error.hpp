#pragma once

#include <stdexcept>
#include <string>

namespace limdp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A state, location or action reference that does not belong to the model.
class InvalidStateError : public Error {
 public:
  using Error::Error;
};

class InvalidModelError : public Error {
 public:
  using Error::Error;
};

/// Raised instead of silently truncating when a joint enumeration would exceed
/// the configured state budget.
class EnumerationBudgetError : public Error {
 public:
  using Error::Error;
};

class GroupCapExceededError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class PolicyError : public Error {
 public:
  using Error::Error;
};

}  // namespace limdp
