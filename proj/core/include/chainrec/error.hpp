#pragma once

#include <stdexcept>
#include <string>

namespace chainrec {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input data: malformed records, broken references, bad shapes.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Bad invocation of a command or an invalid configuration value.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A model provider failed. Transport failures are retriable; contract
/// violations (bad schema, wrong dimension) are not.
class ProviderError : public Error {
 public:
  ProviderError(const std::string& what, bool retriable)
      : Error(what), retriable_(retriable) {}

  bool retriable() const noexcept { return retriable_; }

 private:
  bool retriable_;
};

}  // namespace chainrec
