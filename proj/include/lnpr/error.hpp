#pragma once

#include <stdexcept>
#include <string>

namespace lnpr {

/// Bad input: out-of-range arguments, invariant violations, malformed files.
/// The CLI maps it to exit status 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure could not produce a result (singular systems,
/// failed bracketing). The CLI maps it to exit status 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lnpr
