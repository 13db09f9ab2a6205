#pragma once

#include <stdexcept>
#include <string>

namespace rfc {

/// Malformed or inconsistent input data (CSV content, labels, indices).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model or pattern file that fails schema or invariant checks.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rfc
