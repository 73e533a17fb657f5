#pragma once

#include <stdexcept>
#include <string>

namespace aste {

// Shapes of two operands disagree.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text; the message carries the source location.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed input whose content violates a data invariant
// (overlapping spans, out-of-range labels, over-length sentences).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse: consumed graph, bad config key, misaligned inputs.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A NaN or Inf was produced.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint does not match the expected format or configuration.
class VersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Broken internal contract, e.g. a trainable parameter without a gradient.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace aste
