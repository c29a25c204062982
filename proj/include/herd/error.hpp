#pragma once

#include <stdexcept>
#include <string>

namespace herd {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input could not be parsed (malformed JSON, bad CSV, ...).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input parsed but violates a structural invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// No pedestrian path connects two positions.
class UnreachableError : public Error {
 public:
  using Error::Error;
};

class SpawnError : public Error {
 public:
  using Error::Error;
};

/// Caller broke an operation's precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Ledger failed its health check.
class LedgerUnavailable : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

/// Pearson correlation over a constant series.
class DegenerateSeries : public Error {
 public:
  using Error::Error;
};

}  // namespace herd
