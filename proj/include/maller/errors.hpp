#pragma once

#include <stdexcept>
#include <string>

namespace maller {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Dataset cannot be processed (n too small, zero spread, all points identical).
class DegenerateDataset : public Error {
public:
  explicit DegenerateDataset(const std::string& msg) : Error(msg) {}
};

/// A local fit was requested with an empty neighbor set.
class NoDataError : public Error {
public:
  explicit NoDataError(const std::string& msg) : Error(msg) {}
};

/// Local PCA found fewer than d+1 true neighbors; carries the count so the
/// caller can decide whether to escalate the bandwidth.
class InsufficientNeighbors : public Error {
public:
  InsufficientNeighbors(const std::string& msg, int found, int required)
      : Error(msg), found(found), required(required) {}
  int found;
  int required;
};

/// Weighted normal equations stayed numerically singular after the ridge and
/// bandwidth-escalation fallbacks.
class SingularFit : public Error {
public:
  explicit SingularFit(const std::string& msg) : Error(msg) {}
};

/// CSV or config parse failure; message names the offending row/column.
class ParseError : public Error {
public:
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

/// Eigensolver failed to converge.
class EigenSolverError : public Error {
public:
  explicit EigenSolverError(const std::string& msg) : Error(msg) {}
};

}  // namespace maller
