#pragma once

#include <stdexcept>
#include <string>

namespace holonomy {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Requested exact rank but the input vectors were linearly dependent.
class RankDeficient : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

/// Complement of a full-space subspace does not exist.
class FullSpace : public Error {
 public:
  using Error::Error;
};

/// A projection outcome with (numerically) zero probability.
class OrthogonalOutcome : public Error {
 public:
  using Error::Error;
};

class BadIndex : public Error {
 public:
  using Error::Error;
};

/// Consecutive loop states are orthogonal, or the loop is malformed.
class DegenerateLoop : public Error {
 public:
  using Error::Error;
};

class DegeneratePolygon : public Error {
 public:
  using Error::Error;
};

class ZeroAmplitude : public Error {
 public:
  using Error::Error;
};

/// Measurement graph has no success path back to the start node.
class NonAbsorbing : public Error {
 public:
  using Error::Error;
};

/// State has weight outside the graph's start subspace.
class UnsupportedState : public Error {
 public:
  using Error::Error;
};

class IncompleteTrace : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// Measurement graph violates a structural invariant.
class InvalidGraph : public Error {
 public:
  using Error::Error;
};

}  // namespace holonomy
