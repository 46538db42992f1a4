#pragma once

#include <stdexcept>
#include <string>

namespace signest {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
  public:
    using Error::Error;
};

/// Vector/matrix dimensions do not match.
class DimensionMismatch : public Error {
  public:
    using Error::Error;
};

/// A symmetric factorization hit a nonpositive pivot.
class NotPositiveDefinite : public Error {
  public:
    using Error::Error;
};

/// An iterative routine exhausted its iteration cap.
class ConvergenceFailure : public Error {
  public:
    using Error::Error;
};

/// A v-space point violates the feasibility ball of the back-transform.
class InfeasibleV : public Error {
  public:
    using Error::Error;
};

/// The sensing matrix is not of full row rank.
class RankDeficient : public Error {
  public:
    using Error::Error;
};

/// A norm-limit radius is nonpositive.
class InvalidRadius : public Error {
  public:
    using Error::Error;
};

/// The Fisher information matrix is numerically singular.
class SingularFim : public Error {
  public:
    using Error::Error;
};

/// A configuration file is missing keys or violates an invariant.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// A file could not be read or written.
class IoError : public Error {
  public:
    using Error::Error;
};

}  // namespace signest
