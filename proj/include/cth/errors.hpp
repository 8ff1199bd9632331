#ifndef CTH_ERRORS_HPP
#define CTH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cth {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A caller violated a precondition (bad sizes, non-finite input, ...).
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// An elementary function was evaluated outside its domain. The message
/// names the offending function.
class DomainError : public Error {
public:
  using Error::Error;
};

/// The operation is not defined for this kind of input (e.g. microstate
/// weights of an analytic ensemble).
class UnsupportedOperation : public Error {
public:
  using Error::Error;
};

/// A Jacobian or metric was singular (or numerically singular) at the
/// evaluation point.
class SingularityError : public Error {
public:
  using Error::Error;
};

/// The requested averages lie outside the achievable hull; the dual
/// problem is unbounded.
class InfeasibleTarget : public Error {
public:
  using Error::Error;
};

/// An iterative solver hit its iteration limit.
class NonConvergence : public Error {
public:
  NonConvergence(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_ = 0.0;
};

/// A model or reparametrization file failed to parse or validate.
class ParseError : public Error {
public:
  using Error::Error;
};

} // namespace cth

#endif
