#pragma once

#include <stdexcept>
#include <string>

namespace potflow {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the domain where a closure or field is evaluated.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Inverse function requested outside the range of the forward function
/// (vacuum or cavitation approach).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Pressure law violates p' > 0 or 2p' + rho p'' > 0.
class LawError : public Error {
 public:
  using Error::Error;
};

/// Force potential values outside the band allowed by the gas law.
class AdmissibilityError : public Error {
 public:
  enum class Side { Lower, Upper };
  AdmissibilityError(Side side, const std::string& what)
      : Error(what), side_(side) {}
  Side side() const { return side_; }

 private:
  Side side_;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The cut-off coefficient tensor lost positive definiteness.
class EllipticityError : public Error {
 public:
  using Error::Error;
};

/// Conjugate gradient met a direction of nonpositive curvature.
class CurvatureError : public Error {
 public:
  using Error::Error;
};

class ScheduleError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace potflow
