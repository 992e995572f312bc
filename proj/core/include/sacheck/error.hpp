#pragma once

#include <stdexcept>
#include <string>

namespace sacheck {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of a function (e.g. u on the unit square boundary).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A model parameter is invalid (e.g. a non-positive Clayton theta).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A statistical procedure cannot proceed on the given data (bins too small, singular system, ...).
/// The optional stage label identifies where in a pipeline the failure happened.
class ProcedureError : public Error {
 public:
  explicit ProcedureError(const std::string& what, std::string stage = {})
      : Error(stage.empty() ? what : stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// File-system or parse failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sacheck
