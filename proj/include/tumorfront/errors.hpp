#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tumorfront {

enum class ErrorKind {
  Validation,
  ComplexRoots,
  NotEquilibrium,
  BeyondFold,
  SubspaceInvalid,
  NoRoot,
  IntegrationFailure,
  NewtonDiverged,
  WrongBranch,
  HomotopyStuck,
  EigSolverFailure,
  BranchLost,
  AdjointDegenerate,
  DivergentWeight,
  NoSignChange,
  BoundaryNotFound,
  BlowUp,
  WindowTooShort,
  Parse,
  UnknownKey,
};

std::string_view error_name(ErrorKind kind);

// Base of every failure raised by the library. Carries a machine-readable kind
// so the CLI can emit structured error records.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <ErrorKind K>
class TypedError : public Error {
 public:
  explicit TypedError(const std::string& what) : Error(K, what) {}
};

using ValidationError = TypedError<ErrorKind::Validation>;
using ComplexRoots = TypedError<ErrorKind::ComplexRoots>;
using NotEquilibrium = TypedError<ErrorKind::NotEquilibrium>;
using BeyondFold = TypedError<ErrorKind::BeyondFold>;
using SubspaceInvalid = TypedError<ErrorKind::SubspaceInvalid>;
using NoRoot = TypedError<ErrorKind::NoRoot>;
using IntegrationFailure = TypedError<ErrorKind::IntegrationFailure>;
using WrongBranch = TypedError<ErrorKind::WrongBranch>;
using EigSolverFailure = TypedError<ErrorKind::EigSolverFailure>;
using BranchLost = TypedError<ErrorKind::BranchLost>;
using AdjointDegenerate = TypedError<ErrorKind::AdjointDegenerate>;
using DivergentWeight = TypedError<ErrorKind::DivergentWeight>;
using NoSignChange = TypedError<ErrorKind::NoSignChange>;
using BoundaryNotFound = TypedError<ErrorKind::BoundaryNotFound>;
using WindowTooShort = TypedError<ErrorKind::WindowTooShort>;
using ParseError = TypedError<ErrorKind::Parse>;
using UnknownKey = TypedError<ErrorKind::UnknownKey>;

// Newton failure with the residual history of the attempt.
class NewtonDiverged : public Error {
 public:
  NewtonDiverged(const std::string& what, std::vector<double> history)
      : Error(ErrorKind::NewtonDiverged, what), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

class HomotopyStuck : public Error {
 public:
  HomotopyStuck(const std::string& what, double last_good)
      : Error(ErrorKind::HomotopyStuck, what), last_good_(last_good) {}
  double last_good() const noexcept { return last_good_; }

 private:
  double last_good_;
};

class BlowUp : public Error {
 public:
  BlowUp(const std::string& what, double time) : Error(ErrorKind::BlowUp, what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace tumorfront
