#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spectemp {

enum class ErrorKind {
  EmptySignal,
  InvalidStep,
  TooShort,
  DegenerateSignal,
  SilentSignal,
  MissingClass,
  DegenerateClass,
  DegenerateClasses,
  DegenerateGrid,
  DegenerateLabels,
  EmptyTrain,
  ClassTooSmall,
  LengthMismatch,
  ZeroMean,
  InvalidConfig,
  InvalidArgument,
  Io,
};

constexpr std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::EmptySignal: return "EmptySignal";
    case ErrorKind::InvalidStep: return "InvalidStep";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::DegenerateSignal: return "DegenerateSignal";
    case ErrorKind::SilentSignal: return "SilentSignal";
    case ErrorKind::MissingClass: return "MissingClass";
    case ErrorKind::DegenerateClass: return "DegenerateClass";
    case ErrorKind::DegenerateClasses: return "DegenerateClasses";
    case ErrorKind::DegenerateGrid: return "DegenerateGrid";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::EmptyTrain: return "EmptyTrain";
    case ErrorKind::ClassTooSmall: return "ClassTooSmall";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::ZeroMean: return "ZeroMean";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace spectemp
