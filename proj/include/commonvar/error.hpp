#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace commonvar {

enum class ErrorKind {
  InvalidInput,
  DimensionMismatch,
  NonConvergence,
  Disconnected,
  DuplicatePoints,
  DisconnectedSpectrum,
  DegenerateEigenvalue,
  MaxIterations,
  IndexOutOfRange,
  Io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::Disconnected: return "Disconnected";
    case ErrorKind::DuplicatePoints: return "DuplicatePoints";
    case ErrorKind::DisconnectedSpectrum: return "DisconnectedSpectrum";
    case ErrorKind::DegenerateEigenvalue: return "DegenerateEigenvalue";
    case ErrorKind::MaxIterations: return "MaxIterations";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable kind next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace commonvar
