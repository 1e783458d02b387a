#ifndef MRPLAB_ERROR_HPP
#define MRPLAB_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mrplab {

enum class ErrorKind {
  Domain,
  Configuration,
  InvalidInterarrival,
  UnsupportedOperation,
  UnsupportedModel,
  Accuracy,
  OutOfHorizon,
  Ingestion,
  InsufficientData,
  DegenerateTest,
  Capacity,
  Schema,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::InvalidInterarrival: return "invalid-interarrival";
    case ErrorKind::UnsupportedOperation: return "unsupported-operation";
    case ErrorKind::UnsupportedModel: return "unsupported-model";
    case ErrorKind::Accuracy: return "accuracy";
    case ErrorKind::OutOfHorizon: return "out-of-horizon";
    case ErrorKind::Ingestion: return "ingestion";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::DegenerateTest: return "degenerate-test";
    case ErrorKind::Capacity: return "capacity";
    case ErrorKind::Schema: return "schema";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised when adaptive quadrature runs out of subdivisions. Carries the best
// estimate so callers can still report it.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double estimate, double error_estimate)
      : Error(ErrorKind::Accuracy, what),
        estimate_(estimate),
        error_estimate_(error_estimate) {}

  double estimate() const noexcept { return estimate_; }
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double estimate_;
  double error_estimate_;
};

}  // namespace mrplab

#endif  // MRPLAB_ERROR_HPP
