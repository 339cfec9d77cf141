#ifndef ENSDIV_ERROR_HPP
#define ENSDIV_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ensdiv {

enum class ErrorKind {
  invalid_dimension,
  shape,
  insufficient_neighbors,
  domain,
  parameter,
  configuration,
  numeric,
  degenerate_basis,
  infeasible,
  degenerate_trials,
  estimator_failure,
  model,
  pathological_spec,
  input,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_dimension: return "invalid-dimension";
    case ErrorKind::shape: return "shape";
    case ErrorKind::insufficient_neighbors: return "insufficient-neighbors";
    case ErrorKind::domain: return "domain";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::degenerate_basis: return "degenerate-basis";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::degenerate_trials: return "degenerate-trials";
    case ErrorKind::estimator_failure: return "estimator-failure";
    case ErrorKind::model: return "model";
    case ErrorKind::pathological_spec: return "pathological-spec";
    case ErrorKind::input: return "input";
  }
  return "unknown";
}

/// Every failure raised by the library. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ensdiv

#endif  // ENSDIV_ERROR_HPP
