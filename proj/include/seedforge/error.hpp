#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seedforge {

enum class ErrorKind {
  parameter,   // invalid numeric parameter or config value
  ingestion,   // unreadable or malformed input data
  dimension,   // shape mismatch between operands
  degenerate,  // input carries no usable information (constant image, ...)
  seeding,     // a stage produced no usable seeds
  solver,      // numerical solver failed
  parse,       // pipeline string or flag could not be parsed
  io,          // filesystem failure
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::ingestion: return "ingestion";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::seeding: return "seeding";
    case ErrorKind::solver: return "solver";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Library-wide exception. `stage` names the pipeline stage that raised it
/// ("preprocess", "seeding", "weighting", "morphology", "merge",
/// "segmentation") or is empty outside a pipeline run.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string stage = {})
      : std::runtime_error(message), kind_(kind), stage_(std::move(stage)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }

  Error with_stage(std::string stage) const {
    return Error(kind_, what(), std::move(stage));
  }

 private:
  ErrorKind kind_;
  std::string stage_;
};

/// Thrown by the CG solver; carries the residual reached when it gave up.
class SolverError : public Error {
 public:
  SolverError(const std::string& message, double residual, std::size_t iterations)
      : Error(ErrorKind::solver, message, "segmentation"),
        residual_(residual),
        iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

}  // namespace seedforge
