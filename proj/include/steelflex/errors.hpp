#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace steelflex {

/// Error categories. Each maps to a distinct CLI exit code.
enum class ErrorKind {
  invalid_argument,
  schema,
  io,
  infeasible_bounds,
  singular_coefficient,
  empty_region,
  storage_bounds,
  simultaneous_charge_discharge,
  silo_overflow,
  silo_underflow,
  infeasible_order,
  pacing_infeasible,
  capacity_violation,
  solver_failure,
  decode_mismatch,
  order_shortfall,
  degenerate_kernel,
  length_mismatch,
  missing_unit,
  configuration,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::schema: return "schema";
    case ErrorKind::io: return "io";
    case ErrorKind::infeasible_bounds: return "infeasible_bounds";
    case ErrorKind::singular_coefficient: return "singular_coefficient";
    case ErrorKind::empty_region: return "empty_region";
    case ErrorKind::storage_bounds: return "storage_bounds";
    case ErrorKind::simultaneous_charge_discharge: return "simultaneous_charge_discharge";
    case ErrorKind::silo_overflow: return "silo_overflow";
    case ErrorKind::silo_underflow: return "silo_underflow";
    case ErrorKind::infeasible_order: return "infeasible_order";
    case ErrorKind::pacing_infeasible: return "pacing_infeasible";
    case ErrorKind::capacity_violation: return "capacity_violation";
    case ErrorKind::solver_failure: return "solver_failure";
    case ErrorKind::decode_mismatch: return "decode_mismatch";
    case ErrorKind::order_shortfall: return "order_shortfall";
    case ErrorKind::degenerate_kernel: return "degenerate_kernel";
    case ErrorKind::length_mismatch: return "length_mismatch";
    case ErrorKind::missing_unit: return "missing_unit";
    case ErrorKind::configuration: return "configuration";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace steelflex
