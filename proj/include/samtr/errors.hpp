#pragma once

#include <stdexcept>
#include <string>

namespace samtr {

// Error taxonomy shared across the library.  Each condition maps 1:1 onto a
// status code at the C boundary (see samtr.h); core code throws, the C layer
// catches and translates.
enum class ErrorCode {
  invalid_argument,
  unknown_spec,
  index_out_of_range,
  budget_exhausted,
  calibration_failure,
  degenerate_geometry,
  singular_system,
  invalid_batch,
  empty_advice,
  missing_reward,
  surrogate_unavailable,
  parse_error,
  io_error,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct BudgetExhausted : Error {
  explicit BudgetExhausted(const std::string& what)
      : Error(ErrorCode::budget_exhausted, what) {}
};

struct CalibrationFailure : Error {
  explicit CalibrationFailure(const std::string& what)
      : Error(ErrorCode::calibration_failure, what) {}
};

struct DegenerateGeometry : Error {
  explicit DegenerateGeometry(const std::string& what)
      : Error(ErrorCode::degenerate_geometry, what) {}
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace samtr
