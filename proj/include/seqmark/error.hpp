#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seqmark {

enum class ErrorCode {
  shape_mismatch,
  axis_out_of_range,
  invalid_argument,
  out_of_range,
  non_uniform_step,
  missing_column,
  empty_file,
  non_numeric_cell,
  duplicate_pick,
  unparsable_depth,
  version_mismatch,
  truncated_file,
  corrupt_file,
  config_error,
  undefined_precision,
  missing_truth,
  io_failure,
  too_few_wells,
  empty_split,
  channel_mismatch,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace seqmark
