#include "seqmark/error.hpp"

namespace seqmark {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::shape_mismatch: return "shape mismatch";
    case ErrorCode::axis_out_of_range: return "axis out of range";
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::out_of_range: return "out of range";
    case ErrorCode::non_uniform_step: return "non-uniform depth step";
    case ErrorCode::missing_column: return "missing column";
    case ErrorCode::empty_file: return "empty file";
    case ErrorCode::non_numeric_cell: return "non-numeric cell";
    case ErrorCode::duplicate_pick: return "duplicate pick";
    case ErrorCode::unparsable_depth: return "unparsable depth";
    case ErrorCode::version_mismatch: return "version mismatch";
    case ErrorCode::truncated_file: return "truncated file";
    case ErrorCode::corrupt_file: return "corrupt file";
    case ErrorCode::config_error: return "config error";
    case ErrorCode::undefined_precision: return "undefined precision";
    case ErrorCode::missing_truth: return "missing truth";
    case ErrorCode::io_failure: return "io failure";
    case ErrorCode::too_few_wells: return "too few wells";
    case ErrorCode::empty_split: return "empty split";
    case ErrorCode::channel_mismatch: return "channel mismatch";
  }
  return "unknown";
}

}  // namespace seqmark
