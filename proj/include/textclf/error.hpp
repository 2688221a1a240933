#pragma once

#include <stdexcept>
#include <string>

namespace textclf {

// Stable error codes. Categories map onto the CLI exit codes:
// config -> 2, data -> 3, numeric -> 4.
enum class errc {
  // config
  config_invalid,
  step_out_of_range,
  stage_out_of_range,
  // data
  missing_file,
  malformed_row,
  empty_corpus,
  empty_input,
  unlabeled_document,
  length_mismatch,
  empty_vocabulary,
  polarity_out_of_range,
  empty_matrix,
  dimension_mismatch,
  shape_mismatch,
  single_class_input,
  corpus_too_small,
  unknown_token,
  version_mismatch,
  bad_artifact,
  empty_training_set,
  // numeric
  non_finite_activation,
  non_finite_loss,
  all_masked
};

const char* errc_name(errc code);

// 2 = config error, 3 = data error, 4 = numeric failure.
int exit_code_for(errc code);

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  errc code() const { return code_; }
  int exit_code() const { return exit_code_for(code_); }

 private:
  errc code_;
};

}  // namespace textclf
