#include "textclf/error.hpp"

namespace textclf {

const char* errc_name(errc code) {
  switch (code) {
    case errc::config_invalid: return "ConfigInvalid";
    case errc::step_out_of_range: return "StepOutOfRange";
    case errc::stage_out_of_range: return "StageOutOfRange";
    case errc::missing_file: return "MissingFile";
    case errc::malformed_row: return "MalformedRow";
    case errc::empty_corpus: return "EmptyCorpus";
    case errc::empty_input: return "EmptyInput";
    case errc::unlabeled_document: return "UnlabeledDocument";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::empty_vocabulary: return "EmptyVocabulary";
    case errc::polarity_out_of_range: return "PolarityOutOfRange";
    case errc::empty_matrix: return "EmptyMatrix";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::shape_mismatch: return "ShapeMismatch";
    case errc::single_class_input: return "SingleClassInput";
    case errc::corpus_too_small: return "CorpusTooSmall";
    case errc::unknown_token: return "UnknownToken";
    case errc::version_mismatch: return "VersionMismatch";
    case errc::bad_artifact: return "BadArtifact";
    case errc::empty_training_set: return "EmptyTrainingSet";
    case errc::non_finite_activation: return "NonFiniteActivation";
    case errc::non_finite_loss: return "NonFiniteLoss";
    case errc::all_masked: return "AllMasked";
  }
  return "UnknownError";
}

int exit_code_for(errc code) {
  switch (code) {
    case errc::config_invalid:
    case errc::step_out_of_range:
    case errc::stage_out_of_range:
      return 2;
    case errc::non_finite_activation:
    case errc::non_finite_loss:
    case errc::all_masked:
      return 4;
    default:
      return 3;
  }
}

}  // namespace textclf
