#pragma once

#include <cstddef>
#include <vector>

#include "textclf/corpus.hpp"

namespace textclf {

// Slanted triangular learning rate: linear warmup from peak/ratio up to peak
// at step cut = floor(cut_frac * total_steps), then linear decay back down.
struct StlrSchedule {
  double peak_lr = 4e-5;
  size_t total_steps = 0;
  double cut_frac = 0.1;
  double ratio = 32.0;
};

double stlr_lr(const StlrSchedule& schedule, size_t step);

struct DiscriminativePlan {
  double last_layer_lr = 4e-5;
  size_t n_groups = 1;
  double decay_factor = 2.6;
};

// Index 0 = earliest layer group; each step toward the input divides the
// rate by decay_factor.
std::vector<double> discriminative_lrs(const DiscriminativePlan& plan);

struct UnfreezePlan {
  size_t n_groups = 1;  // groups below the classifier head
  size_t epochs_per_stage = 1;
};

// Mask over n_groups + 1 layer groups, head last. Stage 0 trains the head
// alone; each later stage unfreezes one more group from the top down.
std::vector<bool> unfreeze_mask(const UnfreezePlan& plan, size_t stage);

struct FinetunePlan {
  StlrSchedule stlr;
  DiscriminativePlan discriminative;
  UnfreezePlan unfreeze;
  size_t batch_size = 16;
};

struct FinetuneLog {
  std::vector<double> epoch_accuracy;
  std::vector<std::vector<double>> lr_trace;  // per step: effective lr per group
};

size_t finetune_total_steps(const FinetunePlan& plan, size_t n_docs);

struct TransformerModel;

// Runs unfreeze stages 0..n_groups in order, epochs_per_stage epochs each,
// with SGD momentum 0.9 and per-group rate stlr_lr(step) * group factor.
// max_len 0 means the model's max_positions.
TransformerModel finetune(TransformerModel model, const LabeledCorpus& train,
                          const FinetunePlan& plan, FinetuneLog* log = nullptr,
                          size_t max_len = 0);

// Single stage, exposed so freezing behavior can be exercised in isolation.
// step_offset positions the stage inside the STLR schedule. Momentum starts
// fresh at every stage boundary since the trainable set changes there.
TransformerModel finetune_stage(TransformerModel model, const LabeledCorpus& train,
                                const FinetunePlan& plan, size_t stage, size_t step_offset,
                                FinetuneLog* log = nullptr, size_t max_len = 0);

}  // namespace textclf
