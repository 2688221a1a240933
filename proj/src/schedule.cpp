#include "textclf/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "textclf/error.hpp"
#include "textclf/transformer.hpp"

namespace textclf {

namespace {

size_t stlr_cut(const StlrSchedule& s) {
  return static_cast<size_t>(std::floor(s.cut_frac * static_cast<double>(s.total_steps)));
}

void validate_stlr(const StlrSchedule& s) {
  if (s.peak_lr <= 0.0 || s.ratio <= 1.0 || s.cut_frac <= 0.0 || s.cut_frac >= 1.0 ||
      s.total_steps == 0) {
    throw Error(errc::config_invalid, "stlr schedule parameters out of range");
  }
  if (stlr_cut(s) < 1) {
    throw Error(errc::config_invalid, "total_steps too small for cut_frac");
  }
}

}  // namespace

double stlr_lr(const StlrSchedule& schedule, size_t step) {
  validate_stlr(schedule);
  if (step > schedule.total_steps) {
    throw Error(errc::step_out_of_range, "step " + std::to_string(step) + " beyond total_steps " +
                                             std::to_string(schedule.total_steps));
  }
  const size_t cut = stlr_cut(schedule);
  const double floor_lr = schedule.peak_lr / schedule.ratio;
  double t;
  if (step <= cut) {
    t = static_cast<double>(step) / static_cast<double>(cut);
    return (1.0 - t) * floor_lr + t * schedule.peak_lr;
  }
  t = static_cast<double>(step - cut) / static_cast<double>(schedule.total_steps - cut);
  return (1.0 - t) * schedule.peak_lr + t * floor_lr;
}

std::vector<double> discriminative_lrs(const DiscriminativePlan& plan) {
  if (plan.last_layer_lr <= 0.0 || plan.n_groups == 0 || plan.decay_factor <= 1.0) {
    throw Error(errc::config_invalid, "discriminative plan parameters out of range");
  }
  std::vector<double> lrs(plan.n_groups);
  lrs.back() = plan.last_layer_lr;
  for (size_t g = plan.n_groups - 1; g-- > 0;) {
    lrs[g] = lrs[g + 1] / plan.decay_factor;
  }
  return lrs;
}

std::vector<bool> unfreeze_mask(const UnfreezePlan& plan, size_t stage) {
  if (plan.n_groups == 0 || plan.epochs_per_stage == 0) {
    throw Error(errc::config_invalid, "unfreeze plan parameters out of range");
  }
  if (stage > plan.n_groups) {
    throw Error(errc::stage_out_of_range, "stage " + std::to_string(stage) + " beyond " +
                                              std::to_string(plan.n_groups) + " groups");
  }
  std::vector<bool> mask(plan.n_groups + 1, false);
  mask[plan.n_groups] = true;  // classifier head
  for (size_t g = 0; g < plan.n_groups; ++g) {
    mask[g] = g >= plan.n_groups - stage;
  }
  return mask;
}

size_t finetune_total_steps(const FinetunePlan& plan, size_t n_docs) {
  if (plan.batch_size == 0) throw Error(errc::config_invalid, "batch_size must be positive");
  if (n_docs == 0) throw Error(errc::empty_training_set, "no documents to fine-tune on");
  const size_t batches = (n_docs + plan.batch_size - 1) / plan.batch_size;
  return (plan.unfreeze.n_groups + 1) * plan.unfreeze.epochs_per_stage * batches;
}

namespace {

struct StageSetup {
  std::vector<double> factors;  // per-group multiplier on the stlr rate
  size_t batches = 0;
};

StageSetup prepare(const TransformerModel& model, const LabeledCorpus& train,
                   const FinetunePlan& plan) {
  if (train.documents.empty()) {
    throw Error(errc::empty_training_set, "no documents to fine-tune on");
  }
  if (!train.fully_labeled()) {
    throw Error(errc::unlabeled_document, "fine-tuning needs labels on every document");
  }
  if (plan.discriminative.n_groups != model.n_groups()) {
    throw Error(errc::config_invalid, "discriminative plan group count must match the model");
  }
  if (plan.unfreeze.n_groups + 1 != model.n_groups()) {
    throw Error(errc::config_invalid, "unfreeze plan must cover every group below the head");
  }
  StageSetup setup;
  const std::vector<double> lrs = discriminative_lrs(plan.discriminative);
  setup.factors.resize(lrs.size());
  for (size_t g = 0; g < lrs.size(); ++g) {
    setup.factors[g] = lrs[g] / plan.discriminative.last_layer_lr;
  }
  setup.batches = (train.documents.size() + plan.batch_size - 1) / plan.batch_size;
  return setup;
}

BatchEncoding encode_docs(const TransformerModel& model, const LabeledCorpus& train, size_t begin,
                          size_t end, size_t max_len) {
  std::vector<std::string> texts;
  texts.reserve(end - begin);
  for (size_t d = begin; d < end; ++d) texts.push_back(train.documents[d].text);
  BatchEncoding batch = encode_min_batch(texts, model.vocab, max_len);
  for (size_t d = begin; d < end; ++d) batch.class_labels.push_back(*train.documents[d].label);
  return batch;
}

double training_accuracy(const TransformerModel& model, const LabeledCorpus& train,
                         size_t batch_size, size_t max_len) {
  size_t correct = 0;
  for (size_t begin = 0; begin < train.documents.size(); begin += batch_size) {
    const size_t end = std::min(begin + batch_size, train.documents.size());
    const BatchEncoding batch = encode_docs(model, train, begin, end, max_len);
    const std::vector<uint32_t> predicted = transformer_predict(model, batch);
    for (size_t i = 0; i < predicted.size(); ++i) {
      if (predicted[i] == *train.documents[begin + i].label) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(train.documents.size());
}

TransformerModel run_stage(TransformerModel model, const LabeledCorpus& train,
                           const FinetunePlan& plan, const StageSetup& setup, size_t stage,
                           size_t step_offset, FinetuneLog* log, size_t max_len) {
  const std::vector<bool> mask = unfreeze_mask(plan.unfreeze, stage);
  model.group_trainable.assign(mask.begin(), mask.end());

  std::vector<Mat> momentum;
  TransformerParams grads;
  size_t step = step_offset;
  for (size_t epoch = 0; epoch < plan.unfreeze.epochs_per_stage; ++epoch) {
    for (size_t begin = 0; begin < train.documents.size(); begin += plan.batch_size) {
      const size_t end = std::min(begin + plan.batch_size, train.documents.size());
      const BatchEncoding batch = encode_docs(model, train, begin, end, max_len);
      const double loss = classification_loss_and_grad(model, batch, grads);
      if (!std::isfinite(loss)) throw Error(errc::non_finite_loss, "fine-tuning loss blew up");

      const double base = stlr_lr(plan.stlr, step);
      std::vector<double> lrs(setup.factors.size());
      for (size_t g = 0; g < lrs.size(); ++g) lrs[g] = base * setup.factors[g];
      sgd_momentum_step(model, grads, momentum, lrs);
      if (log) log->lr_trace.push_back(lrs);
      ++step;
    }
    if (log) {
      log->epoch_accuracy.push_back(training_accuracy(model, train, plan.batch_size, max_len));
    }
  }
  return model;
}

}  // namespace

TransformerModel finetune_stage(TransformerModel model, const LabeledCorpus& train,
                                const FinetunePlan& plan, size_t stage, size_t step_offset,
                                FinetuneLog* log, size_t max_len) {
  if (max_len == 0) max_len = model.config.max_positions;
  const StageSetup setup = prepare(model, train, plan);
  return run_stage(std::move(model), train, plan, setup, stage, step_offset, log, max_len);
}

TransformerModel finetune(TransformerModel model, const LabeledCorpus& train,
                          const FinetunePlan& plan, FinetuneLog* log, size_t max_len) {
  if (max_len == 0) max_len = model.config.max_positions;
  const StageSetup setup = prepare(model, train, plan);
  const size_t required = finetune_total_steps(plan, train.documents.size());
  if (plan.stlr.total_steps != required) {
    throw Error(errc::config_invalid,
                "stlr total_steps must equal finetune_total_steps = " + std::to_string(required));
  }
  size_t step = 0;
  const size_t steps_per_stage = plan.unfreeze.epochs_per_stage * setup.batches;
  for (size_t stage = 0; stage <= plan.unfreeze.n_groups; ++stage) {
    model = run_stage(std::move(model), train, plan, setup, stage, step, log, max_len);
    step += steps_per_stage;
  }
  return model;
}

}  // namespace textclf
