#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "textclf/corpus.hpp"
#include "textclf/error.hpp"
#include "textclf/schedule.hpp"
#include "textclf/transformer.hpp"

using namespace textclf;
using testutil::expect_error;

namespace {

TransformerModel tiny_model(uint64_t seed = 7) {
  WordPieceVocab vocab;
  vocab.tokens = {"[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]",
                  "aa",    "bb",    "cc",    "dd",     "ee",    "ff"};
  for (uint32_t i = 0; i < vocab.tokens.size(); ++i) vocab.token_to_id[vocab.tokens[i]] = i;
  TransformerConfig tc;
  tc.vocab_size = vocab.size();
  tc.max_positions = 8;
  tc.n_layers = 1;
  tc.hidden_size = 8;
  tc.n_heads = 2;
  tc.n_classes = 2;
  tc.seed = seed;
  return init_transformer(tc, vocab);
}

LabeledCorpus tiny_corpus() {
  LabeledCorpus corpus;
  corpus.label_names = {"neg", "pos"};
  const std::vector<std::pair<std::string, uint32_t>> rows = {
      {"aa bb", 0}, {"cc dd", 1}, {"aa cc", 0}, {"dd ee", 1}, {"bb ff", 0}, {"ee ff", 1}};
  for (size_t i = 0; i < rows.size(); ++i) {
    corpus.documents.push_back({i, rows[i].first, rows[i].second});
  }
  return corpus;
}

FinetunePlan tiny_plan(size_t n_docs) {
  FinetunePlan plan;
  plan.batch_size = 3;
  plan.unfreeze.n_groups = 2;
  plan.unfreeze.epochs_per_stage = 1;
  plan.discriminative.n_groups = 3;
  plan.discriminative.last_layer_lr = 0.02;
  plan.stlr.peak_lr = 0.02;
  plan.stlr.cut_frac = 0.34;
  plan.stlr.total_steps = 0;
  plan.stlr.total_steps = finetune_total_steps(plan, n_docs);
  return plan;
}

// Collects the parameter matrices of one layer group in flat() order.
std::vector<Mat> group_params(const TransformerModel& model, size_t group) {
  std::vector<Mat> out;
  const std::vector<const Mat*> params = model.params.flat();
  const std::vector<size_t> groups = model.params.flat_groups();
  for (size_t i = 0; i < params.size(); ++i) {
    if (groups[i] == group) out.push_back(*params[i]);
  }
  return out;
}

bool bitwise_equal(const std::vector<Mat>& a, const std::vector<Mat>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols()) return false;
    if (!(a[i].array() == b[i].array()).all()) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("schedule") {

TEST_CASE("stlr peaks exactly at the cut and floors at the ends") {
  StlrSchedule schedule;
  schedule.peak_lr = 4e-5;
  schedule.total_steps = 100;
  schedule.cut_frac = 0.1;
  schedule.ratio = 32.0;

  CHECK(stlr_lr(schedule, 10) == 4e-5);
  CHECK(stlr_lr(schedule, 0) == 1.25e-6);
  CHECK(stlr_lr(schedule, 100) == 1.25e-6);

  std::optional<size_t> argmax;
  double best = -1.0;
  double previous = -1.0;
  for (size_t step = 0; step <= 100; ++step) {
    const double lr = stlr_lr(schedule, step);
    CHECK(lr >= 1.25e-6);
    CHECK(lr <= 4e-5);
    if (step <= 10) {
      CHECK(lr > previous);
    } else {
      CHECK(lr < previous);
    }
    previous = lr;
    if (lr > best) {
      best = lr;
      argmax = step;
    }
  }
  CHECK(argmax == 10);
  CHECK(best == 4e-5);
}

TEST_CASE("stlr rejects malformed schedules") {
  StlrSchedule schedule;
  schedule.total_steps = 100;

  expect_error(errc::step_out_of_range, [&] { stlr_lr(schedule, 101); });

  StlrSchedule tiny = schedule;
  tiny.total_steps = 5;  // floor(0.1 * 5) = 0, no warmup segment
  expect_error(errc::config_invalid, [&] { stlr_lr(tiny, 0); });

  StlrSchedule bad = schedule;
  bad.total_steps = 0;
  expect_error(errc::config_invalid, [&] { stlr_lr(bad, 0); });
  bad = schedule;
  bad.ratio = 1.0;
  expect_error(errc::config_invalid, [&] { stlr_lr(bad, 0); });
  bad = schedule;
  bad.cut_frac = 0.0;
  expect_error(errc::config_invalid, [&] { stlr_lr(bad, 0); });
  bad = schedule;
  bad.peak_lr = -1e-5;
  expect_error(errc::config_invalid, [&] { stlr_lr(bad, 0); });
}

TEST_CASE("discriminative rates decay toward the input by a fixed factor") {
  DiscriminativePlan plan;
  plan.last_layer_lr = 0.01;
  plan.n_groups = 1;
  CHECK(discriminative_lrs(plan) == std::vector<double>{0.01});

  plan.n_groups = 4;
  plan.decay_factor = 2.6;
  const std::vector<double> lrs = discriminative_lrs(plan);
  REQUIRE(lrs.size() == 4);
  CHECK(lrs.back() == 0.01);
  for (size_t g = 0; g + 1 < lrs.size(); ++g) {
    CHECK(lrs[g] < lrs[g + 1]);
    CHECK(std::fabs(lrs[g + 1] / lrs[g] - 2.6) <= 1e-12);
  }
  CHECK(*std::max_element(lrs.begin(), lrs.end()) == lrs.back());

  DiscriminativePlan bad = plan;
  bad.n_groups = 0;
  expect_error(errc::config_invalid, [&] { discriminative_lrs(bad); });
  bad = plan;
  bad.decay_factor = 1.0;
  expect_error(errc::config_invalid, [&] { discriminative_lrs(bad); });
  bad = plan;
  bad.last_layer_lr = 0.0;
  expect_error(errc::config_invalid, [&] { discriminative_lrs(bad); });
}

TEST_CASE("unfreezing opens groups from the head downward") {
  UnfreezePlan plan;
  plan.n_groups = 4;

  CHECK(unfreeze_mask(plan, 0) == std::vector<bool>{false, false, false, false, true});
  CHECK(unfreeze_mask(plan, 1) == std::vector<bool>{false, false, false, true, true});
  CHECK(unfreeze_mask(plan, 2) == std::vector<bool>{false, false, true, true, true});
  CHECK(unfreeze_mask(plan, 4) == std::vector<bool>{true, true, true, true, true});

  // Later stages only ever add groups.
  std::vector<bool> previous(plan.n_groups + 1, false);
  for (size_t stage = 0; stage <= plan.n_groups; ++stage) {
    const std::vector<bool> mask = unfreeze_mask(plan, stage);
    CHECK(mask.back());
    for (size_t g = 0; g < mask.size(); ++g) {
      if (previous[g]) CHECK(mask[g]);
    }
    previous = mask;
  }

  expect_error(errc::stage_out_of_range, [&] { unfreeze_mask(plan, 5); });
  UnfreezePlan bad;
  bad.n_groups = 0;
  expect_error(errc::config_invalid, [&] { unfreeze_mask(bad, 0); });
  bad.n_groups = 1;
  bad.epochs_per_stage = 0;
  expect_error(errc::config_invalid, [&] { unfreeze_mask(bad, 0); });
}

TEST_CASE("finetune_total_steps counts every stage, epoch, and batch") {
  FinetunePlan plan;
  plan.batch_size = 4;
  plan.unfreeze.n_groups = 2;
  plan.unfreeze.epochs_per_stage = 3;
  CHECK(finetune_total_steps(plan, 10) == 27);  // 3 stages x 3 epochs x ceil(10/4)
  CHECK(finetune_total_steps(plan, 8) == 18);
  CHECK(finetune_total_steps(plan, 1) == 9);

  plan.batch_size = 0;
  expect_error(errc::config_invalid, [&] { finetune_total_steps(plan, 10); });
  plan.batch_size = 4;
  expect_error(errc::empty_training_set, [&] { finetune_total_steps(plan, 0); });
}

TEST_CASE("sgd_momentum_step leaves frozen groups untouched") {
  TransformerModel model = tiny_model();
  model.group_trainable = {false, false, true};

  TransformerParams grads = model.params;
  for (Mat* g : grads.flat()) g->setConstant(1.0);

  const Mat cls_before = model.params.cls_w;
  const std::vector<Mat> emb_before = group_params(model, 0);
  const std::vector<Mat> layer_before = group_params(model, 1);

  std::vector<Mat> momentum;
  const std::vector<double> lrs{0.1, 0.1, 0.1};
  sgd_momentum_step(model, grads, momentum, lrs);

  CHECK(bitwise_equal(group_params(model, 0), emb_before));
  CHECK(bitwise_equal(group_params(model, 1), layer_before));
  // First step has zero momentum, so the head moves by exactly -lr * grad.
  CHECK(((cls_before - model.params.cls_w).array() - 0.1).abs().maxCoeff() == 0.0);

  expect_error(errc::length_mismatch, [&] {
    std::vector<Mat> fresh;
    sgd_momentum_step(model, grads, fresh, std::vector<double>{0.1, 0.1});
  });
}

TEST_CASE("finetune_stage trains only the unfrozen groups") {
  const TransformerModel model = tiny_model();
  const LabeledCorpus train = tiny_corpus();
  const FinetunePlan plan = tiny_plan(train.documents.size());

  const TransformerModel stage0 = finetune_stage(model, train, plan, 0, 0);
  CHECK(stage0.group_trainable == std::vector<uint8_t>{0, 0, 1});
  CHECK(bitwise_equal(group_params(stage0, 0), group_params(model, 0)));
  CHECK(bitwise_equal(group_params(stage0, 1), group_params(model, 1)));
  CHECK_FALSE(bitwise_equal(group_params(stage0, 2), group_params(model, 2)));

  const TransformerModel stage1 = finetune_stage(model, train, plan, 1, 0);
  CHECK(bitwise_equal(group_params(stage1, 0), group_params(model, 0)));
  CHECK_FALSE(bitwise_equal(group_params(stage1, 1), group_params(model, 1)));
}

TEST_CASE("finetune applies the slanted rate scaled per group") {
  const TransformerModel model = tiny_model();
  const LabeledCorpus train = tiny_corpus();
  const FinetunePlan plan = tiny_plan(train.documents.size());
  REQUIRE(plan.stlr.total_steps == 6);  // 3 stages x 1 epoch x 2 batches

  FinetuneLog log;
  finetune(model, train, plan, &log);

  REQUIRE(log.lr_trace.size() == 6);
  CHECK(log.epoch_accuracy.size() == 3);

  const std::vector<double> disc = discriminative_lrs(plan.discriminative);
  for (size_t step = 0; step < log.lr_trace.size(); ++step) {
    REQUIRE(log.lr_trace[step].size() == 3);
    const double base = stlr_lr(plan.stlr, step);
    for (size_t g = 0; g < 3; ++g) {
      const double factor = disc[g] / plan.discriminative.last_layer_lr;
      CHECK(log.lr_trace[step][g] == base * factor);
    }
  }
  for (double accuracy : log.epoch_accuracy) {
    CHECK(accuracy >= 0.0);
    CHECK(accuracy <= 1.0);
  }
}

TEST_CASE("finetune validates the plan against the model and corpus") {
  const TransformerModel model = tiny_model();
  const LabeledCorpus train = tiny_corpus();

  FinetunePlan plan = tiny_plan(train.documents.size());
  plan.stlr.total_steps += 1;
  expect_error(errc::config_invalid, [&] { finetune(model, train, plan); });

  plan = tiny_plan(train.documents.size());
  plan.discriminative.n_groups = 2;
  expect_error(errc::config_invalid, [&] { finetune(model, train, plan); });

  plan = tiny_plan(train.documents.size());
  plan.unfreeze.n_groups = 3;
  expect_error(errc::config_invalid, [&] { finetune(model, train, plan); });

  plan = tiny_plan(train.documents.size());
  expect_error(errc::empty_training_set, [&] { finetune(model, LabeledCorpus{}, plan); });

  LabeledCorpus unlabeled = train;
  unlabeled.documents[2].label.reset();
  expect_error(errc::unlabeled_document, [&] { finetune(model, unlabeled, plan); });
}

}  // TEST_SUITE
