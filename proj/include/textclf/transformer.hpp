#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "textclf/corpus.hpp"
#include "textclf/rng.hpp"
#include "textclf/schedule.hpp"

namespace textclf {

using Mat = Eigen::MatrixXd;

struct WordPieceVocab {
  std::vector<std::string> tokens;  // index = id; first five entries are the specials
  std::unordered_map<std::string, uint32_t> token_to_id;

  static constexpr uint32_t pad_id = 0;
  static constexpr uint32_t cls_id = 1;
  static constexpr uint32_t sep_id = 2;
  static constexpr uint32_t mask_id = 3;
  static constexpr uint32_t unk_id = 4;
  static constexpr uint32_t n_special = 5;

  size_t size() const { return tokens.size(); }
  std::optional<uint32_t> lookup(std::string_view token) const;

  bool operator==(const WordPieceVocab& other) const { return tokens == other.tokens; }
};

// Greedy frequency-based merge training on the corpus texts. Continuation
// pieces carry the ## prefix; merging stops at target_size or when no
// adjacent pair repeats.
WordPieceVocab train_wordpiece(const std::vector<std::string>& texts, size_t target_size = 2000);

// One token per line, line number = id, specials on the first five lines.
WordPieceVocab load_wordpiece(const std::filesystem::path& path);
void save_wordpiece(const WordPieceVocab& vocab, const std::filesystem::path& path);

// Longest-match-first segmentation of whole text into piece ids, [UNK] per
// unsegmentable word. No specials added.
std::vector<uint32_t> wordpiece_encode(const WordPieceVocab& vocab, std::string_view text);

struct BatchEncoding {
  size_t seq_len = 0;
  std::vector<std::vector<uint32_t>> ids;
  std::vector<std::vector<uint8_t>> mask;      // 1 = real token
  std::vector<std::vector<uint8_t>> segments;  // 0 first sentence, 1 second
  std::vector<std::vector<int32_t>> mlm_targets;  // -1 = not predicted
  std::vector<uint8_t> nsp_labels;
  std::vector<uint32_t> class_labels;

  size_t batch() const { return ids.size(); }
};

// [CLS] text [SEP], wordpiece pieces truncated to fit max_len, then padded.
BatchEncoding encode_sequence(std::string_view text, const WordPieceVocab& vocab, size_t max_len);

// [CLS] first [SEP] second [SEP]; the longer segment is trimmed first.
BatchEncoding encode_pair(std::string_view first, std::string_view second,
                          const WordPieceVocab& vocab, size_t max_len);

BatchEncoding concat_rows(const std::vector<BatchEncoding>& rows);

// encode_sequence over a batch, padded only to the longest row (never beyond
// max_len). Masked positions carry exactly zero attention weight, so this
// matches padding all the way out.
BatchEncoding encode_min_batch(const std::vector<std::string>& texts,
                               const WordPieceVocab& vocab, size_t max_len);

struct TransformerConfig {
  size_t vocab_size = 0;
  size_t max_positions = 512;
  size_t n_layers = 2;
  size_t hidden_size = 64;
  size_t n_heads = 4;
  size_t ffn_size = 0;  // 0 selects 4 * hidden_size
  uint32_t n_classes = 2;
  double mask_rate = 0.15;
  uint64_t seed = 0;

  size_t resolved_ffn() const { return ffn_size ? ffn_size : 4 * hidden_size; }
};

struct LayerParams {
  Mat wq, bq, wk, bk, wv, bv, wo, bo;      // projections (biases are 1 x n)
  Mat ln1_g, ln1_b, ln2_g, ln2_b;          // layer norms
  Mat w1, b1, w2, b2;                      // feed-forward pair
};

struct TransformerParams {
  Mat tok_emb;  // vocab x hidden
  Mat pos_emb;  // max_positions x hidden
  Mat seg_emb;  // 2 x hidden
  std::vector<LayerParams> layers;
  Mat cls_w, cls_b;  // hidden x n_classes
  Mat mlm_w, mlm_b;  // hidden x vocab
  Mat nsp_w, nsp_b;  // hidden x 2

  // Visits every parameter in canonical order with its layer-group id:
  // 0 = embeddings, 1..n_layers = encoder layers, n_layers + 1 = heads.
  template <typename Fn>
  void for_each(Fn&& fn) {
    fn(tok_emb, size_t{0});
    fn(pos_emb, size_t{0});
    fn(seg_emb, size_t{0});
    for (size_t i = 0; i < layers.size(); ++i) {
      LayerParams& l = layers[i];
      const size_t g = 1 + i;
      for (Mat* m : {&l.wq, &l.bq, &l.wk, &l.bk, &l.wv, &l.bv, &l.wo, &l.bo, &l.ln1_g, &l.ln1_b,
                     &l.ln2_g, &l.ln2_b, &l.w1, &l.b1, &l.w2, &l.b2}) {
        fn(*m, g);
      }
    }
    const size_t head = layers.size() + 1;
    fn(cls_w, head);
    fn(cls_b, head);
    fn(mlm_w, head);
    fn(mlm_b, head);
    fn(nsp_w, head);
    fn(nsp_b, head);
  }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    const_cast<TransformerParams*>(this)->for_each(
        [&](Mat& m, size_t g) { fn(static_cast<const Mat&>(m), g); });
  }

  std::vector<Mat*> flat();
  std::vector<const Mat*> flat() const;
  std::vector<size_t> flat_groups() const;

  void set_zero();
};

struct TransformerModel {
  TransformerConfig config;
  WordPieceVocab vocab;
  TransformerParams params;
  std::vector<uint8_t> group_trainable;  // one flag per layer group

  size_t n_groups() const { return config.n_layers + 2; }
};

// Seeded normal(0, 0.02) weights, unit layer-norm gains, zero biases; every
// group starts trainable.
TransformerModel init_transformer(const TransformerConfig& config, WordPieceVocab vocab);

// softmax(q k^T / sqrt(d) + key mask bias) v. Masked keys get -inf bias; an
// all-masked key set is an error. weights_out receives the softmax rows.
Mat attention(const Mat& q, const Mat& k, const Mat& v, std::span<const uint8_t> key_mask,
              Mat* weights_out = nullptr);

struct ForwardResult {
  Mat class_probs;             // batch x n_classes
  Mat nsp_logits;              // batch x 2
  Mat pooled;                  // batch x hidden, final [CLS] state
  std::vector<Mat> mlm_logits; // per row: seq x vocab
};

ForwardResult forward(const TransformerModel& model, const BatchEncoding& batch);

std::vector<uint32_t> transformer_predict(const TransformerModel& model,
                                          const BatchEncoding& batch);

// Mean cross-entropy of class_probs against batch.class_labels; grads gets
// the full parameter gradient (zeroed first).
double classification_loss_and_grad(const TransformerModel& model, const BatchEncoding& batch,
                                    TransformerParams& grads);

// MLM mean cross-entropy over masked positions plus NSP mean cross-entropy.
double pretrain_loss_and_grad(const TransformerModel& model, const BatchEncoding& batch,
                              TransformerParams& grads, double* mlm_loss = nullptr,
                              double* nsp_loss = nullptr);

// Masks each real non-special token with the given probability, writing the
// original id into mlm_targets.
void mlm_mask(BatchEncoding& batch, double rate, Rng& rng);

struct NspPair {
  std::string first;
  std::string second;
  uint8_t is_next = 0;
};

// One pair per adjacent sentence: the true successor with probability 1/2,
// otherwise a random non-successor.
std::vector<NspPair> make_nsp_pairs(const std::vector<std::string>& sentences, Rng& rng);

// Skips parameter groups whose trainable flag is off; group_lrs has one rate
// per layer group.
void sgd_momentum_step(TransformerModel& model, const TransformerParams& grads,
                       std::vector<Mat>& momentum, std::span<const double> group_lrs,
                       double beta = 0.9);

struct PretrainConfig {
  size_t steps = 200;
  size_t batch_size = 16;
  size_t max_len = 64;
  double mask_rate = 0.15;
  StlrSchedule schedule;
  uint64_t seed = 0;
};

struct PretrainLog {
  std::vector<double> joint_loss;  // one entry per step
  double initial_joint_loss = 0.0;
  double final_joint_loss = 0.0;
};

TransformerModel pretrain(TransformerModel model, const std::vector<std::string>& sentences,
                          const PretrainConfig& config, PretrainLog* log = nullptr);

// argmax cosine similarity between (sum positive - sum negative) embeddings
// and every non-excluded vocab token.
std::string embedding_analogy(const TransformerModel& model,
                              const std::vector<std::string>& positive,
                              const std::vector<std::string>& negative,
                              const std::unordered_set<std::string>& exclude);

}  // namespace textclf
