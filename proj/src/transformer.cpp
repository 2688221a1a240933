#include "textclf/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "textclf/error.hpp"

namespace textclf {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kInitStd = 0.02;

Mat randn(size_t rows, size_t cols, Rng& rng, double std_dev) {
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = std_dev * rng.normal();
  }
  return m;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)) +
         x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

struct LnCache {
  Mat xhat;
  Eigen::VectorXd inv_std;
};

Mat ln_forward(const Mat& x, const Mat& g, const Mat& b, LnCache* cache) {
  const auto h = static_cast<double>(x.cols());
  Mat y(x.rows(), x.cols());
  Mat xhat(x.rows(), x.cols());
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().sum() / h;
    const double inv = 1.0 / std::sqrt(var + kLnEps);
    inv_std(r) = inv;
    xhat.row(r) = (x.row(r).array() - mu) * inv;
    y.row(r) = xhat.row(r).array() * g.row(0).array() + b.row(0).array();
  }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

// Accumulates into dg/db and returns dx.
Mat ln_backward(const Mat& dy, const LnCache& cache, const Mat& g, Mat& dg, Mat& db) {
  const auto h = static_cast<double>(dy.cols());
  dg.row(0).array() += (dy.array() * cache.xhat.array()).colwise().sum();
  db.row(0).array() += dy.array().colwise().sum();
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const Eigen::ArrayXd dxhat = dy.row(r).array() * g.row(0).array();
    const Eigen::ArrayXd xh = cache.xhat.row(r).array();
    const double m1 = dxhat.sum() / h;
    const double m2 = (dxhat * xh).sum() / h;
    dx.row(r) = cache.inv_std(r) * (dxhat - m1 - xh * m2);
  }
  return dx;
}

struct LayerCache {
  Mat x_in;
  LnCache ln1;
  Mat n1;
  Mat q, k, v;
  std::vector<Mat> attn_w;  // per head
  Mat concat;               // heads side by side, input of the output projection
  Mat x2;
  LnCache ln2;
  Mat n2;
  Mat f1;  // pre-activation
  Mat act;
};

struct RowCache {
  Mat x0;
  std::vector<LayerCache> layers;
  Mat h_final;
};

void check_finite(const Mat& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(errc::non_finite_activation, std::string("non-finite values in ") + what);
  }
}

Mat embed_row(const TransformerModel& model, const std::vector<uint32_t>& ids,
              const std::vector<uint8_t>& segments) {
  const TransformerParams& p = model.params;
  Mat x(ids.size(), model.config.hidden_size);
  for (size_t t = 0; t < ids.size(); ++t) {
    x.row(static_cast<Eigen::Index>(t)) = p.tok_emb.row(ids[t]) +
                                          p.pos_emb.row(static_cast<Eigen::Index>(t)) +
                                          p.seg_emb.row(segments[t]);
  }
  return x;
}

RowCache forward_row(const TransformerModel& model, const std::vector<uint32_t>& ids,
                     const std::vector<uint8_t>& mask, const std::vector<uint8_t>& segments) {
  const TransformerParams& p = model.params;
  const size_t n_heads = model.config.n_heads;
  const auto d_head = static_cast<Eigen::Index>(model.config.hidden_size / n_heads);

  RowCache cache;
  cache.x0 = embed_row(model, ids, segments);
  Mat x = cache.x0;
  cache.layers.resize(model.config.n_layers);

  for (size_t layer = 0; layer < model.config.n_layers; ++layer) {
    const LayerParams& lp = p.layers[layer];
    LayerCache& lc = cache.layers[layer];
    lc.x_in = x;
    lc.n1 = ln_forward(x, lp.ln1_g, lp.ln1_b, &lc.ln1);
    lc.q = lc.n1 * lp.wq;
    lc.q.rowwise() += lp.bq.row(0);
    lc.k = lc.n1 * lp.wk;
    lc.k.rowwise() += lp.bk.row(0);
    lc.v = lc.n1 * lp.wv;
    lc.v.rowwise() += lp.bv.row(0);

    lc.concat.resize(x.rows(), x.cols());
    lc.attn_w.resize(n_heads);
    for (size_t h = 0; h < n_heads; ++h) {
      const auto off = static_cast<Eigen::Index>(h) * d_head;
      lc.concat.middleCols(off, d_head) =
          attention(lc.q.middleCols(off, d_head), lc.k.middleCols(off, d_head),
                    lc.v.middleCols(off, d_head), mask, &lc.attn_w[h]);
    }
    Mat attn_out = lc.concat * lp.wo;
    attn_out.rowwise() += lp.bo.row(0);
    lc.x2 = x + attn_out;

    lc.n2 = ln_forward(lc.x2, lp.ln2_g, lp.ln2_b, &lc.ln2);
    lc.f1 = lc.n2 * lp.w1;
    lc.f1.rowwise() += lp.b1.row(0);
    lc.act = lc.f1.unaryExpr([](double v) { return gelu(v); });
    Mat f2 = lc.act * lp.w2;
    f2.rowwise() += lp.b2.row(0);
    x = lc.x2 + f2;
  }
  cache.h_final = std::move(x);
  check_finite(cache.h_final, "encoder output");
  return cache;
}

void validate_batch(const TransformerModel& model, const BatchEncoding& batch) {
  if (batch.batch() == 0) throw Error(errc::empty_input, "empty batch");
  if (batch.seq_len > model.config.max_positions) {
    throw Error(errc::shape_mismatch, "sequence length exceeds max_positions");
  }
  if (batch.mask.size() != batch.batch() || batch.segments.size() != batch.batch()) {
    throw Error(errc::shape_mismatch, "batch field lengths disagree");
  }
  for (size_t b = 0; b < batch.batch(); ++b) {
    if (batch.ids[b].size() != batch.seq_len || batch.mask[b].size() != batch.seq_len ||
        batch.segments[b].size() != batch.seq_len) {
      throw Error(errc::shape_mismatch, "batch row has wrong sequence length");
    }
    for (uint32_t id : batch.ids[b]) {
      if (id >= model.config.vocab_size) {
        throw Error(errc::shape_mismatch, "token id outside the vocabulary");
      }
    }
    for (uint8_t seg : batch.segments[b]) {
      if (seg > 1) throw Error(errc::shape_mismatch, "segment ids must be 0 or 1");
    }
  }
}

Mat softmax_rows(const Mat& logits) {
  Mat probs(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    Eigen::ArrayXd e = (logits.row(r).array() - m).exp();
    probs.row(r) = e / e.sum();
  }
  return probs;
}

// log softmax cross-entropy of one logit row against a target index
double row_ce(const Eigen::Ref<const Eigen::RowVectorXd>& logits, Eigen::Index target) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return lse - logits(target);
}

struct FullCache {
  std::vector<RowCache> rows;
  Mat pooled;
  Mat class_logits;
  Mat nsp_logits;
  std::vector<Mat> mlm_logits;
};

FullCache run_forward(const TransformerModel& model, const BatchEncoding& batch, bool need_mlm) {
  validate_batch(model, batch);
  const auto batch_n = static_cast<Eigen::Index>(batch.batch());
  FullCache full;
  full.rows.reserve(batch.batch());
  full.pooled.resize(batch_n, static_cast<Eigen::Index>(model.config.hidden_size));
  for (size_t b = 0; b < batch.batch(); ++b) {
    full.rows.push_back(forward_row(model, batch.ids[b], batch.mask[b], batch.segments[b]));
    full.pooled.row(static_cast<Eigen::Index>(b)) = full.rows.back().h_final.row(0);
    if (need_mlm) {
      Mat logits = full.rows.back().h_final * model.params.mlm_w;
      logits.rowwise() += model.params.mlm_b.row(0);
      check_finite(logits, "mlm logits");
      full.mlm_logits.push_back(std::move(logits));
    }
  }
  full.class_logits = full.pooled * model.params.cls_w;
  full.class_logits.rowwise() += model.params.cls_b.row(0);
  full.nsp_logits = full.pooled * model.params.nsp_w;
  full.nsp_logits.rowwise() += model.params.nsp_b.row(0);
  check_finite(full.class_logits, "classifier logits");
  check_finite(full.nsp_logits, "nsp logits");
  return full;
}

// Backpropagates dH (gradient w.r.t. h_final, per batch row) down to the
// embeddings, accumulating parameter gradients.
void backward_rows(const TransformerModel& model, const BatchEncoding& batch,
                   const std::vector<RowCache>& rows, std::vector<Mat>& dh_final,
                   TransformerParams& grads) {
  const TransformerParams& p = model.params;
  const size_t n_heads = model.config.n_heads;
  const auto d_head = static_cast<Eigen::Index>(model.config.hidden_size / n_heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_head));

  for (size_t b = 0; b < batch.batch(); ++b) {
    const RowCache& rc = rows[b];
    Mat dx = std::move(dh_final[b]);

    for (size_t layer = model.config.n_layers; layer-- > 0;) {
      const LayerParams& lp = p.layers[layer];
      LayerParams& lg = grads.layers[layer];
      const LayerCache& lc = rc.layers[layer];

      // feed-forward half: x_out = x2 + gelu(ln2(x2) w1 + b1) w2 + b2
      const Mat& df2 = dx;  // residual passes dx through unchanged
      Mat dact = df2 * lp.w2.transpose();
      lg.w2 += lc.act.transpose() * df2;
      lg.b2.row(0).array() += df2.array().colwise().sum();
      Mat df1 = dact.array() * lc.f1.unaryExpr([](double v) { return gelu_grad(v); }).array();
      Mat dn2 = df1 * lp.w1.transpose();
      lg.w1 += lc.n2.transpose() * df1;
      lg.b1.row(0).array() += df1.array().colwise().sum();
      Mat dx2 = dx + ln_backward(dn2, lc.ln2, lp.ln2_g, lg.ln2_g, lg.ln2_b);

      // attention half: x2 = x_in + attn(ln1(x_in)) wo + bo
      const Mat& dattn_out = dx2;
      Mat dconcat = dattn_out * lp.wo.transpose();
      lg.wo += lc.concat.transpose() * dattn_out;
      lg.bo.row(0).array() += dattn_out.array().colwise().sum();

      Mat dq(lc.q.rows(), lc.q.cols());
      Mat dk(lc.k.rows(), lc.k.cols());
      Mat dv(lc.v.rows(), lc.v.cols());
      for (size_t h = 0; h < n_heads; ++h) {
        const auto off = static_cast<Eigen::Index>(h) * d_head;
        const Mat& w = lc.attn_w[h];
        const auto qh = lc.q.middleCols(off, d_head);
        const auto kh = lc.k.middleCols(off, d_head);
        const auto vh = lc.v.middleCols(off, d_head);
        const auto doh = dconcat.middleCols(off, d_head);

        dv.middleCols(off, d_head) = w.transpose() * doh;
        Mat dw = doh * vh.transpose();
        // softmax backward, row-wise
        Mat ds(w.rows(), w.cols());
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
          const double inner = (dw.row(r).array() * w.row(r).array()).sum();
          ds.row(r) = w.row(r).array() * (dw.row(r).array() - inner);
        }
        dq.middleCols(off, d_head) = scale * ds * kh;
        dk.middleCols(off, d_head) = scale * ds.transpose() * qh;
      }

      Mat dn1 = dq * lp.wq.transpose() + dk * lp.wk.transpose() + dv * lp.wv.transpose();
      lg.wq += lc.n1.transpose() * dq;
      lg.bq.row(0).array() += dq.array().colwise().sum();
      lg.wk += lc.n1.transpose() * dk;
      lg.bk.row(0).array() += dk.array().colwise().sum();
      lg.wv += lc.n1.transpose() * dv;
      lg.bv.row(0).array() += dv.array().colwise().sum();

      dx = dx2 + ln_backward(dn1, lc.ln1, lp.ln1_g, lg.ln1_g, lg.ln1_b);
    }

    for (size_t t = 0; t < batch.seq_len; ++t) {
      const auto ti = static_cast<Eigen::Index>(t);
      grads.tok_emb.row(batch.ids[b][t]) += dx.row(ti);
      grads.pos_emb.row(ti) += dx.row(ti);
      grads.seg_emb.row(batch.segments[b][t]) += dx.row(ti);
    }
  }
}

}  // namespace

std::vector<Mat*> TransformerParams::flat() {
  std::vector<Mat*> out;
  for_each([&](Mat& m, size_t) { out.push_back(&m); });
  return out;
}

std::vector<const Mat*> TransformerParams::flat() const {
  std::vector<const Mat*> out;
  for_each([&](const Mat& m, size_t) { out.push_back(&m); });
  return out;
}

std::vector<size_t> TransformerParams::flat_groups() const {
  std::vector<size_t> out;
  for_each([&](const Mat&, size_t g) { out.push_back(g); });
  return out;
}

void TransformerParams::set_zero() {
  for_each([](Mat& m, size_t) { m.setZero(); });
}

TransformerModel init_transformer(const TransformerConfig& config, WordPieceVocab vocab) {
  TransformerConfig cfg = config;
  if (cfg.vocab_size == 0) cfg.vocab_size = vocab.size();
  if (cfg.vocab_size != vocab.size()) {
    throw Error(errc::config_invalid, "config vocab_size disagrees with the vocabulary");
  }
  if (cfg.n_layers == 0 || cfg.hidden_size == 0 || cfg.n_heads == 0 ||
      cfg.hidden_size % cfg.n_heads != 0) {
    throw Error(errc::config_invalid, "hidden_size must be a positive multiple of n_heads");
  }
  if (cfg.max_positions < 2 || cfg.n_classes < 2) {
    throw Error(errc::config_invalid, "max_positions and n_classes are too small");
  }
  if (cfg.mask_rate < 0.0 || cfg.mask_rate > 1.0) {
    throw Error(errc::config_invalid, "mask_rate outside [0, 1]");
  }

  Rng rng(cfg.seed);
  const auto hidden = static_cast<Eigen::Index>(cfg.hidden_size);
  const auto ffn = static_cast<Eigen::Index>(cfg.resolved_ffn());

  TransformerModel model;
  model.config = cfg;
  model.vocab = std::move(vocab);
  TransformerParams& p = model.params;
  p.tok_emb = randn(cfg.vocab_size, cfg.hidden_size, rng, kInitStd);
  p.pos_emb = randn(cfg.max_positions, cfg.hidden_size, rng, kInitStd);
  p.seg_emb = randn(2, cfg.hidden_size, rng, kInitStd);
  p.layers.resize(cfg.n_layers);
  for (LayerParams& l : p.layers) {
    l.wq = randn(cfg.hidden_size, cfg.hidden_size, rng, kInitStd);
    l.bq = Mat::Zero(1, hidden);
    l.wk = randn(cfg.hidden_size, cfg.hidden_size, rng, kInitStd);
    l.bk = Mat::Zero(1, hidden);
    l.wv = randn(cfg.hidden_size, cfg.hidden_size, rng, kInitStd);
    l.bv = Mat::Zero(1, hidden);
    l.wo = randn(cfg.hidden_size, cfg.hidden_size, rng, kInitStd);
    l.bo = Mat::Zero(1, hidden);
    l.ln1_g = Mat::Ones(1, hidden);
    l.ln1_b = Mat::Zero(1, hidden);
    l.ln2_g = Mat::Ones(1, hidden);
    l.ln2_b = Mat::Zero(1, hidden);
    l.w1 = randn(cfg.hidden_size, cfg.resolved_ffn(), rng, kInitStd);
    l.b1 = Mat::Zero(1, ffn);
    l.w2 = randn(cfg.resolved_ffn(), cfg.hidden_size, rng, kInitStd);
    l.b2 = Mat::Zero(1, hidden);
  }
  p.cls_w = randn(cfg.hidden_size, cfg.n_classes, rng, kInitStd);
  p.cls_b = Mat::Zero(1, cfg.n_classes);
  p.mlm_w = randn(cfg.hidden_size, cfg.vocab_size, rng, kInitStd);
  p.mlm_b = Mat::Zero(1, static_cast<Eigen::Index>(cfg.vocab_size));
  p.nsp_w = randn(cfg.hidden_size, 2, rng, kInitStd);
  p.nsp_b = Mat::Zero(1, 2);

  model.group_trainable.assign(model.n_groups(), 1);
  return model;
}

Mat attention(const Mat& q, const Mat& k, const Mat& v, std::span<const uint8_t> key_mask,
              Mat* weights_out) {
  if (q.cols() != k.cols() || k.rows() != v.rows() ||
      key_mask.size() != static_cast<size_t>(k.rows())) {
    throw Error(errc::shape_mismatch, "attention input shapes disagree");
  }
  if (std::find(key_mask.begin(), key_mask.end(), uint8_t{1}) == key_mask.end()) {
    throw Error(errc::all_masked, "attention mask excludes every position");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Mat scores = scale * (q * k.transpose());
  Mat weights(scores.rows(), scores.cols());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < scores.cols(); ++c) {
      if (key_mask[static_cast<size_t>(c)]) m = std::max(m, scores(r, c));
    }
    double sum = 0.0;
    for (Eigen::Index c = 0; c < scores.cols(); ++c) {
      const double w = key_mask[static_cast<size_t>(c)] ? std::exp(scores(r, c) - m) : 0.0;
      weights(r, c) = w;
      sum += w;
    }
    weights.row(r) /= sum;
  }
  if (weights_out) *weights_out = weights;
  return weights * v;
}

ForwardResult forward(const TransformerModel& model, const BatchEncoding& batch) {
  FullCache full = run_forward(model, batch, true);
  ForwardResult result;
  result.class_probs = softmax_rows(full.class_logits);
  result.nsp_logits = std::move(full.nsp_logits);
  result.pooled = std::move(full.pooled);
  result.mlm_logits = std::move(full.mlm_logits);
  return result;
}

std::vector<uint32_t> transformer_predict(const TransformerModel& model,
                                          const BatchEncoding& batch) {
  FullCache full = run_forward(model, batch, false);
  std::vector<uint32_t> out(batch.batch());
  for (Eigen::Index r = 0; r < full.class_logits.rows(); ++r) {
    Eigen::Index best = 0;
    full.class_logits.row(r).maxCoeff(&best);
    out[static_cast<size_t>(r)] = static_cast<uint32_t>(best);
  }
  return out;
}

double classification_loss_and_grad(const TransformerModel& model, const BatchEncoding& batch,
                                    TransformerParams& grads) {
  if (batch.class_labels.size() != batch.batch()) {
    throw Error(errc::length_mismatch, "batch has no class label per row");
  }
  for (uint32_t label : batch.class_labels) {
    if (label >= model.config.n_classes) {
      throw Error(errc::config_invalid, "class label outside n_classes");
    }
  }
  FullCache full = run_forward(model, batch, false);
  grads = model.params;
  grads.set_zero();

  const auto batch_n = static_cast<Eigen::Index>(batch.batch());
  const double inv_b = 1.0 / static_cast<double>(batch.batch());
  double loss = 0.0;
  Mat dlogits = softmax_rows(full.class_logits);
  for (Eigen::Index r = 0; r < batch_n; ++r) {
    const auto target = static_cast<Eigen::Index>(batch.class_labels[static_cast<size_t>(r)]);
    loss += row_ce(full.class_logits.row(r), target);
    dlogits(r, target) -= 1.0;
  }
  loss *= inv_b;
  dlogits *= inv_b;
  if (!std::isfinite(loss)) throw Error(errc::non_finite_loss, "classification loss blew up");

  grads.cls_w += full.pooled.transpose() * dlogits;
  grads.cls_b.row(0).array() += dlogits.array().colwise().sum();
  Mat dpooled = dlogits * model.params.cls_w.transpose();

  std::vector<Mat> dh(batch.batch());
  for (size_t b = 0; b < batch.batch(); ++b) {
    dh[b] = Mat::Zero(static_cast<Eigen::Index>(batch.seq_len),
                      static_cast<Eigen::Index>(model.config.hidden_size));
    dh[b].row(0) = dpooled.row(static_cast<Eigen::Index>(b));
  }
  backward_rows(model, batch, full.rows, dh, grads);
  return loss;
}

double pretrain_loss_and_grad(const TransformerModel& model, const BatchEncoding& batch,
                              TransformerParams& grads, double* mlm_loss_out,
                              double* nsp_loss_out) {
  if (batch.nsp_labels.size() != batch.batch()) {
    throw Error(errc::length_mismatch, "batch has no nsp label per row");
  }
  if (batch.mlm_targets.size() != batch.batch()) {
    throw Error(errc::length_mismatch, "batch has no mlm target row per row");
  }
  FullCache full = run_forward(model, batch, true);
  grads = model.params;
  grads.set_zero();

  size_t n_masked = 0;
  for (size_t b = 0; b < batch.batch(); ++b) {
    for (int32_t t : batch.mlm_targets[b]) {
      if (t >= 0) ++n_masked;
    }
  }

  std::vector<Mat> dh(batch.batch());
  for (size_t b = 0; b < batch.batch(); ++b) {
    dh[b] = Mat::Zero(static_cast<Eigen::Index>(batch.seq_len),
                      static_cast<Eigen::Index>(model.config.hidden_size));
  }

  double mlm_loss = 0.0;
  if (n_masked > 0) {
    const double inv_m = 1.0 / static_cast<double>(n_masked);
    for (size_t b = 0; b < batch.batch(); ++b) {
      const Mat& logits = full.mlm_logits[b];
      Mat dlogits = Mat::Zero(logits.rows(), logits.cols());
      for (size_t t = 0; t < batch.seq_len; ++t) {
        const int32_t target = batch.mlm_targets[b][t];
        if (target < 0) continue;
        const auto ti = static_cast<Eigen::Index>(t);
        mlm_loss += row_ce(logits.row(ti), target);
        Eigen::RowVectorXd probs = softmax_rows(logits.row(ti)).row(0);
        probs(target) -= 1.0;
        dlogits.row(ti) = inv_m * probs;
      }
      grads.mlm_w += full.rows[b].h_final.transpose() * dlogits;
      grads.mlm_b.row(0).array() += dlogits.array().colwise().sum();
      dh[b] += dlogits * model.params.mlm_w.transpose();
    }
    mlm_loss *= inv_m;
  }

  const auto batch_n = static_cast<Eigen::Index>(batch.batch());
  const double inv_b = 1.0 / static_cast<double>(batch.batch());
  double nsp_loss = 0.0;
  Mat dnsp = softmax_rows(full.nsp_logits);
  for (Eigen::Index r = 0; r < batch_n; ++r) {
    const uint8_t label = batch.nsp_labels[static_cast<size_t>(r)];
    if (label > 1) throw Error(errc::config_invalid, "nsp label must be 0 or 1");
    nsp_loss += row_ce(full.nsp_logits.row(r), label);
    dnsp(r, label) -= 1.0;
  }
  nsp_loss *= inv_b;
  dnsp *= inv_b;

  grads.nsp_w += full.pooled.transpose() * dnsp;
  grads.nsp_b.row(0).array() += dnsp.array().colwise().sum();
  Mat dpooled = dnsp * model.params.nsp_w.transpose();
  for (size_t b = 0; b < batch.batch(); ++b) {
    dh[b].row(0) += dpooled.row(static_cast<Eigen::Index>(b));
  }

  backward_rows(model, batch, full.rows, dh, grads);

  const double joint = mlm_loss + nsp_loss;
  if (!std::isfinite(joint)) throw Error(errc::non_finite_loss, "pretraining loss blew up");
  if (mlm_loss_out) *mlm_loss_out = mlm_loss;
  if (nsp_loss_out) *nsp_loss_out = nsp_loss;
  return joint;
}

void mlm_mask(BatchEncoding& batch, double rate, Rng& rng) {
  if (rate < 0.0 || rate > 1.0) {
    throw Error(errc::config_invalid, "mask rate outside [0, 1]");
  }
  for (size_t b = 0; b < batch.batch(); ++b) {
    for (size_t t = 0; t < batch.seq_len; ++t) {
      if (!batch.mask[b][t]) continue;
      const uint32_t id = batch.ids[b][t];
      if (id < WordPieceVocab::n_special) continue;
      if (rng.bernoulli(rate)) {
        batch.mlm_targets[b][t] = static_cast<int32_t>(id);
        batch.ids[b][t] = WordPieceVocab::mask_id;
      }
    }
  }
}

std::vector<NspPair> make_nsp_pairs(const std::vector<std::string>& sentences, Rng& rng) {
  if (sentences.size() < 3) {
    throw Error(errc::corpus_too_small, "nsp needs at least three sentences");
  }
  std::vector<NspPair> pairs;
  pairs.reserve(sentences.size() - 1);
  for (size_t i = 0; i + 1 < sentences.size(); ++i) {
    if (rng.bernoulli(0.5)) {
      pairs.push_back({sentences[i], sentences[i + 1], 1});
    } else {
      size_t j;
      do {
        j = rng.uniform_index(sentences.size());
      } while (j == i + 1);
      pairs.push_back({sentences[i], sentences[j], 0});
    }
  }
  return pairs;
}

void sgd_momentum_step(TransformerModel& model, const TransformerParams& grads,
                       std::vector<Mat>& momentum, std::span<const double> group_lrs,
                       double beta) {
  if (group_lrs.size() != model.n_groups()) {
    throw Error(errc::length_mismatch, "one learning rate per layer group required");
  }
  std::vector<Mat*> params = model.params.flat();
  std::vector<const Mat*> gs = grads.flat();
  const std::vector<size_t> groups = model.params.flat_groups();
  if (gs.size() != params.size()) {
    throw Error(errc::shape_mismatch, "gradient layout does not match the model");
  }
  if (momentum.empty()) {
    momentum.reserve(params.size());
    for (const Mat* p : params) momentum.push_back(Mat::Zero(p->rows(), p->cols()));
  }
  if (momentum.size() != params.size()) {
    throw Error(errc::shape_mismatch, "momentum layout does not match the model");
  }
  for (size_t i = 0; i < params.size(); ++i) {
    const size_t g = groups[i];
    if (!model.group_trainable[g]) continue;
    momentum[i] = beta * momentum[i] + *gs[i];
    *params[i] -= group_lrs[g] * momentum[i];
  }
}

TransformerModel pretrain(TransformerModel model, const std::vector<std::string>& sentences,
                          const PretrainConfig& config, PretrainLog* log) {
  if (config.steps == 0) return model;
  if (config.batch_size == 0) throw Error(errc::config_invalid, "batch_size must be positive");

  StlrSchedule schedule = config.schedule;
  if (schedule.total_steps == 0) schedule.total_steps = config.steps;

  Rng rng(config.seed);
  std::vector<NspPair> pairs;
  size_t next_pair = 0;
  std::vector<Mat> momentum;
  TransformerParams grads;
  const std::vector<double> lrs_template(model.n_groups(), 0.0);

  for (size_t step = 0; step < config.steps; ++step) {
    std::vector<NspPair> batch_pairs;
    batch_pairs.reserve(config.batch_size);
    while (batch_pairs.size() < config.batch_size) {
      if (next_pair >= pairs.size()) {
        pairs = make_nsp_pairs(sentences, rng);
        next_pair = 0;
      }
      batch_pairs.push_back(pairs[next_pair++]);
    }
    // Pad only to the longest pair; masked positions are exact zeros anyway.
    size_t longest = 0;
    for (const NspPair& pair : batch_pairs) {
      const size_t pieces = wordpiece_encode(model.vocab, pair.first).size() +
                            wordpiece_encode(model.vocab, pair.second).size();
      longest = std::max(longest, pieces + 3);
    }
    const size_t len = std::max<size_t>(3, std::min(config.max_len, longest));
    std::vector<BatchEncoding> rows;
    rows.reserve(config.batch_size);
    for (const NspPair& pair : batch_pairs) {
      BatchEncoding row = encode_pair(pair.first, pair.second, model.vocab, len);
      mlm_mask(row, config.mask_rate, rng);
      row.nsp_labels.push_back(pair.is_next);
      rows.push_back(std::move(row));
    }
    BatchEncoding batch = concat_rows(rows);

    const double joint = pretrain_loss_and_grad(model, batch, grads);
    std::vector<double> lrs = lrs_template;
    const double lr = stlr_lr(schedule, step);
    std::fill(lrs.begin(), lrs.end(), lr);
    sgd_momentum_step(model, grads, momentum, lrs);

    if (log) {
      log->joint_loss.push_back(joint);
      if (step == 0) log->initial_joint_loss = joint;
      log->final_joint_loss = joint;
    }
  }
  return model;
}

std::string embedding_analogy(const TransformerModel& model,
                              const std::vector<std::string>& positive,
                              const std::vector<std::string>& negative,
                              const std::unordered_set<std::string>& exclude) {
  const auto hidden = static_cast<Eigen::Index>(model.config.hidden_size);
  Eigen::RowVectorXd query = Eigen::RowVectorXd::Zero(hidden);
  auto add = [&](const std::vector<std::string>& tokens, double sign) {
    for (const std::string& token : tokens) {
      const auto id = model.vocab.lookup(token);
      if (!id) throw Error(errc::unknown_token, "token not in vocabulary: " + token);
      query += sign * model.params.tok_emb.row(*id);
    }
  };
  add(positive, 1.0);
  add(negative, -1.0);

  const double query_norm = query.norm();
  double best_sim = -std::numeric_limits<double>::infinity();
  std::optional<uint32_t> best_id;
  for (uint32_t id = 0; id < model.vocab.size(); ++id) {
    if (exclude.contains(model.vocab.tokens[id])) continue;
    const Eigen::RowVectorXd row = model.params.tok_emb.row(id);
    const double denom = query_norm * row.norm();
    if (denom == 0.0) continue;
    const double sim = query.dot(row) / denom;
    if (sim > best_sim) {
      best_sim = sim;
      best_id = id;
    }
  }
  if (!best_id) throw Error(errc::empty_input, "no candidate embeddings to rank");
  return model.vocab.tokens[*best_id];
}

}  // namespace textclf
