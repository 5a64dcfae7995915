#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmlmp/activation.hpp"
#include "rmlmp/autoencoder.hpp"
#include "rmlmp/solver.hpp"
#include "rmlmp/sparse.hpp"
#include "rmlmp/types.hpp"

namespace rmlmp {

/// Hyperparameters of the stacked network. When `sparse` is set, Stage 3
/// recomputes layer weights with the l1/2 solver (SRML-MP); otherwise with
/// ridge regression (RML-MP).
struct TrainConfig {
  std::vector<Index> hidden = {1000, 1000};
  RidgeConfig ridge_ae{4.0};
  RidgeConfig ridge_out{4.0};
  double learning_rate = 0.5;
  Activation activation;
  std::uint64_t seed = 0;
  std::optional<SparseConfig> sparse;

  Index n_layers() const { return static_cast<Index>(hidden.size()); }
};

inline void validate(const TrainConfig& cfg) {
  if (cfg.hidden.empty()) {
    throw std::invalid_argument("TrainConfig: at least one hidden layer required");
  }
  for (Index h : cfg.hidden) {
    if (h < 1) throw std::invalid_argument("TrainConfig: hidden sizes must be positive");
  }
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw std::invalid_argument("TrainConfig: learning rate must be >= 0 and finite");
  }
  validate(cfg.ridge_ae);
  validate(cfg.ridge_out);
  validate(cfg.activation);
  if (cfg.sparse) validate(*cfg.sparse);
}

enum class ModelStage { initialized, recomputed };

/// Stacked LS autoencoders plus the ridge classification layer. After
/// Stage 1 the model is the plain multilayer LS network (the MLS
/// baseline); recompute() produces the updated-stage model.
struct StackedModel {
  std::vector<AeLayer> layers;
  Matrix output_weight;  // h_M x K
  TrainConfig config;
  ModelStage stage = ModelStage::initialized;

  Index input_dim() const { return layers.empty() ? 0 : layers.front().in_dim; }
  Index class_count() const { return output_weight.cols(); }
};

/// Output error and per-layer target offsets from Stage 2.
/// offsets[i] holds P^(i+1) (layer numbering is 1-based in the math), an
/// N x h_{i+1} matrix.
struct FeedbackSet {
  Matrix error;                 // N x K
  std::vector<Matrix> offsets;  // size M, ascending layer order
  std::size_t clipped = 0;      // entries clipped by the inverse activation
};

inline std::uint64_t layer_seed(std::uint64_t run_seed, Index layer_index) {
  return mix_seed(run_seed + 0x9e3779b97f4a7c15ULL *
                                 static_cast<std::uint64_t>(layer_index + 1));
}

/// Stage 1: train the stack of LS autoencoders on successive encodings and
/// solve the output layer by ridge regression. `batch_rows > 0` routes all
/// ridge solves through batch-wise Gram accumulation.
inline StackedModel stage1_train(const Matrix& x, const Matrix& t,
                                 const TrainConfig& cfg, Index batch_rows = 0) {
  validate(cfg);
  if (x.rows() != t.rows()) {
    throw std::invalid_argument("stage1_train: feature/target row counts differ");
  }
  if (t.cols() < 2) {
    throw std::invalid_argument("stage1_train: need at least two classes");
  }
  require_finite(x, "stage1_train(x)");
  require_finite(t, "stage1_train(t)");

  StackedModel model;
  model.config = cfg;
  Matrix psi = x;
  for (Index i = 0; i < cfg.n_layers(); ++i) {
    const std::uint64_t seed = layer_seed(cfg.seed, i);
    AeLayer layer =
        batch_rows > 0
            ? train_ae_batched(psi, cfg.hidden[static_cast<size_t>(i)], cfg.ridge_ae,
                               cfg.activation, seed, batch_rows)
            : train_ae(psi, cfg.hidden[static_cast<size_t>(i)], cfg.ridge_ae,
                       cfg.activation, seed);
    psi = encode(layer, psi);
    model.layers.push_back(std::move(layer));
  }
  if (batch_rows > 0) {
    GramState state(psi.cols(), t.cols());
    for (Index start = 0; start < psi.rows(); start += batch_rows) {
      const Index rows = std::min(batch_rows, psi.rows() - start);
      gram_absorb(state, psi.middleRows(start, rows), t.middleRows(start, rows));
    }
    model.output_weight = gram_finalize(state, cfg.ridge_out);
  } else {
    model.output_weight = ridge_solve(psi, t, cfg.ridge_out);
  }
  model.stage = ModelStage::initialized;
  return model;
}

/// Stage 2: pull the output error back to every hidden layer.
/// E = T - Psi^(M) W_f, P^(M) = E pinv(W_f), and for i = M..2
/// P^(i-1) = act^{-1}(P^(i) pinv(V^(i))).
inline FeedbackSet pullback(const StackedModel& model, const Matrix& x,
                            const Matrix& t) {
  if (model.stage != ModelStage::initialized) {
    throw std::invalid_argument("pullback: model weights were already recomputed");
  }
  if (x.cols() != model.input_dim()) {
    throw std::invalid_argument("pullback: input width does not match model");
  }
  if (x.rows() != t.rows() || t.cols() != model.class_count()) {
    throw std::invalid_argument("pullback: target shape does not match model");
  }
  require_finite(x, "pullback(x)");
  require_finite(t, "pullback(t)");

  const Index m = static_cast<Index>(model.layers.size());
  Matrix psi = x;
  for (const AeLayer& layer : model.layers) {
    psi = encode(layer, psi);
  }

  FeedbackSet fb;
  fb.offsets.resize(static_cast<size_t>(m));
  fb.error = t - psi * model.output_weight;
  fb.offsets[static_cast<size_t>(m - 1)] =
      fb.error * pinv_reg(model.output_weight, model.config.ridge_out);
  for (Index i = m; i >= 2; --i) {
    const Matrix& v = model.layers[static_cast<size_t>(i - 1)].forward_weight;
    std::size_t clipped = 0;
    fb.offsets[static_cast<size_t>(i - 2)] =
        act_inverse(model.config.activation,
                    fb.offsets[static_cast<size_t>(i - 1)] *
                        pinv_reg(v, model.config.ridge_ae),
                    &clipped);
    fb.clipped += clipped;
  }
  return fb;
}

/// Per-layer diagnostics of recompute(); entries are filled only when the
/// layer update was actually solved (learning rate > 0).
struct RecomputeInfo {
  std::vector<Index> eta_zeros;
  std::vector<Index> eta_size;
  std::vector<IjtReport> ijt;
};

/// Stage 3: recompute every layer weight from the pulled-back offsets,
/// then refit the output layer on the updated encodings. The l2 path
/// solves eta by ridge regression (RML-MP); the sparse path uses IJT or,
/// for the svd_shrink solver, the singular-value shrinkage applied to the
/// closed-form l2 update. With learning rate 0 all weights are preserved
/// bit for bit.
inline StackedModel recompute(const StackedModel& model, const Matrix& x,
                              const Matrix& t, const FeedbackSet& fb,
                              RecomputeInfo* info = nullptr) {
  if (model.stage != ModelStage::initialized) {
    throw std::invalid_argument("recompute: model weights were already recomputed");
  }
  const Index m = static_cast<Index>(model.layers.size());
  if (static_cast<Index>(fb.offsets.size()) != m) {
    throw std::invalid_argument("recompute: feedback does not match model depth");
  }
  if (x.rows() != fb.error.rows() || x.cols() != model.input_dim()) {
    throw std::invalid_argument("recompute: input shape does not match feedback");
  }
  if (t.rows() != x.rows() || t.cols() != model.class_count()) {
    throw std::invalid_argument("recompute: target shape does not match model");
  }
  for (Index i = 0; i < m; ++i) {
    const AeLayer& layer = model.layers[static_cast<size_t>(i)];
    const Matrix& p = fb.offsets[static_cast<size_t>(i)];
    if (p.rows() != x.rows() || p.cols() != layer.hidden_dim) {
      throw std::invalid_argument("recompute: offset " + std::to_string(i + 1) +
                                  " has wrong shape");
    }
  }
  require_finite(x, "recompute(x)");
  require_finite(t, "recompute(t)");

  const TrainConfig& cfg = model.config;
  const double lambda = cfg.learning_rate;
  StackedModel updated = model;
  Matrix psi_hat = x;
  for (Index i = 0; i < m; ++i) {
    AeLayer& layer = updated.layers[static_cast<size_t>(i)];
    if (lambda > 0.0) {
      const Matrix& p = fb.offsets[static_cast<size_t>(i)];
      Matrix eta;
      if (!cfg.sparse) {
        eta = ridge_solve(psi_hat, p, cfg.ridge_ae);
      } else if (cfg.sparse->solver == SparseSolver::ijt) {
        IjtReport report;
        eta = ijt_solve(psi_hat, p, *cfg.sparse, &report);
        if (info != nullptr) info->ijt.push_back(std::move(report));
      } else {
        eta = svd_shrink_solve(ridge_solve(psi_hat, p, cfg.ridge_ae), *cfg.sparse);
      }
      if (info != nullptr) {
        info->eta_zeros.push_back((eta.array() == 0.0).count());
        info->eta_size.push_back(eta.size());
      }
      layer.forward_weight += lambda * eta;
      if (!layer.forward_weight.allFinite()) {
        throw NumericError("recompute: non-finite weights at layer " +
                           std::to_string(i + 1));
      }
    }
    psi_hat = encode(layer, psi_hat);
    if (!psi_hat.allFinite()) {
      throw NumericError("recompute: non-finite encoding at layer " +
                         std::to_string(i + 1));
    }
  }

  if (cfg.sparse && cfg.sparse->solver == SparseSolver::ijt) {
    // l1/2 output update: blend toward the sparse fit so that lambda = 0
    // keeps W_f exactly.
    if (lambda > 0.0) {
      const Matrix sparse_fit = ijt_solve(psi_hat, t, *cfg.sparse);
      updated.output_weight =
          model.output_weight + lambda * (sparse_fit - model.output_weight);
    }
  } else {
    updated.output_weight = ridge_solve(psi_hat, t, cfg.ridge_out);
  }
  updated.stage = ModelStage::recomputed;
  return updated;
}

/// Forward pass through the current weights: chained encodings times the
/// output weight.
inline Matrix predict(const StackedModel& model, const Matrix& x) {
  if (x.cols() != model.input_dim()) {
    throw std::invalid_argument("predict: input has " + std::to_string(x.cols()) +
                                " columns, model expects " +
                                std::to_string(model.input_dim()));
  }
  Matrix psi = x;
  for (const AeLayer& layer : model.layers) {
    psi = encode(layer, psi);
  }
  return psi * model.output_weight;
}

/// Row-wise argmax; ties resolve to the lowest class index.
inline std::vector<int> classify(const Matrix& scores) {
  if (scores.rows() < 1 || scores.cols() < 2) {
    throw std::invalid_argument("classify: scores must be nonempty with K >= 2");
  }
  std::vector<int> labels(static_cast<size_t>(scores.rows()));
  for (Index i = 0; i < scores.rows(); ++i) {
    int best = 0;
    for (Index j = 1; j < scores.cols(); ++j) {
      if (scores(i, j) > scores(i, best)) best = static_cast<int>(j);
    }
    labels[static_cast<size_t>(i)] = best;
  }
  return labels;
}

}  // namespace rmlmp
