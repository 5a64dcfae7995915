#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "rmlmp/activation.hpp"
#include "rmlmp/solver.hpp"
#include "rmlmp/types.hpp"

namespace rmlmp {

/// One trained encoding layer. Only the learned forward weight is kept;
/// the random hidden weight is reconstructible from `random_seed`.
struct AeLayer {
  Matrix forward_weight;  // in_dim x hidden_dim
  std::uint64_t random_seed = 0;
  Activation activation;
  Index in_dim = 0;
  Index hidden_dim = 0;
};

/// Trains a least-squares autoencoder in closed form: random orthonormal
/// hidden weights W, hidden encoding act(X W), output weights by ridge
/// regression against X. The layer's forward weight is the transpose of
/// the learned output weight.
inline AeLayer train_ae(const Matrix& x, Index hidden, const RidgeConfig& cfg,
                        const Activation& act, std::uint64_t seed) {
  if (x.rows() < 1 || x.cols() < 1 || hidden < 1) {
    throw std::invalid_argument("train_ae: degenerate dimensions");
  }
  require_finite(x, "train_ae");
  validate(act);
  const Matrix w = orthonormal_random(x.cols(), hidden, seed);
  const Matrix hidden_enc = act_apply(act, x * w);
  const Matrix w_e = ridge_solve(hidden_enc, x, cfg);  // hidden x in_dim
  AeLayer layer;
  layer.forward_weight = w_e.transpose();
  layer.random_seed = seed;
  layer.activation = act;
  layer.in_dim = x.cols();
  layer.hidden_dim = hidden;
  return layer;
}

/// train_ae with the ridge solve accumulated over contiguous row chunks of
/// `batch_rows`; identical result up to summation order.
inline AeLayer train_ae_batched(const Matrix& x, Index hidden, const RidgeConfig& cfg,
                                const Activation& act, std::uint64_t seed,
                                Index batch_rows) {
  if (batch_rows < 1) {
    return train_ae(x, hidden, cfg, act, seed);
  }
  if (x.rows() < 1 || x.cols() < 1 || hidden < 1) {
    throw std::invalid_argument("train_ae: degenerate dimensions");
  }
  require_finite(x, "train_ae");
  validate(act);
  const Matrix w = orthonormal_random(x.cols(), hidden, seed);
  GramState state(hidden, x.cols());
  for (Index start = 0; start < x.rows(); start += batch_rows) {
    const Index rows = std::min(batch_rows, x.rows() - start);
    const Matrix chunk = x.middleRows(start, rows);
    gram_absorb(state, act_apply(act, chunk * w), chunk);
  }
  const Matrix w_e = gram_finalize(state, cfg);
  AeLayer layer;
  layer.forward_weight = w_e.transpose();
  layer.random_seed = seed;
  layer.activation = act;
  layer.in_dim = x.cols();
  layer.hidden_dim = hidden;
  return layer;
}

inline Matrix encode(const AeLayer& layer, const Matrix& x) {
  if (x.cols() != layer.in_dim) {
    throw std::invalid_argument("encode: input has " + std::to_string(x.cols()) +
                                " columns, layer expects " +
                                std::to_string(layer.in_dim));
  }
  return act_apply(layer.activation, x * layer.forward_weight);
}

}  // namespace rmlmp
