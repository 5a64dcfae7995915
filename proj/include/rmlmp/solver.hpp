#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include "rmlmp/types.hpp"

namespace rmlmp {

/// Solves (I/C + gram) W = cross for W. `gram` must be the (symmetric,
/// positive semidefinite) accumulated normal matrix.
inline Matrix solve_loaded_normal(const Matrix& gram, const Matrix& cross,
                                  const RidgeConfig& cfg) {
  validate(cfg);
  if (gram.rows() != gram.cols() || gram.rows() != cross.rows()) {
    throw std::invalid_argument("solve_loaded_normal: gram/cross dimension mismatch");
  }
  Matrix lhs = gram;
  lhs.diagonal().array() += 1.0 / cfg.c;
  Matrix w = lhs.ldlt().solve(cross);
  if (!w.allFinite()) {
    throw NumericError("solve_loaded_normal: solve produced non-finite weights");
  }
  return w;
}

/// Running sums for batch-by-batch ridge training: gram accumulates
/// psi^T psi, cross accumulates psi^T target. Single writer; merge
/// shard states by summing fields.
struct GramState {
  Matrix gram;
  Matrix cross;
  Index rows_seen = 0;

  GramState(Index p, Index q)
      : gram(Matrix::Zero(p, p)), cross(Matrix::Zero(p, q)) {
    if (p < 1 || q < 1) {
      throw std::invalid_argument("GramState: dimensions must be positive");
    }
  }
};

inline void gram_absorb(GramState& state, const Matrix& psi_batch,
                        const Matrix& target_batch) {
  if (psi_batch.rows() != target_batch.rows()) {
    throw std::invalid_argument("gram_absorb: batch row counts differ (" +
                                std::to_string(psi_batch.rows()) + " vs " +
                                std::to_string(target_batch.rows()) + ")");
  }
  if (psi_batch.rows() < 1) {
    throw std::invalid_argument("gram_absorb: empty batch");
  }
  if (psi_batch.cols() != state.gram.cols() || target_batch.cols() != state.cross.cols()) {
    throw std::invalid_argument("gram_absorb: batch column counts do not match state");
  }
  require_finite(psi_batch, "gram_absorb(psi)");
  require_finite(target_batch, "gram_absorb(target)");
  state.gram.noalias() += psi_batch.transpose() * psi_batch;
  state.cross.noalias() += psi_batch.transpose() * target_batch;
  state.rows_seen += psi_batch.rows();
}

inline Matrix gram_finalize(const GramState& state, const RidgeConfig& cfg) {
  if (state.rows_seen < 1) {
    throw std::invalid_argument("gram_finalize: no rows absorbed");
  }
  return solve_loaded_normal(state.gram, state.cross, cfg);
}

/// Regularized least squares: W = (I/C + psi^T psi)^{-1} psi^T target.
/// Routed through GramState so that batched and one-shot training share
/// one code path.
inline Matrix ridge_solve(const Matrix& psi, const Matrix& target,
                          const RidgeConfig& cfg) {
  validate(cfg);
  if (psi.rows() != target.rows()) {
    throw std::invalid_argument("ridge_solve: row counts differ (" +
                                std::to_string(psi.rows()) + " vs " +
                                std::to_string(target.rows()) + ")");
  }
  GramState state(psi.cols(), target.cols());
  gram_absorb(state, psi, target);
  return gram_finalize(state, cfg);
}

/// Regularized pseudoinverse (I/C + W^T W)^{-1} W^T. Converges to the
/// Moore-Penrose inverse of W as C grows.
inline Matrix pinv_reg(const Matrix& w, const RidgeConfig& cfg) {
  validate(cfg);
  require_finite(w, "pinv_reg");
  return solve_loaded_normal(w.transpose() * w, w.transpose(), cfg);
}

/// Standard-normal matrix generated by a self-contained Box-Muller over
/// mt19937_64 so that a seed pins the exact bits regardless of the
/// standard library's distribution implementation.
inline Matrix gaussian_random(Index rows, Index cols, std::uint64_t seed) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("gaussian_random: dimensions must be positive");
  }
  std::mt19937_64 gen(seed);
  auto unit = [&gen] { return (gen() >> 11) * 0x1.0p-53; };  // [0, 1)
  Matrix m(rows, cols);
  double spare = 0.0;
  bool has_spare = false;
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      if (has_spare) {
        m(i, j) = spare;
        has_spare = false;
        continue;
      }
      double u1 = unit();
      while (u1 <= 0.0) u1 = unit();
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double theta = 2.0 * M_PI * unit();
      m(i, j) = r * std::cos(theta);
      spare = r * std::sin(theta);
      has_spare = true;
    }
  }
  return m;
}

/// Seeded random weights orthonormalized along the feasible dimension:
/// columns when n_hidden <= n_in (W^T W = I), rows otherwise (W W^T = I).
inline Matrix orthonormal_random(Index n_in, Index n_hidden, std::uint64_t seed) {
  if (n_in < 1 || n_hidden < 1) {
    throw std::invalid_argument("orthonormal_random: dimensions must be positive");
  }
  if (n_hidden <= n_in) {
    const Matrix g = gaussian_random(n_in, n_hidden, seed);
    Eigen::HouseholderQR<Matrix> qr(g);
    return qr.householderQ() * Matrix::Identity(n_in, n_hidden);
  }
  const Matrix g = gaussian_random(n_hidden, n_in, seed);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n_hidden, n_in);
  return q.transpose();
}

/// Power-iteration estimate of lambda_max(psi^T psi); 50 iterations with
/// relative tolerance 1e-6, deterministic start vector.
inline double gram_spectral_radius(const Matrix& psi) {
  require_finite(psi, "gram_spectral_radius");
  const Index p = psi.cols();
  if (p == 0 || psi.rows() == 0) return 0.0;
  if (psi.isZero(0.0)) return 0.0;
  Vector v = gaussian_random(p, 1, 0x5eedULL);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 50; ++it) {
    Vector w = psi.transpose() * (psi * v);
    const double norm = w.norm();
    if (norm <= 0.0) return 0.0;
    const double prev = lambda;
    lambda = norm;
    v = w / norm;
    if (it > 0 && std::abs(lambda - prev) <= 1e-6 * std::max(lambda, 1.0)) break;
  }
  return lambda;
}

}  // namespace rmlmp
