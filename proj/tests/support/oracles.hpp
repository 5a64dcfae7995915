#pragma once

#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "rmlmp/types.hpp"

// Independent reference implementations used only by tests. They take the
// explicit-inverse / brute-force route on purpose and must stay decoupled
// from the library's solve paths.

namespace rmlmp::testing {

/// (I/C + psi^T psi)^{-1} psi^T t via an explicit dense inverse.
inline Matrix ridge_oracle(const Matrix& psi, const Matrix& t, double c) {
  const Index p = psi.cols();
  const Matrix lhs = Matrix::Identity(p, p) / c + psi.transpose() * psi;
  return lhs.inverse() * (psi.transpose() * t);
}

/// (I/C + w^T w)^{-1} w^T via an explicit dense inverse.
inline Matrix pinv_oracle(const Matrix& w, double c) {
  const Index b = w.cols();
  const Matrix lhs = Matrix::Identity(b, b) / c + w.transpose() * w;
  return lhs.inverse() * w.transpose();
}

/// Scalar logit with clipping, written out directly.
inline double logit_clipped(double v, double eps) {
  if (v < eps) v = eps;
  if (v > 1.0 - eps) v = 1.0 - eps;
  return std::log(v / (1.0 - v));
}

/// Grid-search argmin of the scalar half prox objective
/// 0.5*(x-z)^2 + kappa*|x|^{1/2} over all multiples of `step` in
/// [-range, range] (so x = 0 is always a candidate).
inline double half_prox_grid_oracle(double z, double kappa, double step = 1e-4) {
  const long long k_max = static_cast<long long>((std::abs(z) + 1.0) / step);
  double best_x = 0.0;
  double best_f = std::numeric_limits<double>::infinity();
  for (long long k = -k_max; k <= k_max; ++k) {
    const double x = static_cast<double>(k) * step;
    const double f = 0.5 * (x - z) * (x - z) + kappa * std::sqrt(std::abs(x));
    if (f < best_f) {
      best_f = f;
      best_x = x;
    }
  }
  return best_x;
}

/// Projection of a 2-vector onto the l1 ball by brute-force scan of the
/// whole ball on a fine grid.
inline Vector l1_project_grid_oracle(const Vector& v, double step = 1e-3) {
  Vector best = Vector::Zero(2);
  double best_d = std::numeric_limits<double>::infinity();
  for (double a = -1.0; a <= 1.0 + 1e-12; a += step) {
    const double b_max = 1.0 - std::abs(a);
    for (double b = -b_max; b <= b_max + 1e-12; b += step) {
      const double d = (v[0] - a) * (v[0] - a) + (v[1] - b) * (v[1] - b);
      if (d < best_d) {
        best_d = d;
        best[0] = a;
        best[1] = b;
      }
    }
  }
  return best;
}

/// Best 1-sparse support by exhaustive enumeration: for every single
/// column, the exact least-squares coefficient and residual.
inline std::set<Index> one_sparse_support_oracle(const Matrix& psi, const Matrix& p) {
  double best_resid = std::numeric_limits<double>::infinity();
  Index best_col = 0;
  for (Index j = 0; j < psi.cols(); ++j) {
    const double denom = psi.col(j).squaredNorm();
    if (denom <= 0.0) continue;
    const double coef = (psi.col(j).transpose() * p).value() / denom;
    const double resid = (p - psi.col(j) * coef).squaredNorm();
    if (resid < best_resid) {
      best_resid = resid;
      best_col = j;
    }
  }
  return {best_col};
}

}  // namespace rmlmp::testing
