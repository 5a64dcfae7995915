#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmlmp/solver.hpp"
#include "rmlmp/types.hpp"

namespace rmlmp {

enum class SparseSolver { ijt, svd_shrink };

/// Settings for the l1/2-penalized layer solvers. `mu <= 0` means the step
/// size is set automatically to 0.99 / lambda_max(psi^T psi) at solve time.
struct SparseConfig {
  double c = 1.0;
  double q = 0.5;
  double mu = 0.0;
  int max_iters = 500;
  double tol = 1e-9;
  SparseSolver solver = SparseSolver::ijt;
};

inline const char* to_string(SparseSolver s) {
  return s == SparseSolver::ijt ? "ijt" : "svd_shrink";
}

inline void validate(const SparseConfig& cfg) {
  if (!(cfg.c > 0.0) || !std::isfinite(cfg.c)) {
    throw std::invalid_argument("SparseConfig: c must be positive and finite");
  }
  if (!(cfg.q > 0.0) || !(cfg.q < 1.0)) {
    throw std::invalid_argument("SparseConfig: q must lie in (0, 1)");
  }
  if (!std::isfinite(cfg.mu)) {
    throw std::invalid_argument("SparseConfig: mu must be finite");
  }
  if (cfg.max_iters < 1) {
    throw std::invalid_argument("SparseConfig: max_iters must be positive");
  }
  if (!(cfg.tol > 0.0)) {
    throw std::invalid_argument("SparseConfig: tol must be positive");
  }
}

struct Thresholds {
  double tau = 0.0;
  double psi = 0.0;
};

/// Jumping-threshold pair of the lq proximity operator:
///   psi = (C mu (1-q))^{1/(2-q)},  tau = (2-q)/(2-2q) * psi.
/// Valid for any q in (0,1); requires an explicit positive mu.
inline Thresholds half_thresholds(const SparseConfig& cfg) {
  validate(cfg);
  if (!(cfg.mu > 0.0)) {
    throw std::invalid_argument("half_thresholds: mu must be positive (auto step not resolved)");
  }
  Thresholds th;
  th.psi = std::pow(cfg.c * cfg.mu * (1.0 - cfg.q), 1.0 / (2.0 - cfg.q));
  th.tau = (2.0 - cfg.q) / (2.0 - 2.0 * cfg.q) * th.psi;
  return th;
}

namespace detail {

// Exact scalar prox for q = 1/2 and penalty weight kappa:
//   argmin_x 0.5*(x - z)^2 + kappa*|x|^{1/2}.
// Above the jump point 1.5*kappa^{2/3} the minimizer is the largest root of
// x + (kappa/2) x^{-1/2} = z, obtained in closed form via the depressed
// cubic t^3 - |z| t + kappa/2 = 0 with x = t^2, then Newton-polished.
inline double half_prox_scalar(double z, double kappa) {
  if (kappa <= 0.0) return z;
  const double az = std::abs(z);
  const double jump = 1.5 * std::cbrt(kappa * kappa);
  if (az <= jump) return 0.0;
  const double arg =
      std::clamp(-(3.0 * kappa) / (4.0 * az) * std::sqrt(3.0 / az), -1.0, 1.0);
  const double t = 2.0 * std::sqrt(az / 3.0) * std::cos(std::acos(arg) / 3.0);
  double x = t * t;
  for (int i = 0; i < 2; ++i) {
    const double s = std::sqrt(x);
    const double g = x + 0.5 * kappa / s - az;
    const double dg = 1.0 - 0.25 * kappa / (s * x);
    if (dg <= 0.0) break;
    x -= g / dg;
  }
  return std::copysign(x, z);
}

inline double half_objective(const Matrix& psi, const Matrix& eta,
                             const Matrix& target, double c) {
  const double fit = 0.5 * (psi * eta - target).squaredNorm();
  const double pen = eta.array().abs().sqrt().sum();
  return fit + c * pen;
}

}  // namespace detail

/// Proximity operator of C*mu*|.|^{1/2}: the exact minimizer of
/// 0.5*(x - z)^2 + C*mu*|x|^{1/2}. Zero at and below the jump threshold;
/// otherwise the stationarity root z = x + sign(x)*(C*mu/2)*|x|^{-1/2}.
inline double half_prox(double z, const SparseConfig& cfg) {
  validate(cfg);
  if (cfg.q != 0.5) {
    throw std::invalid_argument("half_prox: closed form requires q = 1/2");
  }
  if (!(cfg.mu > 0.0)) {
    throw std::invalid_argument("half_prox: mu must be positive (auto step not resolved)");
  }
  if (!std::isfinite(z)) {
    throw std::invalid_argument("half_prox: z must be finite");
  }
  return detail::half_prox_scalar(z, cfg.c * cfg.mu);
}

/// Euclidean projection onto the l1 unit ball {x : ||x||_1 <= 1} by the
/// sort-and-shift simplex method. Signs are preserved; feasible inputs
/// pass through unchanged.
inline Vector l1_ball_project(const Vector& v) {
  if (!v.allFinite()) {
    throw std::invalid_argument("l1_ball_project: input contains NaN or Inf");
  }
  if (v.size() == 0) return v;
  if (v.lpNorm<1>() <= 1.0) return v;
  std::vector<double> u(v.size());
  for (Index i = 0; i < v.size(); ++i) u[static_cast<size_t>(i)] = std::abs(v[i]);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) {
      theta = candidate;
    } else {
      break;
    }
  }
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    out[i] = std::copysign(std::max(std::abs(v[i]) - theta, 0.0), v[i]);
  }
  return out;
}

struct SvdFactors {
  Matrix u;
  Vector s;
  Matrix vt;
};

inline SvdFactors svd_factors(const Matrix& m) {
  require_finite(m, "svd_factors");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return SvdFactors{svd.matrixU(), svd.singularValues(),
                    svd.matrixV().transpose()};
}

/// Singular-value shrinkage: P = U diag(s) V^T becomes
/// U diag(s - sqrt(C) * Proj_l1(s / sqrt(C))) V^T, with Proj_l1 the l1-ball
/// projection of the singular-value vector. Shrunk values stay nonnegative.
inline Matrix svd_shrink_solve(const Matrix& p_target, const SparseConfig& cfg) {
  validate(cfg);
  require_finite(p_target, "svd_shrink_solve");
  const SvdFactors f = svd_factors(p_target);
  const double root_c = std::sqrt(cfg.c);
  const Vector shrunk = f.s - root_c * l1_ball_project(f.s / root_c);
  return f.u * shrunk.asDiagonal() * f.vt;
}

/// Per-iteration diagnostics of ijt_solve.
struct IjtReport {
  int iterations = 0;
  double mu = 0.0;
  double tau = 0.0;            // operative jump threshold of the prox
  Index exact_zeros = 0;
  Index thresholded_inputs = 0;  // prox inputs below tau at the last iteration
  std::vector<double> objective;  // value before each update, then final
};

/// Iterative jumping thresholding for
///   min_eta 0.5*||psi*eta - p||_F^2 + C*sum_ij |eta_ij|^{1/2},
/// starting from eta = 0. Each sweep takes a gradient step of size mu and
/// applies the exact half prox elementwise, so the objective is
/// non-increasing for mu < 1/lambda_max(psi^T psi).
inline Matrix ijt_solve(const Matrix& psi, const Matrix& p_target,
                        const SparseConfig& cfg, IjtReport* report = nullptr) {
  validate(cfg);
  if (cfg.q != 0.5) {
    throw std::invalid_argument("ijt_solve: shipped prox requires q = 1/2");
  }
  if (psi.rows() != p_target.rows()) {
    throw std::invalid_argument("ijt_solve: row counts differ (" +
                                std::to_string(psi.rows()) + " vs " +
                                std::to_string(p_target.rows()) + ")");
  }
  require_finite(psi, "ijt_solve(psi)");
  require_finite(p_target, "ijt_solve(p_target)");

  Matrix eta = Matrix::Zero(psi.cols(), p_target.cols());
  double mu = cfg.mu;
  if (mu <= 0.0) {
    const double lmax = gram_spectral_radius(psi);
    if (lmax <= 0.0) {
      // Zero design matrix: eta = 0 already minimizes the objective.
      if (report != nullptr) *report = IjtReport{};
      return eta;
    }
    mu = 0.99 / lmax;
  }

  const double kappa = cfg.c * mu;
  const double tau = 1.5 * std::cbrt(kappa * kappa);
  if (report != nullptr) {
    report->mu = mu;
    report->tau = tau;
    report->objective.clear();
  }

  int iters = 0;
  Index below_tau = 0;
  for (int it = 0; it < cfg.max_iters; ++it) {
    if (report != nullptr) {
      report->objective.push_back(detail::half_objective(psi, eta, p_target, cfg.c));
    }
    const Matrix z = eta - mu * (psi.transpose() * (psi * eta - p_target));
    below_tau = (z.array().abs() <= tau).count();
    Matrix next = z.unaryExpr([kappa](double v) {
      return detail::half_prox_scalar(v, kappa);
    });
    const double delta = (next - eta).array().abs().maxCoeff();
    eta.swap(next);
    ++iters;
    if (delta < cfg.tol) break;
  }
  if (!eta.allFinite()) {
    throw NumericError("ijt_solve: iteration diverged to non-finite values");
  }
  if (report != nullptr) {
    report->objective.push_back(detail::half_objective(psi, eta, p_target, cfg.c));
    report->iterations = iters;
    report->exact_zeros = (eta.array() == 0.0).count();
    report->thresholded_inputs = below_tau;
  }
  return eta;
}

}  // namespace rmlmp
