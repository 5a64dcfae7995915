#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace rmlmp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised for malformed or unreadable input files (features, labels, models).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a computation produces or receives non-finite values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ridge regularization: the normal equations are loaded with I/C, so a
/// larger C means weaker regularization.
struct RidgeConfig {
  double c = 4.0;
};

inline void validate(const RidgeConfig& cfg) {
  if (!(cfg.c > 0.0) || !std::isfinite(cfg.c)) {
    throw std::invalid_argument("RidgeConfig: C must be positive and finite, got " +
                                std::to_string(cfg.c));
  }
}

inline void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": matrix contains NaN or Inf");
  }
}

// splitmix64; used to derive independent per-layer seeds from one run seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace rmlmp
