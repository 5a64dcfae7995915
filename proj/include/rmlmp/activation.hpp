#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "rmlmp/types.hpp"

namespace rmlmp {

enum class ActKind { sigmoid, sine };

/// Elementwise nonlinearity plus the clip margin used by its inverse.
/// The sigmoid inverse is defined on (eps, 1-eps), the sine inverse on
/// [-1+eps, 1-eps]; inputs outside are clipped, not rejected.
struct Activation {
  ActKind kind = ActKind::sigmoid;
  double eps = 1e-6;
};

inline void validate(const Activation& act) {
  if (!(act.eps > 0.0) || !(act.eps < 0.5)) {
    throw std::invalid_argument("Activation: eps must lie in (0, 0.5)");
  }
}

inline const char* to_string(ActKind kind) {
  return kind == ActKind::sigmoid ? "sigmoid" : "sine";
}

inline ActKind act_kind_from_string(std::string_view name) {
  if (name == "sigmoid") return ActKind::sigmoid;
  if (name == "sine") return ActKind::sine;
  throw std::invalid_argument("unknown activation '" + std::string(name) +
                              "' (expected sigmoid or sine)");
}

inline Matrix act_apply(const Activation& act, const Matrix& x) {
  require_finite(x, "act_apply");
  if (act.kind == ActKind::sigmoid) {
    return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  }
  return x.unaryExpr([](double v) { return std::sin(v); });
}

/// Inverse activation with clipping. Entries outside the invertible range
/// are clipped to the margin; `clipped`, when given, receives their count.
inline Matrix act_inverse(const Activation& act, const Matrix& x,
                          std::size_t* clipped = nullptr) {
  validate(act);
  require_finite(x, "act_inverse");
  std::size_t n_clipped = 0;
  Matrix out;
  if (act.kind == ActKind::sigmoid) {
    const double lo = act.eps;
    const double hi = 1.0 - act.eps;
    out = x.unaryExpr([&](double v) {
      if (v < lo || v > hi) {
        ++n_clipped;
        v = v < lo ? lo : hi;
      }
      return std::log(v / (1.0 - v));
    });
  } else {
    const double lo = -1.0 + act.eps;
    const double hi = 1.0 - act.eps;
    out = x.unaryExpr([&](double v) {
      if (v < lo || v > hi) {
        ++n_clipped;
        v = v < lo ? lo : hi;
      }
      return std::asin(v);
    });
  }
  if (clipped != nullptr) *clipped = n_clipped;
  return out;
}

}  // namespace rmlmp
