#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "rmlmp/data.hpp"
#include "rmlmp/network.hpp"
#include "rmlmp/types.hpp"

namespace rmlmp {

// Model file layout, version 1. All integers and floats little-endian.
//   "RMLM" | u16 version | u8 stage | u8 activation kind | f64 eps
//   f64 c_ae | f64 c_out | f64 lambda | u64 seed
//   u32 M | M x u32 hidden | M x u64 layer seeds
//   u8 has_sparse [ f64 c | f64 q | f64 mu | u32 max_iters | f64 tol | u8 solver ]
//   u8 has_normalization [ u32 d | d x f64 mean | d x f64 std ]
//   u32 n_matrices (= M+1) | per matrix: u32 rows | u32 cols | row-major f64
// Matrices are the layer forward weights in order, then the output weight.

namespace detail {

constexpr char kModelMagic[4] = {'R', 'M', 'L', 'M'};
constexpr std::uint16_t kModelVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw DataError(std::string("model file truncated while reading ") + what);
  return value;
}

inline void write_matrix(std::ostream& out, const Matrix& m) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      write_pod<double>(out, m(i, j));
    }
  }
}

inline Matrix read_matrix(std::istream& in, const char* what) {
  const auto rows = read_pod<std::uint32_t>(in, what);
  const auto cols = read_pod<std::uint32_t>(in, what);
  if (rows == 0 || cols == 0) {
    throw DataError(std::string("model file: empty matrix for ") + what);
  }
  Matrix m(rows, cols);
  std::vector<double> buf(static_cast<size_t>(rows) * cols);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(double)));
  if (!in) throw DataError(std::string("model file truncated while reading ") + what);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) {
      m(i, j) = buf[static_cast<size_t>(i) * cols + j];
    }
  }
  if (!m.allFinite()) {
    throw DataError(std::string("model file: non-finite entries in ") + what);
  }
  return m;
}

}  // namespace detail

/// Optional z-score statistics travel with the model so that prediction
/// can reproduce the training-time preprocessing.
struct PersistedModel {
  StackedModel model;
  std::optional<ZScoreStats> normalization;
};

inline void save_model(const PersistedModel& pm, const std::string& path) {
  const StackedModel& model = pm.model;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open model file for writing: " + path);
  out.write(detail::kModelMagic, 4);
  detail::write_pod<std::uint16_t>(out, detail::kModelVersion);
  detail::write_pod<std::uint8_t>(out, model.stage == ModelStage::recomputed ? 1 : 0);
  detail::write_pod<std::uint8_t>(
      out, model.config.activation.kind == ActKind::sine ? 1 : 0);
  detail::write_pod<double>(out, model.config.activation.eps);
  detail::write_pod<double>(out, model.config.ridge_ae.c);
  detail::write_pod<double>(out, model.config.ridge_out.c);
  detail::write_pod<double>(out, model.config.learning_rate);
  detail::write_pod<std::uint64_t>(out, model.config.seed);
  detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(model.layers.size()));
  for (const AeLayer& layer : model.layers) {
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(layer.hidden_dim));
  }
  for (const AeLayer& layer : model.layers) {
    detail::write_pod<std::uint64_t>(out, layer.random_seed);
  }
  detail::write_pod<std::uint8_t>(out, model.config.sparse ? 1 : 0);
  if (model.config.sparse) {
    const SparseConfig& sp = *model.config.sparse;
    detail::write_pod<double>(out, sp.c);
    detail::write_pod<double>(out, sp.q);
    detail::write_pod<double>(out, sp.mu);
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(sp.max_iters));
    detail::write_pod<double>(out, sp.tol);
    detail::write_pod<std::uint8_t>(out, sp.solver == SparseSolver::svd_shrink ? 1 : 0);
  }
  detail::write_pod<std::uint8_t>(out, pm.normalization ? 1 : 0);
  if (pm.normalization) {
    const ZScoreStats& st = *pm.normalization;
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(st.mean.size()));
    for (Index i = 0; i < st.mean.size(); ++i) detail::write_pod<double>(out, st.mean[i]);
    for (Index i = 0; i < st.std.size(); ++i) detail::write_pod<double>(out, st.std[i]);
  }
  detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(model.layers.size() + 1));
  for (const AeLayer& layer : model.layers) {
    detail::write_matrix(out, layer.forward_weight);
  }
  detail::write_matrix(out, model.output_weight);
  if (!out) throw DataError("failed writing model file: " + path);
}

inline PersistedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, detail::kModelMagic, 4) != 0) {
    throw DataError("model file " + path + ": bad magic, expected \"RMLM\"");
  }
  const auto version = detail::read_pod<std::uint16_t>(in, "version");
  if (version != detail::kModelVersion) {
    throw DataError("model file " + path + ": unsupported version " +
                    std::to_string(version));
  }

  PersistedModel pm;
  StackedModel& model = pm.model;
  const auto stage = detail::read_pod<std::uint8_t>(in, "stage");
  if (stage > 1) throw DataError("model file: invalid stage byte");
  model.stage = stage == 1 ? ModelStage::recomputed : ModelStage::initialized;
  const auto act = detail::read_pod<std::uint8_t>(in, "activation");
  if (act > 1) throw DataError("model file: invalid activation byte");
  model.config.activation.kind = act == 1 ? ActKind::sine : ActKind::sigmoid;
  model.config.activation.eps = detail::read_pod<double>(in, "activation eps");
  model.config.ridge_ae.c = detail::read_pod<double>(in, "c_ae");
  model.config.ridge_out.c = detail::read_pod<double>(in, "c_out");
  model.config.learning_rate = detail::read_pod<double>(in, "lambda");
  model.config.seed = detail::read_pod<std::uint64_t>(in, "seed");

  const auto m = detail::read_pod<std::uint32_t>(in, "layer count");
  if (m == 0) throw DataError("model file: zero layers");
  model.config.hidden.resize(m);
  for (std::uint32_t i = 0; i < m; ++i) {
    model.config.hidden[i] = detail::read_pod<std::uint32_t>(in, "hidden size");
  }
  std::vector<std::uint64_t> seeds(m);
  for (std::uint32_t i = 0; i < m; ++i) {
    seeds[i] = detail::read_pod<std::uint64_t>(in, "layer seed");
  }
  if (detail::read_pod<std::uint8_t>(in, "sparse flag") != 0) {
    SparseConfig sp;
    sp.c = detail::read_pod<double>(in, "sparse c");
    sp.q = detail::read_pod<double>(in, "sparse q");
    sp.mu = detail::read_pod<double>(in, "sparse mu");
    sp.max_iters = static_cast<int>(detail::read_pod<std::uint32_t>(in, "sparse iters"));
    sp.tol = detail::read_pod<double>(in, "sparse tol");
    sp.solver = detail::read_pod<std::uint8_t>(in, "sparse solver") == 1
                    ? SparseSolver::svd_shrink
                    : SparseSolver::ijt;
    model.config.sparse = sp;
  }
  if (detail::read_pod<std::uint8_t>(in, "normalization flag") != 0) {
    const auto d = detail::read_pod<std::uint32_t>(in, "normalization dim");
    ZScoreStats st;
    st.mean.resize(d);
    st.std.resize(d);
    for (std::uint32_t i = 0; i < d; ++i) st.mean[i] = detail::read_pod<double>(in, "mean");
    for (std::uint32_t i = 0; i < d; ++i) st.std[i] = detail::read_pod<double>(in, "std");
    pm.normalization = std::move(st);
  }

  const auto n_matrices = detail::read_pod<std::uint32_t>(in, "matrix count");
  if (n_matrices != m + 1) {
    throw DataError("model file: expected " + std::to_string(m + 1) +
                    " matrices, found " + std::to_string(n_matrices));
  }
  Index prev_width = -1;
  for (std::uint32_t i = 0; i < m; ++i) {
    AeLayer layer;
    layer.forward_weight = detail::read_matrix(in, "layer weight");
    layer.random_seed = seeds[i];
    layer.activation = model.config.activation;
    layer.in_dim = layer.forward_weight.rows();
    layer.hidden_dim = layer.forward_weight.cols();
    if (layer.hidden_dim != model.config.hidden[i]) {
      throw DataError("model file: layer " + std::to_string(i + 1) +
                      " width disagrees with recorded hidden size");
    }
    if (prev_width >= 0 && layer.in_dim != prev_width) {
      throw DataError("model file: broken shape chain at layer " + std::to_string(i + 1));
    }
    prev_width = layer.hidden_dim;
    model.layers.push_back(std::move(layer));
  }
  model.output_weight = detail::read_matrix(in, "output weight");
  if (model.output_weight.rows() != prev_width) {
    throw DataError("model file: output weight does not match final layer width");
  }
  if (pm.normalization &&
      pm.normalization->mean.size() != model.input_dim()) {
    throw DataError("model file: normalization stats do not match input width");
  }
  return pm;
}

}  // namespace rmlmp
