#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rmlmp/types.hpp"

namespace rmlmp {

enum class FeatureFormat { csv, binary };

namespace detail {

constexpr char kFeatureMagic[4] = {'L', 'S', 'F', 'M'};

inline double parse_double(std::string_view token, Index line, Index column) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataError("feature csv: cannot parse value at line " + std::to_string(line) +
                    ", column " + std::to_string(column));
  }
  if (!std::isfinite(value)) {
    throw DataError("feature csv: non-finite value at line " + std::to_string(line) +
                    ", column " + std::to_string(column));
  }
  return value;
}

}  // namespace detail

/// Loads a feature matrix, either as header-less CSV (one sample per line,
/// comma-separated decimals) or as the "LSFM" binary layout: magic, u32
/// rows, u32 cols, row-major little-endian 32-bit floats. Non-finite
/// entries are rejected with their location.
inline Matrix load_features(const std::string& path, FeatureFormat format) {
  if (format == FeatureFormat::csv) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open feature file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    Index line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) {
        throw DataError("feature csv: empty line " + std::to_string(line_no) + " in " + path);
      }
      std::vector<double> row;
      size_t start = 0;
      Index column = 0;
      while (true) {
        ++column;
        const size_t comma = line.find(',', start);
        const std::string_view token(line.data() + start,
                                     (comma == std::string::npos ? line.size() : comma) - start);
        row.push_back(detail::parse_double(token, line_no, column));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      if (!rows.empty() && row.size() != rows.front().size()) {
        throw DataError("feature csv: line " + std::to_string(line_no) + " has " +
                        std::to_string(row.size()) + " values, expected " +
                        std::to_string(rows.front().size()));
      }
      rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("feature csv: no rows in " + path);
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) {
        m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
      }
    }
    return m;
  }

  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature file: " + path);
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, detail::kFeatureMagic, 4) != 0) {
    throw DataError("feature file " + path + ": bad magic, expected \"LSFM\"");
  }
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  if (!in || rows == 0 || cols == 0) {
    throw DataError("feature file " + path + ": bad or missing shape header");
  }
  std::vector<float> buf(static_cast<size_t>(rows) * cols);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!in) {
    throw DataError("feature file " + path + ": truncated at byte offset " +
                    std::to_string(12 + in.gcount()));
  }
  Matrix m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) {
      const float v = buf[static_cast<size_t>(i) * cols + j];
      if (!std::isfinite(v)) {
        throw DataError("feature file " + path + ": non-finite value at row " +
                        std::to_string(i) + ", column " + std::to_string(j));
      }
      m(i, j) = static_cast<double>(v);
    }
  }
  return m;
}

/// Writes the "LSFM" binary feature layout (values narrowed to f32).
inline void save_features_binary(const std::string& path, const Matrix& m) {
  require_finite(m, "save_features_binary");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open feature file for writing: " + path);
  out.write(detail::kFeatureMagic, 4);
  const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
  const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      const float v = static_cast<float>(m(i, j));
      out.write(reinterpret_cast<const char*>(&v), sizeof(float));
    }
  }
  if (!out) throw DataError("failed writing feature file: " + path);
}

/// Label file: UTF-8, one base-10 integer per line.
inline std::vector<int> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label file: " + path);
  std::vector<int> labels;
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    int value = 0;
    const char* begin = line.data();
    const char* end = begin + line.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || line.empty()) {
      throw DataError("label file " + path + ": cannot parse line " +
                      std::to_string(line_no));
    }
    labels.push_back(value);
  }
  if (labels.empty()) throw DataError("label file " + path + ": no labels");
  return labels;
}

struct Dataset {
  Matrix features;
  std::vector<int> labels;
  int k = 0;

  Index n() const { return features.rows(); }
  Index dim() const { return features.cols(); }
};

inline Dataset make_dataset(Matrix features, std::vector<int> labels, int k) {
  if (features.rows() != static_cast<Index>(labels.size())) {
    throw DataError("dataset: " + std::to_string(features.rows()) + " feature rows vs " +
                    std::to_string(labels.size()) + " labels");
  }
  if (features.rows() < 1) throw DataError("dataset: empty");
  require_finite(features, "dataset features");
  if (k < 2) throw std::invalid_argument("dataset: class count must be >= 2");
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k) {
      throw DataError("dataset: label " + std::to_string(labels[i]) + " at row " +
                      std::to_string(i) + " outside [0, " + std::to_string(k) + ")");
    }
  }
  return Dataset{std::move(features), std::move(labels), k};
}

/// One-hot target matrix: row i carries a single 1 at labels[i].
inline Matrix one_hot(const std::vector<int>& labels, int k) {
  if (labels.empty()) throw std::invalid_argument("one_hot: empty label vector");
  if (k < 2) throw std::invalid_argument("one_hot: k must be >= 2");
  Matrix t = Matrix::Zero(static_cast<Index>(labels.size()), k);
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k) {
      throw std::invalid_argument("one_hot: label " + std::to_string(labels[i]) +
                                  " outside [0, " + std::to_string(k) + ")");
    }
    t(static_cast<Index>(i), labels[i]) = 1.0;
  }
  return t;
}

/// Horizontal concatenation of per-source feature blocks, in list order.
inline Matrix concat_features(const std::vector<Matrix>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_features: empty list");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const Matrix& p : parts) {
    if (p.rows() != rows) {
      throw DataError("concat_features: row counts differ (" + std::to_string(rows) +
                      " vs " + std::to_string(p.rows()) + ")");
    }
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Index offset = 0;
  for (const Matrix& p : parts) {
    out.middleCols(offset, p.cols()) = p;
    offset += p.cols();
  }
  return out;
}

struct ZScoreStats {
  Vector mean;
  Vector std;
};

/// Per-column mean and (population) standard deviation from training rows
/// only; constant columns get std 1 so that applying never divides by zero.
inline ZScoreStats zscore_fit(const Matrix& train) {
  if (train.rows() < 1) throw std::invalid_argument("zscore_fit: empty input");
  require_finite(train, "zscore_fit");
  ZScoreStats stats;
  stats.mean = train.colwise().mean();
  stats.std.resize(train.cols());
  for (Index j = 0; j < train.cols(); ++j) {
    const double var = (train.col(j).array() - stats.mean[j]).square().mean();
    const double sd = std::sqrt(var);
    stats.std[j] = sd < 1e-12 ? 1.0 : sd;
  }
  return stats;
}

inline Matrix zscore_apply(const ZScoreStats& stats, const Matrix& x) {
  if (x.cols() != stats.mean.size()) {
    throw std::invalid_argument("zscore_apply: width does not match fitted stats");
  }
  return (x.rowwise() - stats.mean.transpose()).array().rowwise() /
         stats.std.transpose().array();
}

namespace detail {

// Fisher-Yates with an explicit generator so the permutation is identical
// across standard libraries.
inline std::vector<Index> seeded_permutation(Index n, std::uint64_t seed) {
  std::vector<Index> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::mt19937_64 gen(seed);
  for (Index i = n - 1; i > 0; --i) {
    const Index j = static_cast<Index>(gen() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  return idx;
}

inline Dataset take_rows(const Dataset& ds, const std::vector<Index>& rows) {
  Matrix f(static_cast<Index>(rows.size()), ds.dim());
  std::vector<int> labels(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    f.row(static_cast<Index>(i)) = ds.features.row(rows[i]);
    labels[i] = ds.labels[static_cast<size_t>(rows[i])];
  }
  return Dataset{std::move(f), std::move(labels), ds.k};
}

}  // namespace detail

/// Deterministic seeded shuffle-and-split into (train, test). Both sides
/// must be nonempty.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction,
                                         std::uint64_t seed) {
  if (!(test_fraction > 0.0) || !(test_fraction < 1.0)) {
    throw std::invalid_argument("split: test fraction must lie in (0, 1)");
  }
  const Index n = ds.n();
  const Index n_test = static_cast<Index>(std::llround(static_cast<double>(n) * test_fraction));
  if (n_test < 1 || n_test >= n) {
    throw std::invalid_argument("split: fraction " + std::to_string(test_fraction) +
                                " leaves an empty side for " + std::to_string(n) +
                                " samples");
  }
  const std::vector<Index> perm = detail::seeded_permutation(n, seed);
  const std::vector<Index> train_rows(perm.begin(), perm.end() - n_test);
  const std::vector<Index> test_rows(perm.end() - n_test, perm.end());
  return {detail::take_rows(ds, train_rows), detail::take_rows(ds, test_rows)};
}

struct RowRange {
  Index start = 0;
  Index rows = 0;
};

/// Contiguous row chunks covering [0, rows); the last chunk may be short.
inline std::vector<RowRange> batch_ranges(Index rows, Index batch_size) {
  if (batch_size < 1) throw std::invalid_argument("batch_ranges: batch size must be >= 1");
  if (rows < 0) throw std::invalid_argument("batch_ranges: negative row count");
  std::vector<RowRange> ranges;
  for (Index start = 0; start < rows; start += batch_size) {
    ranges.push_back(RowRange{start, std::min(batch_size, rows - start)});
  }
  return ranges;
}

/// Visits (features, one-hot targets) for each contiguous batch in order.
template <typename Fn>
void for_each_batch(const Dataset& ds, Index batch_size, Fn&& fn) {
  const Matrix targets = one_hot(ds.labels, ds.k);
  for (const RowRange& r : batch_ranges(ds.n(), batch_size)) {
    fn(ds.features.middleRows(r.start, r.rows), targets.middleRows(r.start, r.rows));
  }
}

}  // namespace rmlmp
