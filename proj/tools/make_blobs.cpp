// Writes a synthetic Gaussian-blob dataset as a feature csv (or LSFM
// binary) plus a label file, for demos and smoke tests of the CLI.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "rmlmp/data.hpp"
#include "rmlmp/solver.hpp"

using namespace rmlmp;

int main(int argc, char** argv) {
  CLI::App app{"generate Gaussian blob features and labels"};
  Index per_class = 100;
  int classes = 3;
  Index dim = 10;
  double separation = 2.0;
  std::uint64_t seed = 0;
  std::string features_path = "features.csv";
  std::string labels_path = "labels.txt";
  bool binary = false;
  app.add_option("--per-class", per_class)->check(CLI::PositiveNumber);
  app.add_option("--classes", classes)->check(CLI::Range(2, 1000));
  app.add_option("--dim", dim)->check(CLI::PositiveNumber);
  app.add_option("--separation", separation);
  app.add_option("--seed", seed);
  app.add_option("--features", features_path);
  app.add_option("--labels", labels_path);
  app.add_flag("--binary", binary, "write LSFM binary instead of csv");
  CLI11_PARSE(app, argc, argv);

  Matrix means = gaussian_random(classes, dim, mix_seed(seed));
  for (int c = 0; c < classes; ++c) {
    means.row(c) *= separation / means.row(c).norm();
  }
  const Index n = per_class * classes;
  const Matrix noise = gaussian_random(n, dim, mix_seed(seed ^ 0xb10b5ULL));
  Matrix features(n, dim);
  std::vector<int> labels(static_cast<size_t>(n));
  for (int c = 0; c < classes; ++c) {
    for (Index i = 0; i < per_class; ++i) {
      const Index row = c * per_class + i;
      features.row(row) = means.row(c) + noise.row(row);
      labels[static_cast<size_t>(row)] = c;
    }
  }

  if (binary) {
    save_features_binary(features_path, features);
  } else {
    std::ofstream out(features_path);
    if (!out) {
      std::cerr << "cannot open " << features_path << "\n";
      return 2;
    }
    out.precision(17);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < dim; ++j) {
        out << features(i, j) << (j + 1 < dim ? "," : "\n");
      }
    }
  }
  std::ofstream out(labels_path);
  if (!out) {
    std::cerr << "cannot open " << labels_path << "\n";
    return 2;
  }
  for (int label : labels) out << label << "\n";
  std::cout << "wrote " << n << " samples to " << features_path << " / " << labels_path
            << "\n";
  return 0;
}
