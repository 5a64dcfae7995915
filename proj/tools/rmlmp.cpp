// rmlmp: train / predict / compare for the LS-based recomputation networks.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rmlmp/data.hpp"
#include "rmlmp/eval.hpp"
#include "rmlmp/model_io.hpp"
#include "rmlmp/network.hpp"

namespace {

using namespace rmlmp;

struct CliConfig {
  std::vector<std::string> features;
  std::string labels;
  std::vector<std::string> model_names;  // variant(s); compare accepts a list
  int aes = 2;
  Index neurons = 1000;
  double c_ae = 4.0;
  double c_out = 4.0;
  std::vector<double> lambdas;
  std::string activation = "sigmoid";
  double sparse_c = 1.0;
  std::string sparse_solver = "ijt";
  bool normalize = false;
  Index batch_size = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string metrics = "metrics.jsonl";
  bool grid = false;
  double test_fraction = 0.2;
  std::string model_file;
};

FeatureFormat sniff_format(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  if (in && std::memcmp(magic, "LSFM", 4) == 0) return FeatureFormat::binary;
  return FeatureFormat::csv;
}

Matrix load_feature_set(const std::vector<std::string>& paths) {
  std::vector<Matrix> parts;
  parts.reserve(paths.size());
  for (const std::string& p : paths) {
    parts.push_back(load_features(p, sniff_format(p)));
  }
  return concat_features(parts);
}

std::string dataset_name_of(const std::vector<std::string>& paths) {
  std::string name;
  for (const std::string& p : paths) {
    if (!name.empty()) name += "+";
    name += std::filesystem::path(p).stem().string();
  }
  return name.empty() ? "dataset" : name;
}

TrainConfig build_train_config(const CliConfig& cli, ModelVariant variant,
                               double lambda) {
  TrainConfig cfg;
  cfg.hidden.assign(static_cast<size_t>(cli.aes), cli.neurons);
  cfg.ridge_ae.c = cli.c_ae;
  cfg.ridge_out.c = cli.c_out;
  cfg.learning_rate = lambda;
  cfg.activation.kind = act_kind_from_string(cli.activation);
  cfg.seed = cli.seed;
  if (variant == ModelVariant::srml_mp) {
    SparseConfig sp;
    sp.c = cli.sparse_c;
    sp.solver = cli.sparse_solver == "svd" ? SparseSolver::svd_shrink : SparseSolver::ijt;
    cfg.sparse = sp;
  }
  validate(cfg);
  return cfg;
}

void echo_config(const CliConfig& cli, const std::string& command,
                 ModelVariant variant, double lambda) {
  std::cout << "config: command = " << command << "\n";
  std::cout << "config: model = " << to_string(variant) << "\n";
  std::cout << "config: features =";
  for (const std::string& p : cli.features) std::cout << " " << p;
  std::cout << "\n";
  if (!cli.labels.empty()) std::cout << "config: labels = " << cli.labels << "\n";
  std::cout << "config: aes = " << cli.aes << "\n";
  std::cout << "config: neurons = " << cli.neurons << "\n";
  std::cout << "config: c-ae = " << cli.c_ae << "\n";
  std::cout << "config: c-out = " << cli.c_out << "\n";
  std::cout << "config: lambda = " << lambda << "\n";
  std::cout << "config: activation = " << cli.activation << "\n";
  if (variant == ModelVariant::srml_mp) {
    std::cout << "config: sparse-c = " << cli.sparse_c << "\n";
    std::cout << "config: sparse-solver = " << cli.sparse_solver << "\n";
  }
  std::cout << "config: normalize = " << (cli.normalize ? "true" : "false") << "\n";
  std::cout << "config: batch-size = " << cli.batch_size << "\n";
  std::cout << "config: seed = " << cli.seed << "\n";
  if (!cli.out.empty()) std::cout << "config: out = " << cli.out << "\n";
}

int run_train(const CliConfig& cli) {
  if (cli.features.empty() || cli.labels.empty() || cli.out.empty()) {
    std::cerr << "train: --features, --labels and --out are required\n";
    return 1;
  }
  if (cli.model_names.size() > 1) {
    std::cerr << "train: exactly one --model variant expected\n";
    return 1;
  }
  const ModelVariant variant = variant_from_string(
      cli.model_names.empty() ? "rml-mp" : cli.model_names.front());

  Matrix features = load_feature_set(cli.features);
  const std::vector<int> labels = load_labels(cli.labels);
  int k = 0;
  for (int label : labels) k = std::max(k, label + 1);
  Dataset ds = make_dataset(std::move(features), labels, std::max(k, 2));

  std::optional<ZScoreStats> stats;
  if (cli.normalize) {
    stats = zscore_fit(ds.features);
    ds.features = zscore_apply(*stats, ds.features);
  }
  const Matrix targets = one_hot(ds.labels, ds.k);

  std::vector<double> lambdas = cli.lambdas.empty() ? std::vector<double>{0.5} : cli.lambdas;
  double lambda = lambdas.front();
  if (lambdas.size() > 1 && variant != ModelVariant::mls) {
    // pick lambda on a 90/10 validation sub-split
    const auto [sub, val] = split(ds, 0.1, mix_seed(cli.seed ^ 0x76a1u));
    const Matrix t_sub = one_hot(sub.labels, sub.k);
    double best_acc = -1.0;
    for (double cand : lambdas) {
      const TrainConfig cfg = build_train_config(cli, variant, cand);
      const StackedModel m = train_variant(sub.features, t_sub, cfg, variant, cli.batch_size);
      const double acc = top1_accuracy(predict(m, val.features), val.labels);
      if (acc > best_acc) {
        best_acc = acc;
        lambda = cand;
      }
    }
  }

  const TrainConfig cfg = build_train_config(cli, variant, lambda);
  echo_config(cli, "train", variant, lambda);

  const auto begin = std::chrono::steady_clock::now();
  const StackedModel model = train_variant(ds.features, targets, cfg, variant, cli.batch_size);
  const auto end = std::chrono::steady_clock::now();

  save_model(PersistedModel{model, stats}, cli.out);
  const double train_top1 = top1_accuracy(predict(model, ds.features), ds.labels);
  std::cout << "trained " << to_string(variant) << " on " << ds.n() << " samples ("
            << ds.dim() << " features, " << ds.k << " classes) in "
            << std::chrono::duration<double>(end - begin).count() << " s\n";
  std::cout << "training top-1 = " << train_top1 << "\n";
  std::cout << "model written to " << cli.out << "\n";
  return 0;
}

int run_predict(const CliConfig& cli) {
  if (cli.features.empty() || cli.model_file.empty() || cli.out.empty()) {
    std::cerr << "predict: --features, --model-file and --out are required\n";
    return 1;
  }
  const PersistedModel pm = load_model(cli.model_file);
  Matrix features = load_feature_set(cli.features);
  if (features.cols() != pm.model.input_dim()) {
    throw DataError("predict: feature width " + std::to_string(features.cols()) +
                    " does not match model input dimension " +
                    std::to_string(pm.model.input_dim()));
  }
  if (pm.normalization) {
    features = zscore_apply(*pm.normalization, features);
  }
  const std::vector<int> labels = classify(predict(pm.model, features));
  std::ofstream out(cli.out);
  if (!out) throw DataError("cannot open prediction output: " + cli.out);
  for (int label : labels) out << label << "\n";
  if (!out) throw DataError("failed writing predictions: " + cli.out);
  std::cout << "wrote " << labels.size() << " predictions to " << cli.out << "\n";
  return 0;
}

int run_compare(const CliConfig& cli) {
  if (cli.features.empty() || cli.labels.empty()) {
    std::cerr << "compare: --features and --labels are required\n";
    return 1;
  }
  Matrix features = load_feature_set(cli.features);
  const std::vector<int> labels = load_labels(cli.labels);
  int k = 0;
  for (int label : labels) k = std::max(k, label + 1);
  const Dataset all = make_dataset(std::move(features), labels, std::max(k, 2));
  auto [train, test] = split(all, cli.test_fraction, cli.seed);
  if (cli.normalize) {
    const ZScoreStats stats = zscore_fit(train.features);
    train.features = zscore_apply(stats, train.features);
    test.features = zscore_apply(stats, test.features);
  }

  CompareSpec spec;
  const std::vector<std::string> names =
      cli.model_names.empty() ? std::vector<std::string>{"mls", "rml-mp", "srml-mp"}
                              : cli.model_names;
  for (const std::string& name : names) {
    spec.variants.push_back(variant_from_string(name));
  }
  spec.train = std::move(train);
  spec.test = std::move(test);
  spec.dataset_name = dataset_name_of(cli.features);
  spec.base = build_train_config(
      cli, spec.variants.front() == ModelVariant::srml_mp ? ModelVariant::srml_mp
                                                          : ModelVariant::mls,
      0.0);
  {  // srml-mp anywhere in the list needs the sparse settings available
    SparseConfig sp;
    sp.c = cli.sparse_c;
    sp.solver = cli.sparse_solver == "svd" ? SparseSolver::svd_shrink : SparseSolver::ijt;
    spec.base.sparse = sp;
  }
  if (!cli.lambdas.empty()) spec.lambda_grid = cli.lambdas;
  if (cli.grid) spec.grid = HyperGrid{};
  spec.batch_rows = cli.batch_size;

  echo_config(cli, "compare", spec.variants.front(), 0.0);
  std::cout << "config: test-fraction = " << cli.test_fraction << "\n";
  std::cout << "config: lambda-grid =";
  for (double l : spec.lambda_grid) std::cout << " " << l;
  std::cout << "\n";
  std::cout << "config: grid-sweep = " << (cli.grid ? "true" : "false") << "\n";
  std::cout << "config: metrics = " << cli.metrics << "\n";

  const std::vector<RunReport> reports = rmlmp::run_compare(spec);
  write_metrics(reports, cli.metrics);
  for (const RunReport& r : reports) {
    std::cout << r.model_name << " on " << r.dataset_name << ": top1 = " << r.top1
              << " (train " << r.train_seconds << " s, infer " << r.infer_seconds
              << " s)\n";
  }
  std::cout << "metrics written to " << cli.metrics << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CliConfig cli;
  CLI::App app{"Least-squares recomputation networks (MLS / RML-MP / SRML-MP)"};
  app.set_config("--config", "", "flat key = value config file; flags take precedence");

  app.add_option("--features", cli.features,
                 "feature file(s), csv or LSFM binary; several paths fuse by "
                 "column concatenation")
      ->delimiter(',');
  app.add_option("--labels", cli.labels, "label file, one integer per line");
  app.add_option("--model", cli.model_names,
                 "model variant: mls, rml-mp or srml-mp (compare accepts a list)")
      ->delimiter(',');
  app.add_option("--aes", cli.aes, "number of stacked autoencoders")
      ->check(CLI::PositiveNumber);
  app.add_option("--neurons", cli.neurons, "hidden neurons per autoencoder")
      ->check(CLI::PositiveNumber);
  app.add_option("--c-ae", cli.c_ae, "regularization C of the autoencoder layers");
  app.add_option("--c-out", cli.c_out, "regularization C of the classification layer");
  app.add_option("--lambda", cli.lambdas,
                 "learning rate(s); a list forms the selection grid")
      ->delimiter(',');
  app.add_option("--activation", cli.activation, "activation: sigmoid or sine")
      ->check(CLI::IsMember({"sigmoid", "sine"}));
  app.add_option("--sparse-c", cli.sparse_c, "sparsity weight C of the l1/2 penalty");
  app.add_option("--sparse-solver", cli.sparse_solver, "sparse solver: ijt or svd")
      ->check(CLI::IsMember({"ijt", "svd"}));
  app.add_flag("--normalize", cli.normalize, "z-score features (stats from training rows)");
  app.add_option("--batch-size", cli.batch_size,
                 "row batch size for Gram-accumulated solves (0 = one-shot)");
  app.add_option("--seed", cli.seed, "random seed");
  app.add_option("--out", cli.out, "output path (model for train, labels for predict)");
  app.add_option("--metrics", cli.metrics, "metrics output path (compare)");
  app.add_flag("--grid", cli.grid,
               "sweep neurons x regularization over the standard grid (compare)");
  app.add_option("--test-fraction", cli.test_fraction, "held-out fraction (compare)")
      ->check(CLI::Range(1e-9, 1.0));
  app.add_option("--model-file", cli.model_file, "trained model to load (predict)");

  CLI::App* train = app.add_subcommand("train", "fit a variant and persist the model");
  CLI::App* predict = app.add_subcommand("predict", "label features with a saved model");
  CLI::App* compare = app.add_subcommand("compare", "train variants and report test top-1");
  for (CLI::App* sub : {train, predict, compare}) sub->fallthrough();
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (train->parsed()) return run_train(cli);
    if (predict->parsed()) return run_predict(cli);
    if (compare->parsed()) return run_compare(cli);
    std::cerr << "no command given; expected train, predict or compare\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
