#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmlmp/data.hpp"
#include "rmlmp/network.hpp"
#include "rmlmp/types.hpp"

namespace rmlmp {

enum class ModelVariant { mls, rml_mp, srml_mp };

inline const char* to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::mls: return "mls";
    case ModelVariant::rml_mp: return "rml-mp";
    default: return "srml-mp";
  }
}

inline ModelVariant variant_from_string(std::string_view name) {
  if (name == "mls") return ModelVariant::mls;
  if (name == "rml-mp") return ModelVariant::rml_mp;
  if (name == "srml-mp") return ModelVariant::srml_mp;
  throw std::invalid_argument("unknown model variant '" + std::string(name) +
                              "' (expected mls, rml-mp or srml-mp)");
}

/// Fraction of rows whose argmax score matches the label.
inline double top1_accuracy(const Matrix& scores, const std::vector<int>& labels) {
  if (scores.rows() != static_cast<Index>(labels.size())) {
    throw std::invalid_argument("top1_accuracy: row/label count mismatch");
  }
  const std::vector<int> predicted = classify(scores);
  Index correct = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (predicted[i] == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

/// Mean squared error per sample, ||scores - targets||_F^2 / N.
inline double mse(const Matrix& scores, const Matrix& targets) {
  if (scores.rows() != targets.rows() || scores.cols() != targets.cols()) {
    throw std::invalid_argument("mse: shape mismatch");
  }
  return (scores - targets).squaredNorm() / static_cast<double>(scores.rows());
}

/// Trains one variant end to end: mls stops after Stage 1; rml-mp and
/// srml-mp run pullback and recompute with the config's learning rate.
inline StackedModel train_variant(const Matrix& x, const Matrix& t, TrainConfig cfg,
                                  ModelVariant variant, Index batch_rows = 0) {
  if (variant == ModelVariant::rml_mp) {
    cfg.sparse.reset();
  } else if (variant == ModelVariant::srml_mp && !cfg.sparse) {
    cfg.sparse = SparseConfig{};
  }
  StackedModel model = stage1_train(x, t, cfg, batch_rows);
  if (variant == ModelVariant::mls) return model;
  const FeedbackSet fb = pullback(model, x, t);
  return recompute(model, x, t, fb);
}

struct RunReport {
  std::string model_name;
  std::string dataset_name;
  double top1 = 0.0;
  double train_seconds = 0.0;
  double infer_seconds = 0.0;
  std::string config_digest;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace detail

/// Stable digest of everything that influenced a training run.
inline std::string config_digest(const TrainConfig& cfg, ModelVariant variant) {
  std::ostringstream os;
  os << "variant=" << to_string(variant) << ";layers=";
  for (size_t i = 0; i < cfg.hidden.size(); ++i) {
    os << (i ? "," : "") << cfg.hidden[i];
  }
  os << ";c_ae=" << cfg.ridge_ae.c << ";c_out=" << cfg.ridge_out.c
     << ";lambda=" << cfg.learning_rate << ";act=" << to_string(cfg.activation.kind)
     << ";eps=" << cfg.activation.eps << ";seed=" << cfg.seed;
  if (cfg.sparse) {
    os << ";sparse={c=" << cfg.sparse->c << ",q=" << cfg.sparse->q
       << ",mu=" << cfg.sparse->mu << ",iters=" << cfg.sparse->max_iters
       << ",tol=" << cfg.sparse->tol << ",solver=" << to_string(cfg.sparse->solver)
       << "}";
  }
  return detail::fnv1a_hex(os.str());
}

/// Optional hyperparameter sweep, applied per variant on the validation
/// split before the final fit.
struct HyperGrid {
  std::vector<Index> neurons = {500, 1000, 2000};
  std::vector<double> c_ae = {1e-3, 1.0, 1e3};
  std::vector<double> c_out = {1.0, 1e2, 1e4};
};

struct CompareSpec {
  std::vector<ModelVariant> variants;
  Dataset train;
  Dataset test;
  std::string dataset_name = "dataset";
  TrainConfig base;
  std::vector<double> lambda_grid = {0.1, 0.5, 1.0};
  double validation_fraction = 0.1;
  std::optional<HyperGrid> grid;
  Index batch_rows = 0;
};

namespace detail {

struct Candidate {
  TrainConfig cfg;
  double lambda = 0.0;
};

// Enumerates the candidate configs for one variant, in deterministic order.
inline std::vector<Candidate> candidates(const CompareSpec& spec, ModelVariant variant) {
  std::vector<TrainConfig> bases;
  if (spec.grid) {
    for (Index neurons : spec.grid->neurons) {
      for (double c_ae : spec.grid->c_ae) {
        for (double c_out : spec.grid->c_out) {
          TrainConfig cfg = spec.base;
          cfg.hidden.assign(spec.base.hidden.size(), neurons);
          cfg.ridge_ae.c = c_ae;
          cfg.ridge_out.c = c_out;
          bases.push_back(std::move(cfg));
        }
      }
    }
  } else {
    bases.push_back(spec.base);
  }
  std::vector<Candidate> out;
  for (const TrainConfig& cfg : bases) {
    if (variant == ModelVariant::mls) {
      out.push_back(Candidate{cfg, 0.0});
    } else {
      for (double lambda : spec.lambda_grid) {
        Candidate c{cfg, lambda};
        c.cfg.learning_rate = lambda;
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

}  // namespace detail

/// Runs every requested variant on the same train/test pair: candidate
/// settings (lambda, and the hyper grid when enabled) are selected on a
/// seeded validation sub-split of the training set, the winner is refit on
/// the full training set, and Top-1 plus wall-clock timings are reported in
/// spec order.
inline std::vector<RunReport> run_compare(const CompareSpec& spec) {
  if (spec.variants.empty()) {
    throw std::invalid_argument("run_compare: no variants requested");
  }
  if (spec.lambda_grid.empty()) {
    throw std::invalid_argument("run_compare: empty lambda grid");
  }
  if (!(spec.validation_fraction > 0.0) || !(spec.validation_fraction < 1.0)) {
    throw std::invalid_argument("run_compare: validation fraction must lie in (0, 1)");
  }
  if (spec.train.dim() != spec.test.dim() || spec.train.k != spec.test.k) {
    throw std::invalid_argument("run_compare: train/test schema mismatch");
  }

  const Matrix t_train = one_hot(spec.train.labels, spec.train.k);
  using clock = std::chrono::steady_clock;

  std::vector<RunReport> reports;
  for (ModelVariant variant : spec.variants) {
    std::vector<detail::Candidate> cands = detail::candidates(spec, variant);
    detail::Candidate chosen = cands.front();
    if (cands.size() > 1) {
      const auto [sub_train, validation] =
          split(spec.train, spec.validation_fraction, mix_seed(spec.base.seed ^ 0x76a1u));
      const Matrix t_sub = one_hot(sub_train.labels, sub_train.k);
      double best_acc = -1.0;
      for (const detail::Candidate& cand : cands) {
        TrainConfig cfg = cand.cfg;
        cfg.learning_rate = cand.lambda;
        const StackedModel model =
            train_variant(sub_train.features, t_sub, cfg, variant, spec.batch_rows);
        const double acc =
            top1_accuracy(predict(model, validation.features), validation.labels);
        if (acc > best_acc) {
          best_acc = acc;
          chosen = cand;
        }
      }
    }

    TrainConfig cfg = chosen.cfg;
    cfg.learning_rate = variant == ModelVariant::mls ? 0.0 : chosen.lambda;
    const auto train_begin = clock::now();
    const StackedModel model =
        train_variant(spec.train.features, t_train, cfg, variant, spec.batch_rows);
    const auto train_end = clock::now();
    const Matrix scores = predict(model, spec.test.features);
    const auto infer_end = clock::now();

    RunReport report;
    report.model_name = to_string(variant);
    report.dataset_name = spec.dataset_name;
    report.top1 = top1_accuracy(scores, spec.test.labels);
    report.train_seconds = std::chrono::duration<double>(train_end - train_begin).count();
    report.infer_seconds = std::chrono::duration<double>(infer_end - train_end).count();
    report.config_digest = config_digest(model.config, variant);
    report.seed = spec.base.seed;
    reports.push_back(std::move(report));
  }
  return reports;
}

inline nlohmann::json to_json(const RunReport& r) {
  return nlohmann::json{{"model_name", r.model_name},
                        {"dataset_name", r.dataset_name},
                        {"top1", r.top1},
                        {"train_seconds", r.train_seconds},
                        {"infer_seconds", r.infer_seconds},
                        {"config_digest", r.config_digest},
                        {"seed", r.seed}};
}

/// One JSON object per line, exactly the RunReport fields.
inline void write_metrics(const std::vector<RunReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open metrics file for writing: " + path);
  for (const RunReport& r : reports) {
    out << to_json(r).dump() << "\n";
  }
  if (!out) throw DataError("failed writing metrics file: " + path);
}

}  // namespace rmlmp
