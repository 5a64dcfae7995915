#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rmlmp/data.hpp"
#include "rmlmp/eval.hpp"
#include "rmlmp/model_io.hpp"
#include "support/blobs.hpp"

using namespace rmlmp;
using rmlmp::testing::make_blobs;

namespace {

std::string cli_path() {
  const char* env = std::getenv("RMLMP_CLI");
  REQUIRE(env != nullptr);
  return env;
}

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  std::string output;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buf.data(), buf.size(), pipe) != nullptr) output += buf.data();
  const int status = pclose(pipe);
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = output;
  return r;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("rmlmp_cli_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_blob_files(const TempDir& tmp, const std::string& stem, Index per_class,
                      int k, Index dim, std::uint64_t seed) {
  const Dataset ds = make_blobs(per_class, k, dim, 2.5, seed);
  std::ofstream feat(tmp.file(stem + ".csv"));
  feat.precision(17);
  for (Index i = 0; i < ds.n(); ++i) {
    for (Index j = 0; j < ds.dim(); ++j) {
      feat << ds.features(i, j) << (j + 1 < ds.dim() ? "," : "\n");
    }
  }
  std::ofstream lab(tmp.file(stem + ".labels"));
  for (int label : ds.labels) lab << label << "\n";
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("cli: train then predict reproduces in-process predictions") {
  TempDir tmp;
  write_blob_files(tmp, "data", 30, 3, 6, 11);
  const std::string model = tmp.file("model.bin");
  const std::string preds = tmp.file("preds.txt");

  const RunResult train = run_cli("train --features " + tmp.file("data.csv") +
                                  " --labels " + tmp.file("data.labels") +
                                  " --model rml-mp --aes 1 --neurons 12 --lambda 0.5" +
                                  " --seed 5 --out " + model);
  INFO(train.output);
  REQUIRE(train.exit_code == 0);
  REQUIRE(train.output.find("config: model = rml-mp") != std::string::npos);
  REQUIRE(train.output.find("config: neurons = 12") != std::string::npos);

  const RunResult predict_run = run_cli("predict --features " + tmp.file("data.csv") +
                                        " --model-file " + model + " --out " + preds);
  INFO(predict_run.output);
  REQUIRE(predict_run.exit_code == 0);

  // in-process reference: load the model and the csv, classify directly
  const PersistedModel pm = load_model(model);
  const Matrix features = load_features(tmp.file("data.csv"), FeatureFormat::csv);
  const std::vector<int> expect = classify(predict(pm.model, features));
  const std::vector<std::string> lines = read_lines(preds);
  REQUIRE(lines.size() == expect.size());
  for (size_t i = 0; i < lines.size(); ++i) {
    REQUIRE(std::stoi(lines[i]) == expect[i]);
  }
}

TEST_CASE("cli: predict rejects mismatched feature width with exit code 2") {
  TempDir tmp;
  write_blob_files(tmp, "data", 20, 2, 5, 13);
  write_blob_files(tmp, "wide", 20, 2, 7, 13);
  const std::string model = tmp.file("model.bin");
  const RunResult train = run_cli("train --features " + tmp.file("data.csv") +
                                  " --labels " + tmp.file("data.labels") +
                                  " --model mls --aes 1 --neurons 8 --out " + model);
  REQUIRE(train.exit_code == 0);

  const RunResult bad = run_cli("predict --features " + tmp.file("wide.csv") +
                                " --model-file " + model + " --out " + tmp.file("p.txt"));
  REQUIRE(bad.exit_code == 2);
  REQUIRE(bad.output.find("dimension") != std::string::npos);
}

TEST_CASE("cli: compare writes one metrics line per variant") {
  TempDir tmp;
  write_blob_files(tmp, "data", 40, 3, 6, 17);
  const std::string metrics = tmp.file("metrics.jsonl");
  const RunResult r = run_cli("compare --features " + tmp.file("data.csv") +
                              " --labels " + tmp.file("data.labels") +
                              " --model mls,rml-mp --aes 1 --neurons 10" +
                              " --lambda 0.1,0.5 --seed 3 --metrics " + metrics);
  INFO(r.output);
  REQUIRE(r.exit_code == 0);
  const std::vector<std::string> lines = read_lines(metrics);
  REQUIRE(lines.size() == 2);
  const auto first = nlohmann::json::parse(lines[0]);
  const auto second = nlohmann::json::parse(lines[1]);
  REQUIRE(first["model_name"] == "mls");
  REQUIRE(second["model_name"] == "rml-mp");
  REQUIRE(first["dataset_name"] == "data");
}

TEST_CASE("cli: compare with a fixed seed is reproducible modulo timing") {
  TempDir tmp;
  write_blob_files(tmp, "data", 30, 3, 5, 19);
  const std::string m1 = tmp.file("m1.jsonl");
  const std::string m2 = tmp.file("m2.jsonl");
  const std::string args = "compare --features " + tmp.file("data.csv") + " --labels " +
                           tmp.file("data.labels") +
                           " --model mls,srml-mp --aes 1 --neurons 8 --sparse-c 0.05" +
                           " --seed 29 --metrics ";
  REQUIRE(run_cli(args + m1).exit_code == 0);
  REQUIRE(run_cli(args + m2).exit_code == 0);

  const auto a = read_lines(m1);
  const auto b = read_lines(m2);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    auto ja = nlohmann::json::parse(a[i]);
    auto jb = nlohmann::json::parse(b[i]);
    ja["train_seconds"] = 0.0;
    ja["infer_seconds"] = 0.0;
    jb["train_seconds"] = 0.0;
    jb["infer_seconds"] = 0.0;
    REQUIRE(ja.dump() == jb.dump());
  }
}

TEST_CASE("cli: config file values apply and flags override them") {
  TempDir tmp;
  write_blob_files(tmp, "data", 20, 2, 4, 23);
  const std::string cfg = tmp.file("run.cfg");
  {
    std::ofstream out(cfg);
    out << "# demo config\n";
    out << "features = " << tmp.file("data.csv") << "\n";
    out << "labels = " << tmp.file("data.labels") << "\n";
    out << "model = mls\n";
    out << "aes = 1\n";
    out << "neurons = 16\n";
    out << "seed = 7\n";
    out << "out = " << tmp.file("model.bin") << "\n";
  }
  // flag overrides the neurons value from the file
  const RunResult r = run_cli("train --config " + cfg + " --neurons 6");
  INFO(r.output);
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.output.find("config: neurons = 6") != std::string::npos);
  const PersistedModel pm = load_model(tmp.file("model.bin"));
  REQUIRE(pm.model.config.hidden == std::vector<Index>{6});
}

TEST_CASE("cli: config file with unknown keys is rejected as usage error") {
  TempDir tmp;
  const std::string cfg = tmp.file("bad.cfg");
  std::ofstream(cfg) << "no-such-key = 1\n";
  const RunResult r = run_cli("train --config " + cfg);
  REQUIRE(r.exit_code == 1);
}

TEST_CASE("cli: defaults mirror the reference settings") {
  // No flags beyond paths: M=2, 1000 neurons per layer, C=4, sigmoid.
  TempDir tmp;
  write_blob_files(tmp, "data", 15, 2, 4, 31);
  const RunResult r = run_cli("train --features " + tmp.file("data.csv") + " --labels " +
                              tmp.file("data.labels") + " --out " + tmp.file("m.bin"));
  INFO(r.output);
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.output.find("config: aes = 2") != std::string::npos);
  REQUIRE(r.output.find("config: neurons = 1000") != std::string::npos);
  REQUIRE(r.output.find("config: c-ae = 4") != std::string::npos);
  REQUIRE(r.output.find("config: c-out = 4") != std::string::npos);
  REQUIRE(r.output.find("config: activation = sigmoid") != std::string::npos);
  const PersistedModel pm = load_model(tmp.file("m.bin"));
  REQUIRE(pm.model.config.hidden == std::vector<Index>({1000, 1000}));
}

TEST_CASE("cli: srml-mp without sparse flags applies the sparse defaults") {
  TempDir tmp;
  write_blob_files(tmp, "data", 20, 2, 4, 37);
  const RunResult r = run_cli("train --features " + tmp.file("data.csv") + " --labels " +
                              tmp.file("data.labels") +
                              " --model srml-mp --aes 1 --neurons 8 --out " +
                              tmp.file("m.bin"));
  INFO(r.output);
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.output.find("config: sparse-solver = ijt") != std::string::npos);
  const PersistedModel pm = load_model(tmp.file("m.bin"));
  REQUIRE(pm.model.config.sparse.has_value());
  REQUIRE(pm.model.config.sparse->q == 0.5);
  REQUIRE(pm.model.config.sparse->solver == SparseSolver::ijt);
}

TEST_CASE("cli: normalization round-trips through the model file") {
  TempDir tmp;
  write_blob_files(tmp, "data", 25, 2, 5, 41);
  const std::string model = tmp.file("model.bin");
  const RunResult train = run_cli("train --features " + tmp.file("data.csv") +
                                  " --labels " + tmp.file("data.labels") +
                                  " --model mls --aes 1 --neurons 8 --normalize --out " +
                                  model);
  REQUIRE(train.exit_code == 0);
  const RunResult pr = run_cli("predict --features " + tmp.file("data.csv") +
                               " --model-file " + model + " --out " + tmp.file("p.txt"));
  REQUIRE(pr.exit_code == 0);

  const PersistedModel pm = load_model(model);
  REQUIRE(pm.normalization.has_value());
  const Matrix features = load_features(tmp.file("data.csv"), FeatureFormat::csv);
  const std::vector<int> expect =
      classify(predict(pm.model, zscore_apply(*pm.normalization, features)));
  const std::vector<std::string> lines = read_lines(tmp.file("p.txt"));
  REQUIRE(lines.size() == expect.size());
  for (size_t i = 0; i < lines.size(); ++i) {
    REQUIRE(std::stoi(lines[i]) == expect[i]);
  }
}

TEST_CASE("cli: multi-source features concatenate") {
  TempDir tmp;
  const Dataset ds = make_blobs(20, 2, 6, 2.5, 43);
  // split the 6 columns into two sources of 4 + 2
  std::ofstream a(tmp.file("a.csv")), b(tmp.file("b.csv")), lab(tmp.file("l.txt"));
  a.precision(17);
  b.precision(17);
  for (Index i = 0; i < ds.n(); ++i) {
    for (Index j = 0; j < 4; ++j) a << ds.features(i, j) << (j + 1 < 4 ? "," : "\n");
    for (Index j = 4; j < 6; ++j) b << ds.features(i, j) << (j + 1 < 6 ? "," : "\n");
  }
  for (int label : ds.labels) lab << label << "\n";
  a.close();
  b.close();
  lab.close();

  const RunResult r = run_cli("train --features " + tmp.file("a.csv") + "," +
                              tmp.file("b.csv") + " --labels " + tmp.file("l.txt") +
                              " --model mls --aes 1 --neurons 8 --out " +
                              tmp.file("m.bin"));
  INFO(r.output);
  REQUIRE(r.exit_code == 0);
  const PersistedModel pm = load_model(tmp.file("m.bin"));
  REQUIRE(pm.model.input_dim() == 6);
}

TEST_CASE("cli: missing required paths is a usage error") {
  const RunResult r = run_cli("train");
  REQUIRE(r.exit_code == 1);
  const RunResult unknown = run_cli("train --bogus-flag 1");
  REQUIRE(unknown.exit_code == 1);
}
