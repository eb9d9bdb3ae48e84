#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace natlog::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kIoError = 3,
  kDivergence = 4,
  kDegenerateOnly = 5,
  kCheckFailed = 6,
};

// Every option of every subcommand; mirrored 1:1 by config-file keys.
struct Options {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  int threads = 1;

  // Simulated data.
  int num_terms = 80;
  int domain_size = 7;
  double test_fraction = 0.5;
  int runs = 5;
  std::optional<std::filesystem::path> data_dir;

  // Model and training. Zero dims / epochs mean "experiment default".
  std::string experiment = "simulated";
  std::string model = "ntn";
  int embed_dim = 0;
  int feature_dim = 0;
  std::string transform = "auto";
  std::string nonlinearity = "tanh";
  double l2 = 1e-3;
  double lr = 0.2;
  int batch_size = 32;
  int epochs = 0;
  int early_stop = 0;
  double degenerate_share = 0.99;
  bool save_models = false;

  // WordNet experiment and extraction.
  std::optional<std::filesystem::path> dataset;
  std::vector<double> fractions{1.0, 1.0 / 3.0, 1.0 / 9.0};
  int folds = 5;
  std::optional<std::filesystem::path> vectors;
  std::optional<std::filesystem::path> wndb;
  std::optional<std::filesystem::path> index;
  std::optional<std::filesystem::path> edge_list;
  int synthetic = 0;
  int synthetic_depth = 4;
  std::string root = "organism.n.01";
  double coord_ratio = 0.7;

  // Gradient check.
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  int gc_examples = 10;

  // Closure query.
  std::optional<std::filesystem::path> train_file;
  std::vector<std::string> query;
};

int cmd_gen_data(const Options& o, std::ostream& log);
int cmd_run(const Options& o, std::ostream& log);
int cmd_gradcheck(const Options& o, std::ostream& log);
int cmd_closure(const Options& o, std::ostream& log);
int cmd_wordnet_extract(const Options& o, std::ostream& log);

/// Parses argv (CLI11, with `--config` TOML-style files) and dispatches.
int run(int argc, const char* const* argv, std::ostream& log, std::ostream& err);

}  // namespace natlog::cli
