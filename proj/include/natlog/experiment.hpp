#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "natlog/boolean_world.hpp"
#include "natlog/dataset.hpp"
#include "natlog/dataset_io.hpp"
#include "natlog/model.hpp"
#include "natlog/training.hpp"

namespace natlog {

/// Seed for one named role of one run, derived from the master seed.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view role, std::uint64_t index);

struct SimulatedConfig {
  int num_terms = 80;
  int domain_size = 7;
  double test_fraction = 0.5;
  int num_runs = 5;
  std::uint64_t seed = 0;
};

// Data for run `run`, drawn from the master seed's "data" stream.
SimulatedWorld make_simulated_world(const SimulatedConfig& config, int run);

// Term vocabulary t0..t{n-1}.
Vocabulary simulated_vocabulary(int num_terms);

std::vector<Example> to_examples(std::span<const Statement> statements);

/// Writes train.tsv, test_provable.tsv, test_unprovable.tsv and meta into dir.
void write_simulated_run(const std::filesystem::path& dir, const SimulatedWorld& world,
                         const SimulatedConfig& config, int run);

struct LoadedSplit {
  Vocabulary vocabulary;
  SplitDataset split;
  MetaFile meta;
};

LoadedSplit read_simulated_run(const std::filesystem::path& dir);

// Run directory name: run_0, run_1, ...
std::string run_dir_name(int run);

struct RunRecord {
  std::string run_id;
  std::string setting;
  std::uint64_t seed = 0;
  EvalReport report;
  std::optional<std::string> failure;  // divergence message
  std::size_t epochs = 0;
};

struct SettingSummary {
  AggregateReport aggregate;
  // Baseline rows are reported without degenerate-run exclusion.
  bool is_baseline = false;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;  // sorted by run_id
  std::map<std::string, SettingSummary> settings;
  std::size_t failed_runs = 0;
};

struct ExecutionOptions {
  int threads = 1;
  double degenerate_share = kDefaultDegenerateShare;
  // Save each trained model under models_dir, one checkpoint per run.
  std::optional<std::filesystem::path> models_dir;
};

/// Trains one model per simulated run and evaluates on train, test_provable
/// and test_unprovable. With data_dir set, runs are read from gen-data output
/// instead of being generated.
ExperimentResult run_simulated(const SimulatedConfig& data, ModelConfig model, const TrainConfig& train,
                               const ExecutionOptions& exec,
                               const std::optional<std::filesystem::path>& data_dir = std::nullopt);

struct WordnetRunConfig {
  std::vector<double> fractions{1.0, 1.0 / 3.0, 1.0 / 9.0};
  int num_folds = 5;
  std::uint64_t seed = 0;
  // Pretrained vector file content; random initialization when absent.
  std::optional<std::string> vectors;
};

/// Crossvalidated training on a labeled taxonomy dataset for each training
/// fraction, plus a most-frequent-class baseline per fold.
ExperimentResult run_wordnet(const LabeledDataset& dataset, const WordnetRunConfig& config, ModelConfig model,
                             const TrainConfig& train, const ExecutionOptions& exec);

// run_id,seed,subset,accuracy,n_examples,degenerate
void write_metrics_csv(std::ostream& out, const ExperimentResult& result);
// setting,subset,mean,stderr,excluded_runs,dagger
void write_aggregate_csv(std::ostream& out, const ExperimentResult& result);

}  // namespace natlog
