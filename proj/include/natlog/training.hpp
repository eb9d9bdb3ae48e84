#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "natlog/dataset.hpp"
#include "natlog/model.hpp"

namespace natlog {

struct TrainConfig {
  double learning_rate = 0.2;
  int batch_size = 32;
  int max_epochs = 500;
  std::uint64_t seed = 0;
  // Full-pass training accuracy every eval_every epochs; 0 disables.
  int eval_every = 0;
  // Stop once online training accuracy has been 100% for this many
  // consecutive epochs; 0 disables.
  int early_stop_patience = 0;

  void validate() const;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  // Accuracy of the predictions made during the epoch, before each update.
  double online_accuracy = 0.0;
  std::optional<double> full_accuracy;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> history;
};

/// AdaGrad over shuffled minibatches. Initialization draws from the "init"
/// sub-stream of train_config.seed and shuffling from "shuffle", so a fixed
/// seed gives bit-identical parameters. initial_embeddings, when given,
/// replaces the embedding block after random initialization.
TrainResult train(std::span<const Example> examples, const ModelConfig& model_config,
                  const TrainConfig& train_config,
                  std::optional<std::span<const double>> initial_embeddings = std::nullopt);

/// Per-parameter AdaGrad state.
class AdaGrad {
 public:
  AdaGrad(std::size_t size, double learning_rate) : accum_(size, 0.0), lr_(learning_rate) {}

  void step(std::span<double> params, std::span<const double> grads);
  std::span<const double> accumulators() const { return accum_; }

  static constexpr double kFudge = 1e-8;

 private:
  std::vector<double> accum_;
  double lr_;
};

struct NamedSubset {
  std::string name;
  std::span<const Example> examples;
};

struct EvalReport {
  double overall_accuracy = 0.0;
  std::size_t overall_count = 0;
  // Only non-empty subsets appear.
  std::map<std::string, double> subset_accuracy;
  std::map<std::string, std::size_t> subset_count;
  // confusion[true][predicted], per subset and summed.
  std::map<std::string, std::vector<std::vector<std::size_t>>> subset_confusion;
  std::vector<std::vector<std::size_t>> confusion;
  bool is_degenerate = false;
};

inline constexpr double kDefaultDegenerateShare = 0.99;

/// Accuracy per subset and overall. A report is degenerate when a single
/// predicted class covers at least degenerate_share of all predictions while
/// the gold labels contain two or more classes.
EvalReport evaluate(const ModelParams& params, std::span<const NamedSubset> subsets,
                    double degenerate_share = kDefaultDegenerateShare);

// Degeneracy and accuracy bookkeeping for an arbitrary labeling, shared by
// evaluate() and by baselines.
EvalReport score_predictions(std::span<const NamedSubset> subsets,
                             std::span<const std::vector<int>> predictions, int num_classes,
                             double degenerate_share = kDefaultDegenerateShare);

struct SubsetStats {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t runs = 0;
};

struct AggregateReport {
  // Keyed by subset name plus "overall". Empty when every run is degenerate.
  std::map<std::string, SubsetStats> subsets;
  std::size_t included_runs = 0;
  std::size_t excluded_run_count = 0;
  bool all_degenerate = false;
};

/// Mean and standard error (sample stddev / sqrt(runs)) over non-degenerate
/// runs. A subset seen in a single run gets standard error 0.
AggregateReport aggregate_runs(std::span<const EvalReport> reports);

}  // namespace natlog
