#include "natlog/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace natlog {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be at least 1");
  if (eval_every < 0 || early_stop_patience < 0) throw std::invalid_argument("epoch intervals must be nonnegative");
}

void AdaGrad::step(std::span<double> params, std::span<const double> grads) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    if (g == 0.0) continue;
    accum_[i] += g * g;
    params[i] -= lr_ * g / std::sqrt(accum_[i] + kFudge);
  }
}

namespace {

double full_accuracy(const ModelParams& params, std::span<const Example> examples) {
  std::size_t correct = 0;
  for (const auto& ex : examples) correct += predict(params, ex.left, ex.right).label == ex.label;
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

}  // namespace

TrainResult train(std::span<const Example> examples, const ModelConfig& model_config,
                  const TrainConfig& train_config, std::optional<std::span<const double>> initial_embeddings) {
  train_config.validate();
  if (examples.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  for (const auto& ex : examples) {
    if (ex.label < 0 || ex.label >= model_config.num_classes) {
      throw std::invalid_argument("example label outside the model's class inventory");
    }
  }

  TrainResult result{ModelParams(model_config), {}};
  ModelParams& params = result.params;
  Rng init_rng = Rng::substream(train_config.seed, "init");
  Rng shuffle_rng = Rng::substream(train_config.seed, "shuffle");
  initialize(params, init_rng);
  if (initial_embeddings) {
    auto emb = params.block(Block::kEmbeddings);
    if (initial_embeddings->size() != emb.size()) throw std::invalid_argument("initial embeddings have wrong size");
    std::copy(initial_embeddings->begin(), initial_embeddings->end(), emb.begin());
  }

  Gradients grads(model_config);
  AdaGrad optimizer(params.size(), train_config.learning_rate);
  std::vector<Example> order(examples.begin(), examples.end());
  const std::size_t batch = static_cast<std::size_t>(train_config.batch_size);
  int perfect_streak = 0;

  for (int epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(std::span(order));
    double loss_sum = 0.0;
    std::size_t batches = 0, correct = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const auto chunk = std::span<const Example>(order).subspan(start, std::min(batch, order.size() - start));
      std::size_t chunk_correct = 0;
      const double loss = backward(params, chunk, grads, &chunk_correct);
      correct += chunk_correct;
      if (!std::isfinite(loss)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch));
      }
      loss_sum += loss;
      ++batches;
      optimizer.step(params.values(), grads.values());
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = loss_sum / static_cast<double>(batches);
    stats.online_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    if (train_config.eval_every > 0 && epoch % train_config.eval_every == 0) {
      stats.full_accuracy = full_accuracy(params, examples);
    }
    result.history.push_back(stats);

    perfect_streak = stats.online_accuracy == 1.0 ? perfect_streak + 1 : 0;
    if (train_config.early_stop_patience > 0 && perfect_streak >= train_config.early_stop_patience) break;
  }
  if (!params.all_finite()) throw DivergenceError("parameters became non-finite");
  return result;
}

EvalReport score_predictions(std::span<const NamedSubset> subsets, std::span<const std::vector<int>> predictions,
                             int num_classes, double degenerate_share) {
  const auto k = static_cast<std::size_t>(num_classes);
  EvalReport report;
  report.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::vector<std::size_t> predicted_counts(k, 0), gold_counts(k, 0);
  std::size_t total = 0, correct = 0;

  for (std::size_t s = 0; s < subsets.size(); ++s) {
    const auto& subset = subsets[s];
    if (subset.examples.empty()) continue;
    auto& confusion = report.subset_confusion[subset.name];
    confusion.assign(k, std::vector<std::size_t>(k, 0));
    std::size_t subset_correct = 0;
    for (std::size_t i = 0; i < subset.examples.size(); ++i) {
      const auto gold = static_cast<std::size_t>(subset.examples[i].label);
      const auto pred = static_cast<std::size_t>(predictions[s][i]);
      confusion[gold][pred]++;
      report.confusion[gold][pred]++;
      predicted_counts[pred]++;
      gold_counts[gold]++;
      subset_correct += gold == pred;
    }
    report.subset_accuracy[subset.name] =
        static_cast<double>(subset_correct) / static_cast<double>(subset.examples.size());
    report.subset_count[subset.name] = subset.examples.size();
    total += subset.examples.size();
    correct += subset_correct;
  }
  report.overall_count = total;
  report.overall_accuracy = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  const auto gold_classes = std::count_if(gold_counts.begin(), gold_counts.end(), [](std::size_t c) { return c > 0; });
  const auto top = total == 0 ? 0 : *std::max_element(predicted_counts.begin(), predicted_counts.end());
  report.is_degenerate =
      gold_classes >= 2 && static_cast<double>(top) >= degenerate_share * static_cast<double>(total);
  return report;
}

EvalReport evaluate(const ModelParams& params, std::span<const NamedSubset> subsets, double degenerate_share) {
  std::vector<std::vector<int>> predictions;
  for (const auto& subset : subsets) {
    auto& p = predictions.emplace_back();
    for (const auto& ex : subset.examples) p.push_back(predict(params, ex.left, ex.right).label);
  }
  return score_predictions(subsets, predictions, params.config().num_classes, degenerate_share);
}

AggregateReport aggregate_runs(std::span<const EvalReport> reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate_runs needs at least one report");
  AggregateReport agg;
  std::map<std::string, std::vector<double>> samples;
  for (const auto& r : reports) {
    if (r.is_degenerate) {
      ++agg.excluded_run_count;
      continue;
    }
    ++agg.included_runs;
    samples["overall"].push_back(r.overall_accuracy);
    for (const auto& [name, acc] : r.subset_accuracy) samples[name].push_back(acc);
  }
  agg.all_degenerate = agg.included_runs == 0;
  for (const auto& [name, xs] : samples) {
    const auto count = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / count;
    double se = 0.0;
    if (xs.size() > 1) {
      double ss = 0.0;
      for (double x : xs) ss += (x - mean) * (x - mean);
      se = std::sqrt(ss / (count - 1.0)) / std::sqrt(count);
    }
    agg.subsets[name] = {mean, se, xs.size()};
  }
  return agg;
}

}  // namespace natlog
