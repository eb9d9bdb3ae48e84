#include "natlog/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "natlog/wordnet.hpp"

namespace natlog {

namespace {

// Runs task(i) for i in [0, n) on up to `threads` workers. The first
// exception (by task index) is rethrown after all workers finish.
template <typename Task>
void parallel_for(std::size_t n, int threads, Task&& task) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string percent_label(double fraction) {
  return std::to_string(static_cast<int>(std::lround(fraction * 100.0)));
}

void save_model(const ExecutionOptions& exec, const std::string& run_id, const ModelParams& params) {
  if (!exec.models_dir) return;
  std::ostringstream out;
  save_checkpoint(params, out);
  write_file(*exec.models_dir / (run_id + ".model"), out.str());
}

void summarize(ExperimentResult& result) {
  std::map<std::string, std::vector<EvalReport>> by_setting;
  for (const auto& r : result.runs) {
    if (r.failure) {
      ++result.failed_runs;
      continue;
    }
    by_setting[r.setting].push_back(r.report);
  }
  for (auto& [setting, reports] : by_setting) {
    SettingSummary summary;
    summary.is_baseline = setting == "baseline";
    if (summary.is_baseline) {
      for (auto& r : reports) r.is_degenerate = false;
    }
    summary.aggregate = aggregate_runs(reports);
    result.settings[setting] = std::move(summary);
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view role, std::uint64_t index) {
  return Rng::substream(master_seed, role, index).next();
}

SimulatedWorld make_simulated_world(const SimulatedConfig& config, int run) {
  Rng rng = Rng::substream(config.seed, "data", static_cast<std::uint64_t>(run));
  return generate_world(config.num_terms, config.domain_size, config.test_fraction, rng);
}

Vocabulary simulated_vocabulary(int num_terms) {
  Vocabulary v;
  for (int i = 0; i < num_terms; ++i) v.add("t" + std::to_string(i));
  return v;
}

std::vector<Example> to_examples(std::span<const Statement> statements) {
  std::vector<Example> out;
  out.reserve(statements.size());
  for (const auto& s : statements) out.push_back({s.left, s.right, static_cast<int>(index_of(s.relation))});
  return out;
}

std::string run_dir_name(int run) { return "run_" + std::to_string(run); }

void write_simulated_run(const std::filesystem::path& dir, const SimulatedWorld& world, const SimulatedConfig& config,
                         int run) {
  const Vocabulary vocab(world.structure.terms);
  auto dump = [&](const char* name, const std::vector<Statement>& statements) {
    std::ostringstream out;
    write_statements(out, statements, vocab);
    write_file(dir / name, out.str());
  };
  dump("train.tsv", world.split.train);
  dump("test_provable.tsv", world.split.test_provable);
  dump("test_unprovable.tsv", world.split.test_unprovable);

  MetaFile meta{
      {"seed", std::to_string(config.seed)},
      {"run", std::to_string(run)},
      {"num_terms", std::to_string(config.num_terms)},
      {"domain_size", std::to_string(config.domain_size)},
      {"test_fraction", fixed(config.test_fraction)},
      {"train", std::to_string(world.split.train.size())},
      {"test_provable", std::to_string(world.split.test_provable.size())},
      {"test_unprovable", std::to_string(world.split.test_unprovable.size())},
  };
  std::ostringstream out;
  write_meta(out, meta);
  write_file(dir / "meta", out.str());
}

LoadedSplit read_simulated_run(const std::filesystem::path& dir) {
  LoadedSplit loaded;
  {
    std::istringstream in(read_file(dir / "meta"));
    loaded.meta = read_meta(in);
  }
  const auto it = loaded.meta.find("num_terms");
  if (it == loaded.meta.end()) throw std::runtime_error("meta in '" + dir.string() + "' lacks num_terms");
  loaded.vocabulary = simulated_vocabulary(std::stoi(it->second));
  auto load = [&](const char* name) {
    std::istringstream in(read_file(dir / name));
    return read_statements(in, loaded.vocabulary, false);
  };
  loaded.split.train = load("train.tsv");
  loaded.split.test_provable = load("test_provable.tsv");
  loaded.split.test_unprovable = load("test_unprovable.tsv");
  return loaded;
}

ExperimentResult run_simulated(const SimulatedConfig& data, ModelConfig model, const TrainConfig& train,
                               const ExecutionOptions& exec, const std::optional<std::filesystem::path>& data_dir) {
  const std::string setting(to_string(model.comparison));
  ExperimentResult result;
  result.runs.resize(static_cast<std::size_t>(data.num_runs));
  parallel_for(result.runs.size(), exec.threads, [&](std::size_t i) {
    const int run = static_cast<int>(i);
    SplitDataset split;
    std::size_t vocab_size = 0;
    if (data_dir) {
      auto loaded = read_simulated_run(*data_dir / run_dir_name(run));
      split = std::move(loaded.split);
      vocab_size = loaded.vocabulary.size();
    } else {
      auto world = make_simulated_world(data, run);
      split = std::move(world.split);
      vocab_size = world.structure.num_terms();
    }
    const auto train_ex = to_examples(split.train);
    const auto provable = to_examples(split.test_provable);
    const auto unprovable = to_examples(split.test_unprovable);

    ModelConfig mc = model;
    mc.vocab_size = static_cast<int>(vocab_size);
    mc.num_classes = static_cast<int>(kNumRelations);
    TrainConfig tc = train;
    tc.seed = derive_seed(data.seed, "train", i);

    RunRecord& rec = result.runs[i];
    rec.run_id = run_dir_name(run);
    rec.setting = setting;
    rec.seed = tc.seed;
    try {
      auto trained = natlog::train(train_ex, mc, tc);
      rec.epochs = trained.history.size();
      const std::vector<NamedSubset> subsets{
          {"train", train_ex}, {"test_provable", provable}, {"test_unprovable", unprovable}};
      rec.report = evaluate(trained.params, subsets, exec.degenerate_share);
      save_model(exec, rec.setting + "_" + rec.run_id, trained.params);
    } catch (const DivergenceError& e) {
      rec.failure = e.what();
    }
  });
  summarize(result);
  return result;
}

ExperimentResult run_wordnet(const LabeledDataset& dataset, const WordnetRunConfig& config, ModelConfig model,
                             const TrainConfig& train, const ExecutionOptions& exec) {
  if (config.num_folds < 1 || config.num_folds > wordnet::kNumFolds) {
    throw std::invalid_argument("num_folds must be in [1, 5]");
  }
  model.vocab_size = static_cast<int>(dataset.vocabulary.size());
  model.num_classes = static_cast<int>(dataset.labels.size());

  Rng fold_rng = Rng::substream(config.seed, "folds");
  const auto plan = wordnet::make_folds(dataset.examples.size(), fold_rng);

  std::optional<std::vector<double>> pretrained;
  if (config.vectors) {
    Rng fill = Rng::substream(config.seed, "pretrained");
    pretrained = wordnet::load_pretrained_vectors(*config.vectors, dataset.vocabulary, model.embed_dim, fill,
                                                  model.embedding_init_range)
                     .matrix;
  }
  const std::string init = pretrained ? "pretrained" : "random";
  const auto folds = static_cast<std::size_t>(config.num_folds);

  auto gather = [&](const std::vector<std::size_t>& idx) {
    std::vector<Example> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(dataset.examples[i]);
    return out;
  };

  ExperimentResult result;
  const std::size_t model_runs = config.fractions.size() * folds;
  result.runs.resize(model_runs + folds);
  parallel_for(result.runs.size(), exec.threads, [&](std::size_t task) {
    RunRecord& rec = result.runs[task];
    if (task >= model_runs) {
      // Most-frequent training class, predicted for every test example.
      const std::size_t fold = task - model_runs;
      Rng unused(0);
      const auto train_ex = gather(plan.training_pool(static_cast<int>(fold), 1.0, unused));
      const auto test_ex = gather(plan.test_slices[fold]);
      std::vector<std::size_t> counts(dataset.labels.size(), 0);
      for (const auto& ex : train_ex) counts[static_cast<std::size_t>(ex.label)]++;
      const int majority = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      const std::vector<NamedSubset> subsets{{"test", test_ex}};
      const std::vector<std::vector<int>> predictions{std::vector<int>(test_ex.size(), majority)};
      rec.setting = "baseline";
      rec.run_id = "baseline_fold" + std::to_string(fold);
      rec.report = score_predictions(subsets, predictions, model.num_classes, exec.degenerate_share);
      return;
    }
    const std::size_t f = task / folds, fold = task % folds;
    const double fraction = config.fractions[f];
    Rng subsample = Rng::substream(config.seed, "subsample", task);
    const auto train_ex = gather(plan.training_pool(static_cast<int>(fold), fraction, subsample));
    const auto test_ex = gather(plan.test_slices[fold]);

    TrainConfig tc = train;
    tc.seed = derive_seed(config.seed, "train", task);
    rec.setting = std::string(to_string(model.comparison)) + "_" + init + "_" + percent_label(fraction);
    rec.run_id = rec.setting + "_fold" + std::to_string(fold);
    rec.seed = tc.seed;
    try {
      std::optional<std::span<const double>> emb;
      if (pretrained) emb = std::span<const double>(*pretrained);
      auto trained = natlog::train(train_ex, model, tc, emb);
      rec.epochs = trained.history.size();
      const std::vector<NamedSubset> subsets{{"train", train_ex}, {"test", test_ex}};
      rec.report = evaluate(trained.params, subsets, exec.degenerate_share);
      save_model(exec, rec.run_id, trained.params);
    } catch (const DivergenceError& e) {
      rec.failure = e.what();
    }
  });
  summarize(result);
  return result;
}

void write_metrics_csv(std::ostream& out, const ExperimentResult& result) {
  out << "run_id,seed,subset,accuracy,n_examples,degenerate\n";
  for (const auto& r : result.runs) {
    if (r.failure) {
      out << r.run_id << ',' << r.seed << ",diverged,NA,0,NA\n";
      continue;
    }
    const char* degenerate = r.report.is_degenerate ? "1" : "0";
    for (const auto& [subset, acc] : r.report.subset_accuracy) {
      out << r.run_id << ',' << r.seed << ',' << subset << ',' << fixed(acc) << ','
          << r.report.subset_count.at(subset) << ',' << degenerate << '\n';
    }
  }
}

void write_aggregate_csv(std::ostream& out, const ExperimentResult& result) {
  out << "setting,subset,mean,stderr,excluded_runs,dagger\n";
  for (const auto& [setting, summary] : result.settings) {
    const auto& agg = summary.aggregate;
    const char* dagger = agg.excluded_run_count > 0 ? "†" : "";
    if (agg.all_degenerate) {
      out << setting << ",all,NA,NA," << agg.excluded_run_count << ',' << dagger << '\n';
      continue;
    }
    for (const auto& [subset, stats] : agg.subsets) {
      out << setting << ',' << subset << ',' << fixed(stats.mean) << ',' << fixed(stats.standard_error) << ','
          << agg.excluded_run_count << ',' << dagger << '\n';
    }
  }
}

}  // namespace natlog
