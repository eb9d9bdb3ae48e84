#include "cli.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "natlog/boolean_world.hpp"
#include "natlog/dataset_io.hpp"
#include "natlog/experiment.hpp"
#include "natlog/model.hpp"
#include "natlog/training.hpp"
#include "natlog/wordnet.hpp"

namespace natlog::cli {

namespace {

namespace fs = std::filesystem;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_pct(double v) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << 100.0 * v;
  return out.str();
}

ModelConfig model_config(const Options& o) {
  ModelConfig mc;
  mc.comparison = parse_comparison_kind(o.model);
  mc.nonlinearity = parse_nonlinearity(o.nonlinearity);
  mc.l2_strength = o.l2;
  const bool wordnet = o.experiment == "wordnet";
  mc.embed_dim = o.embed_dim > 0 ? o.embed_dim : (wordnet ? 25 : 11);
  if (o.feature_dim > 0) {
    mc.feature_dim = o.feature_dim;
  } else if (wordnet) {
    mc.feature_dim = 80;
  } else {
    mc.feature_dim = mc.comparison == ComparisonKind::kNTN ? 90 : 75;
  }
  if (o.transform == "auto") {
    mc.use_transform_layer = wordnet;
  } else if (o.transform == "on" || o.transform == "off") {
    mc.use_transform_layer = o.transform == "on";
  } else {
    throw ConfigError("--transform must be auto, on or off");
  }
  return mc;
}

TrainConfig train_config(const Options& o) {
  TrainConfig tc;
  tc.learning_rate = o.lr;
  tc.batch_size = o.batch_size;
  tc.max_epochs = o.epochs > 0 ? o.epochs : (o.experiment == "wordnet" ? 100 : 500);
  tc.early_stop_patience = o.early_stop;
  tc.validate();
  return tc;
}

SimulatedConfig simulated_config(const Options& o) {
  if (o.runs < 1) throw ConfigError("--runs must be at least 1");
  return {o.num_terms, o.domain_size, o.test_fraction, o.runs, o.seed};
}

void print_aggregate(std::ostream& log, const ExperimentResult& result) {
  for (const auto& [setting, summary] : result.settings) {
    const auto& agg = summary.aggregate;
    log << setting << ": " << agg.included_runs << " runs";
    if (agg.excluded_run_count > 0) log << ", " << agg.excluded_run_count << " degenerate excluded (†)";
    log << '\n';
    for (const auto& [subset, stats] : agg.subsets) {
      log << "  " << subset << ": " << format_pct(stats.mean) << "% (SE " << format_pct(stats.standard_error)
          << ")\n";
    }
  }
}

}  // namespace

int cmd_gen_data(const Options& o, std::ostream& log) {
  const auto cfg = simulated_config(o);
  for (int run = 0; run < cfg.num_runs; ++run) {
    const auto world = make_simulated_world(cfg, run);
    const auto dir = o.out_dir / run_dir_name(run);
    write_simulated_run(dir, world, cfg, run);
    log << dir.string() << ": train " << world.split.train.size() << ", test_provable "
        << world.split.test_provable.size() << ", test_unprovable " << world.split.test_unprovable.size() << '\n';
  }
  return kOk;
}

int cmd_run(const Options& o, std::ostream& log) {
  const auto mc = model_config(o);
  const auto tc = train_config(o);
  ExecutionOptions exec;
  exec.threads = o.threads;
  exec.degenerate_share = o.degenerate_share;
  if (o.save_models) exec.models_dir = o.out_dir / "models";

  ExperimentResult result;
  if (o.experiment == "simulated") {
    result = run_simulated(simulated_config(o), mc, tc, exec, o.data_dir);
  } else if (o.experiment == "wordnet") {
    if (!o.dataset) throw ConfigError("--dataset is required for the wordnet experiment");
    std::istringstream in(read_file(*o.dataset));
    const auto dataset = read_labeled_dataset(
        in, {std::string(wordnet::kHypernym), std::string(wordnet::kHyponym), std::string(wordnet::kCoordinate)});
    WordnetRunConfig wc;
    wc.fractions = o.fractions;
    wc.num_folds = o.folds;
    wc.seed = o.seed;
    if (o.vectors) wc.vectors = read_file(*o.vectors);
    result = run_wordnet(dataset, wc, mc, tc, exec);
  } else {
    throw ConfigError("--experiment must be simulated or wordnet");
  }

  std::ostringstream metrics, aggregate;
  write_metrics_csv(metrics, result);
  write_aggregate_csv(aggregate, result);
  write_file(o.out_dir / "metrics.csv", metrics.str());
  write_file(o.out_dir / "aggregate.csv", aggregate.str());
  print_aggregate(log, result);

  if (result.failed_runs > 0) {
    for (const auto& r : result.runs) {
      if (r.failure) log << r.run_id << " diverged: " << *r.failure << '\n';
    }
    return kDivergence;
  }
  for (const auto& [setting, summary] : result.settings) {
    if (!summary.is_baseline && summary.aggregate.all_degenerate) return kDegenerateOnly;
  }
  return kOk;
}

int cmd_gradcheck(const Options& o, std::ostream& log) {
  const int n = o.embed_dim > 0 ? o.embed_dim : 4;
  const int m = o.feature_dim > 0 ? o.feature_dim : 5;
  const int classes = 7, vocab = 6;
  bool ok = true;
  int variant = 0;
  for (const bool transform : {false, true}) {
    for (const auto kind : {ComparisonKind::kNN, ComparisonKind::kNTN}) {
      ModelConfig mc;
      mc.vocab_size = vocab;
      mc.embed_dim = n;
      mc.feature_dim = m;
      mc.num_classes = classes;
      mc.comparison = kind;
      mc.use_transform_layer = transform;
      mc.nonlinearity = parse_nonlinearity(o.nonlinearity);
      mc.l2_strength = o.l2;
      mc.weight_init_range = 0.5;
      mc.embedding_init_range = 0.5;
      ModelParams params(mc);
      Rng rng = Rng::substream(o.seed, "gradcheck", static_cast<std::uint64_t>(variant++));
      initialize(params, rng);
      // Biases start at zero in training; randomize them here so their
      // gradients are exercised away from the origin.
      for (const auto b : {Block::kTransformBias, Block::kCompareBias, Block::kSoftmaxBias}) {
        for (auto& v : params.block(b)) v = rng.uniform(-0.5, 0.5);
      }
      std::vector<Example> batch;
      for (int i = 0; i < o.gc_examples; ++i) {
        batch.push_back({static_cast<int>(rng.below(vocab)), static_cast<int>(rng.below(vocab)),
                         static_cast<int>(rng.below(classes))});
      }
      const double err = gradient_check(params, batch, o.epsilon);
      const bool pass = err < o.tolerance;
      ok = ok && pass;
      log << to_string(kind) << (transform ? "+transform" : "") << ": max relative error " << err
          << (pass ? " PASS" : " FAIL") << '\n';
    }
  }
  return ok ? kOk : kCheckFailed;
}

int cmd_closure(const Options& o, std::ostream& log) {
  if (!o.train_file) throw ConfigError("--train is required");
  if (o.query.size() != 2) throw ConfigError("--query takes LEFT RIGHT");
  Vocabulary vocab;
  std::istringstream in(read_file(*o.train_file));
  const auto train = read_statements(in, vocab);
  const int left = vocab.find(o.query[0]);
  const int right = vocab.find(o.query[1]);
  if (left < 0 || right < 0) {
    throw ConfigError("unknown term '" + (left < 0 ? o.query[0] : o.query[1]) + "'");
  }
  const auto closure = provability_closure(train, vocab.size());
  log << o.query[0] << '\t' << o.query[1] << '\t';
  if (const auto r = closure.get(left, right)) {
    log << to_token(*r) << '\n';
  } else {
    log << "unprovable\n";
  }
  return kOk;
}

int cmd_wordnet_extract(const Options& o, std::ostream& log) {
  const int sources = (o.wndb ? 1 : 0) + (o.edge_list ? 1 : 0) + (o.synthetic > 0 ? 1 : 0);
  if (sources != 1) throw ConfigError("give exactly one of --wndb, --edge-list, --synthetic");

  wordnet::TaxonomyGraph graph;
  std::string root = o.root;
  if (o.wndb) {
    graph = wordnet::parse_wndb(read_file(*o.wndb));
    if (graph.find(root) < 0) {
      if (!o.index) throw ConfigError("root '" + root + "' is not a synset offset; pass --index to resolve sense names");
      root = wordnet::resolve_sense_name(read_file(*o.index), root);
    }
  } else {
    std::string text;
    if (o.edge_list) {
      text = read_file(*o.edge_list);
    } else {
      Rng rng = Rng::substream(o.seed, "synthetic");
      text = wordnet::synthetic_taxonomy(o.synthetic, o.synthetic_depth, rng);
      write_file(o.out_dir / "taxonomy.tsv", text);
      if (root == Options{}.root) root = "S0";
    }
    graph = wordnet::parse_edge_list(text);
  }

  const auto terms = wordnet::extract_terms(graph, root);
  auto dataset = wordnet::generate_pairs(terms);
  Rng rng = Rng::substream(o.seed, "downsample");
  dataset = wordnet::downsample_coordinates(dataset, rng, o.coord_ratio);

  std::ostringstream tsv;
  write_labeled_dataset(tsv, dataset);
  write_file(o.out_dir / "dataset.tsv", tsv.str());

  const auto stats = wordnet::dataset_stats(dataset);
  MetaFile meta{{"root", root},
                {"terms", std::to_string(stats.term_count)},
                {"examples", std::to_string(dataset.examples.size())},
                {"majority_label", stats.majority_label},
                {"baseline_share", std::to_string(stats.baseline_share)}};
  for (const auto& [label, count] : stats.label_counts) meta["count_" + label] = std::to_string(count);
  std::ostringstream stats_out;
  write_meta(stats_out, meta);
  write_file(o.out_dir / "stats.txt", stats_out.str());
  log << stats_out.str();
  return kOk;
}

int run(int argc, const char* const* argv, std::ostream& log, std::ostream& err) {
  Options o;
  CLI::App app{"Natural-logic relation algebra and neural relation classifiers"};
  app.set_config("--config", "", "Flat key = value config file; command-line flags override it");
  app.require_subcommand(1, 1);
  app.fallthrough();

  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--out-dir", o.out_dir, "Output directory");
  app.add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);

  app.add_option("--num-terms", o.num_terms, "Terms per boolean structure");
  app.add_option("--domain-size", o.domain_size, "Entities in the domain");
  app.add_option("--test-fraction", o.test_fraction, "Share of statements held out");
  app.add_option("--runs", o.runs, "Number of generated datasets");
  app.add_option("--data-dir", o.data_dir, "Read simulated runs written by gen-data");

  app.add_option("--experiment", o.experiment, "simulated or wordnet");
  app.add_option("--model", o.model, "nn or ntn");
  app.add_option("--embed-dim", o.embed_dim, "Embedding size (0: experiment default)");
  app.add_option("--feature-dim", o.feature_dim, "Comparison layer size (0: experiment default)");
  app.add_option("--transform", o.transform, "Embedding transform layer: auto, on, off");
  app.add_option("--nonlinearity", o.nonlinearity, "tanh or leaky_relu");
  app.add_option("--l2", o.l2, "L2 strength");
  app.add_option("--lr", o.lr, "AdaGrad learning rate");
  app.add_option("--batch-size", o.batch_size, "Minibatch size");
  app.add_option("--epochs", o.epochs, "Epochs (0: experiment default)");
  app.add_option("--early-stop", o.early_stop, "Stop after this many perfect epochs (0: off)");
  app.add_option("--degenerate-share", o.degenerate_share, "Single-class share marking a degenerate run");
  app.add_flag("--save-models", o.save_models, "Write each trained model under <out-dir>/models");

  app.add_option("--dataset", o.dataset, "Labeled taxonomy TSV for the wordnet experiment");
  app.add_option("--fractions", o.fractions, "Training-data fractions")->delimiter(',');
  app.add_option("--folds", o.folds, "Crossvalidation folds to run (1-5)");
  app.add_option("--vectors", o.vectors, "Pretrained vectors (token v1 ... vd)");
  app.add_option("--wndb", o.wndb, "WordNet data.noun file");
  app.add_option("--index", o.index, "WordNet index.noun file (resolves lemma.n.NN roots)");
  app.add_option("--edge-list", o.edge_list, "Taxonomy edge list child<TAB>parent<TAB>lemmas");
  app.add_option("--synthetic", o.synthetic, "Generate a synthetic taxonomy with this many terms");
  app.add_option("--synthetic-depth", o.synthetic_depth, "Minimum depth of the synthetic taxonomy");
  app.add_option("--root", o.root, "Root synset (offset, edge-list id, or lemma.n.NN with --index)");
  app.add_option("--coord-ratio", o.coord_ratio, "Max coordinate/hypernym ratio after downsampling");

  app.add_option("--epsilon", o.epsilon, "Finite-difference half-width");
  app.add_option("--tolerance", o.tolerance, "Max relative error");
  app.add_option("--gc-examples", o.gc_examples, "Examples per gradient check");

  app.add_option("--train", o.train_file, "Training statements TSV");
  app.add_option("--query", o.query, "LEFT RIGHT")->expected(2);

  auto* gen = app.add_subcommand("gen-data", "Write simulated train/test splits");
  auto* run_cmd = app.add_subcommand("run", "Train and evaluate; write metrics.csv and aggregate.csv");
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient checks for all model variants");
  auto* closure = app.add_subcommand("closure", "Derive the relation of a term pair from training statements");
  auto* extract = app.add_subcommand("wordnet-extract", "Build the hypernym/hyponym/coordinate dataset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    app.exit(e, log, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, log, err);
    return kConfigError;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(o, log);
    if (run_cmd->parsed()) return cmd_run(o, log);
    if (grad->parsed()) return cmd_gradcheck(o, log);
    if (closure->parsed()) return cmd_closure(o, log);
    if (extract->parsed()) return cmd_wordnet_extract(o, log);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << '\n';
    return kIoError;
  } catch (const InconsistencyError& e) {
    err << "input error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::ios_base::failure& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << '\n';
    return kDivergence;
  }
  return kConfigError;
}

}  // namespace natlog::cli
