#include "natlog/training.hpp"

#include <cmath>
#include <limits>

#include "doctest.h"

using namespace natlog;

namespace {

ModelConfig tiny(ComparisonKind kind = ComparisonKind::kNTN) {
  ModelConfig c;
  c.vocab_size = 8;
  c.embed_dim = 4;
  c.feature_dim = 6;
  c.num_classes = 3;
  c.comparison = kind;
  c.l2_strength = 1e-4;
  return c;
}

std::vector<Example> toy_examples() {
  std::vector<Example> out;
  for (int l = 0; l < 8; ++l)
    for (int r = 0; r < 8; ++r) out.push_back({l, r, (l + 2 * r) % 3});
  return out;
}

}  // namespace

TEST_CASE("train config validation") {
  TrainConfig t;
  t.learning_rate = 0;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t = TrainConfig{};
  t.batch_size = 0;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t = TrainConfig{};
  const std::vector<Example> none;
  CHECK_THROWS_AS(train(none, tiny(), t), std::invalid_argument);
  const std::vector<Example> bad_label{{0, 1, 3}};
  CHECK_THROWS_AS(train(bad_label, tiny(), t), std::invalid_argument);
}

TEST_CASE("a single example is memorized") {
  const std::vector<Example> one{{2, 5, 1}};
  TrainConfig t;
  t.max_epochs = 100;
  const auto r = train(one, tiny(), t);
  CHECK(predict(r.params, 2, 5).label == 1);
  CHECK(r.history.back().mean_loss < 0.05);
}

TEST_CASE("training is bit-identical under a fixed seed") {
  const auto data = toy_examples();
  TrainConfig t;
  t.max_epochs = 20;
  t.seed = 12;
  const auto a = train(data, tiny(), t);
  const auto b = train(data, tiny(), t);
  CHECK(a.params == b.params);
  t.seed = 13;
  const auto c = train(data, tiny(), t);
  CHECK_FALSE(a.params == c.params);
}

TEST_CASE("AdaGrad step size is bounded by the learning rate") {
  AdaGrad opt(4, 0.3);
  std::vector<double> p{0, 0, 0, 0};
  const std::vector<double> g{5.0, -1e-3, 0.0, 2.0};
  opt.step(p, g);
  // First step: |delta| = lr * |g| / sqrt(g^2 + fudge) <= lr.
  CHECK(p[0] == doctest::Approx(-0.3 * 5.0 / std::sqrt(25.0 + AdaGrad::kFudge)));
  CHECK(p[1] == doctest::Approx(0.3 * 1e-3 / std::sqrt(1e-6 + AdaGrad::kFudge)));
  CHECK(p[2] == 0.0);
  CHECK(opt.accumulators()[2] == 0.0);
  for (double v : p) CHECK(std::abs(v) <= 0.3);
  opt.step(p, g);
  CHECK(opt.accumulators()[0] == doctest::Approx(50.0));
  CHECK(p[0] == doctest::Approx(-0.3 * 5.0 / std::sqrt(25.0 + 1e-8) - 0.3 * 5.0 / std::sqrt(50.0 + 1e-8)));
}

TEST_CASE("loss decreases over training for most seeds") {
  const auto data = toy_examples();
  int decreased = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    TrainConfig t;
    t.max_epochs = 30;
    t.seed = seed;
    const auto r = train(data, tiny(), t);
    decreased += r.history.back().mean_loss < r.history.front().mean_loss;
  }
  CHECK(decreased >= 4);
}

TEST_CASE("history records every epoch; eval_every adds full-pass accuracy") {
  const auto data = toy_examples();
  TrainConfig t;
  t.max_epochs = 6;
  t.eval_every = 3;
  const auto r = train(data, tiny(), t);
  REQUIRE(r.history.size() == 6);
  CHECK(r.history[0].epoch == 1);
  CHECK_FALSE(r.history[0].full_accuracy.has_value());
  CHECK(r.history[2].full_accuracy.has_value());
  CHECK(r.history[5].full_accuracy.has_value());
}

TEST_CASE("early stopping ends after a perfect streak") {
  const std::vector<Example> one{{2, 5, 1}};
  TrainConfig t;
  t.max_epochs = 500;
  t.early_stop_patience = 3;
  const auto r = train(one, tiny(), t);
  CHECK(r.history.size() < 500);
  CHECK(r.history.back().online_accuracy == 1.0);
}

TEST_CASE("non-finite loss raises DivergenceError") {
  const auto c = tiny();
  std::vector<double> emb(static_cast<std::size_t>(c.vocab_size * c.embed_dim), 0.0);
  emb[0] = std::numeric_limits<double>::quiet_NaN();
  const std::vector<Example> data{{0, 1, 0}};
  CHECK_THROWS_AS(train(data, c, TrainConfig{}, std::span<const double>(emb)), DivergenceError);
}

TEST_CASE("evaluate reports per-subset accuracy and confusion") {
  ModelConfig c = tiny();
  ModelParams p(c);
  // Bias toward class 2 so every prediction is 2.
  p.block(Block::kSoftmaxBias)[2] = 1.0;
  const std::vector<Example> a{{0, 1, 2}, {1, 2, 2}, {2, 3, 0}};
  const std::vector<Example> b{{3, 4, 1}};
  const std::vector<NamedSubset> subsets{{"a", a}, {"b", b}};
  const auto r = evaluate(p, subsets);
  CHECK(r.subset_accuracy.at("a") == doctest::Approx(2.0 / 3.0));
  CHECK(r.subset_accuracy.at("b") == 0.0);
  CHECK(r.subset_count.at("a") == 3);
  CHECK(r.overall_count == 4);
  CHECK(r.overall_accuracy == doctest::Approx(0.5));
  CHECK(r.confusion[0][2] == 1);
  CHECK(r.confusion[2][2] == 2);
  CHECK(r.subset_confusion.at("b")[1][2] == 1);
  CHECK(r.is_degenerate);
}

TEST_CASE("degeneracy needs two gold classes and a dominant prediction") {
  const std::vector<Example> gold_one{{0, 1, 1}, {1, 0, 1}};
  const std::vector<NamedSubset> s1{{"x", gold_one}};
  const std::vector<std::vector<int>> same{{1, 1}};
  CHECK_FALSE(score_predictions(s1, same, 3).is_degenerate);

  std::vector<Example> mixed;
  std::vector<int> preds;
  for (int i = 0; i < 100; ++i) {
    mixed.push_back({0, 1, i < 50 ? 0 : 1});
    preds.push_back(i == 0 ? 1 : 0);
  }
  const std::vector<NamedSubset> s2{{"x", mixed}};
  const std::vector<std::vector<int>> p99{preds};
  CHECK(score_predictions(s2, p99, 3).is_degenerate);
  preds[1] = 1;
  const std::vector<std::vector<int>> p98{preds};
  CHECK_FALSE(score_predictions(s2, p98, 3).is_degenerate);
  CHECK(score_predictions(s2, p98, 3, 0.98).is_degenerate);
}

TEST_CASE("aggregate_runs: mean, standard error and exclusions") {
  auto report = [](double acc, bool degenerate) {
    EvalReport r;
    r.overall_accuracy = acc;
    r.subset_accuracy["test"] = acc;
    r.is_degenerate = degenerate;
    return r;
  };
  const std::vector<EvalReport> runs{report(0.9, false), report(0.8, false), report(0.7, false), report(0.2, true)};
  const auto a = aggregate_runs(runs);
  CHECK(a.included_runs == 3);
  CHECK(a.excluded_run_count == 1);
  CHECK_FALSE(a.all_degenerate);
  // Sample stddev of {0.9, 0.8, 0.7} is 0.1; SE = 0.1 / sqrt(3).
  CHECK(a.subsets.at("test").mean == doctest::Approx(0.8));
  CHECK(a.subsets.at("test").standard_error == doctest::Approx(0.1 / std::sqrt(3.0)));
  CHECK(a.subsets.at("overall").runs == 3);

  const std::vector<EvalReport> single{report(0.6, false)};
  CHECK(aggregate_runs(single).subsets.at("test").standard_error == 0.0);

  const std::vector<EvalReport> bad{report(0.1, true), report(0.2, true)};
  const auto b = aggregate_runs(bad);
  CHECK(b.all_degenerate);
  CHECK(b.subsets.empty());
  CHECK(b.excluded_run_count == 2);
  CHECK_THROWS_AS(aggregate_runs(std::vector<EvalReport>{}), std::invalid_argument);
}
