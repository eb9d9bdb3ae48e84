#include "natlog/model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"

using namespace natlog;

namespace {

ModelConfig small_config(ComparisonKind kind, bool transform, Nonlinearity f = Nonlinearity::kTanh) {
  ModelConfig c;
  c.vocab_size = 6;
  c.embed_dim = 4;
  c.feature_dim = 5;
  c.num_classes = 7;
  c.comparison = kind;
  c.use_transform_layer = transform;
  c.nonlinearity = f;
  c.l2_strength = 1e-2;
  c.weight_init_range = 0.5;
  c.embedding_init_range = 0.5;
  return c;
}

ModelParams random_params(const ModelConfig& c, std::uint64_t seed) {
  ModelParams p(c);
  Rng rng(seed);
  initialize(p, rng);
  for (const auto b : {Block::kTransformBias, Block::kCompareBias, Block::kSoftmaxBias}) {
    for (auto& v : p.block(b)) v = rng.uniform(-0.5, 0.5);
  }
  return p;
}

std::vector<Example> random_batch(const ModelConfig& c, std::size_t size, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Example> out;
  for (std::size_t i = 0; i < size; ++i) {
    out.push_back({static_cast<int>(rng.below(static_cast<std::uint64_t>(c.vocab_size))),
                   static_cast<int>(rng.below(static_cast<std::uint64_t>(c.vocab_size))),
                   static_cast<int>(rng.below(static_cast<std::uint64_t>(c.num_classes)))});
  }
  return out;
}

double f_of(Nonlinearity f, double x) { return f == Nonlinearity::kTanh ? std::tanh(x) : (x > 0 ? x : 0.01 * x); }

// Straight transcription of the model equations with explicit indexing.
std::vector<double> naive_forward(const ModelParams& p, int l, int r) {
  const auto& c = p.config();
  const int n = c.embed_dim, m = c.feature_dim, k = c.num_classes;
  auto enc = [&](int term) {
    std::vector<double> e(p.embedding(term).begin(), p.embedding(term).end());
    if (!c.use_transform_layer) return e;
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      double z = p.block(Block::kTransformBias)[static_cast<std::size_t>(i)];
      for (int j = 0; j < n; ++j) z += p.block(Block::kTransformWeights)[static_cast<std::size_t>(i * n + j)] * e[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(i)] = f_of(c.nonlinearity, z);
    }
    return out;
  };
  const auto a = enc(l), b = enc(r);
  std::vector<double> x(a);
  x.insert(x.end(), b.begin(), b.end());
  std::vector<double> h(static_cast<std::size_t>(m));
  for (int q = 0; q < m; ++q) {
    double z = p.block(Block::kCompareBias)[static_cast<std::size_t>(q)];
    for (int j = 0; j < 2 * n; ++j) z += p.block(Block::kCompareWeights)[static_cast<std::size_t>(q * 2 * n + j)] * x[static_cast<std::size_t>(j)];
    if (c.comparison == ComparisonKind::kNTN) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          z += a[static_cast<std::size_t>(i)] * p.block(Block::kCompareTensor)[static_cast<std::size_t>((q * n + i) * n + j)] *
               b[static_cast<std::size_t>(j)];
    }
    h[static_cast<std::size_t>(q)] = f_of(c.nonlinearity, z);
  }
  std::vector<double> e(static_cast<std::size_t>(k));
  double total = 0.0;
  for (int y = 0; y < k; ++y) {
    double z = p.block(Block::kSoftmaxBias)[static_cast<std::size_t>(y)];
    for (int q = 0; q < m; ++q) z += p.block(Block::kSoftmaxWeights)[static_cast<std::size_t>(y * m + q)] * h[static_cast<std::size_t>(q)];
    e[static_cast<std::size_t>(y)] = std::exp(z);
    total += e[static_cast<std::size_t>(y)];
  }
  for (auto& v : e) v /= total;
  return e;
}

double naive_loss(const ModelParams& p, const std::vector<Example>& batch) {
  double ce = 0.0;
  for (const auto& ex : batch) ce -= std::log(naive_forward(p, ex.left, ex.right)[static_cast<std::size_t>(ex.label)]);
  ce /= static_cast<double>(batch.size());
  double sq = 0.0;
  for (const auto b : {Block::kTransformWeights, Block::kCompareWeights, Block::kCompareTensor, Block::kSoftmaxWeights})
    for (double v : p.block(b)) sq += v * v;
  std::vector<bool> used(static_cast<std::size_t>(p.config().vocab_size));
  for (const auto& ex : batch) used[static_cast<std::size_t>(ex.left)] = used[static_cast<std::size_t>(ex.right)] = true;
  for (int t = 0; t < p.config().vocab_size; ++t)
    if (used[static_cast<std::size_t>(t)])
      for (double v : p.embedding(t)) sq += v * v;
  return ce + 0.5 * p.config().l2_strength * sq;
}

struct Variant {
  ComparisonKind kind;
  bool transform;
  Nonlinearity f;
};

const Variant kVariants[] = {
    {ComparisonKind::kNN, false, Nonlinearity::kTanh},       {ComparisonKind::kNTN, false, Nonlinearity::kTanh},
    {ComparisonKind::kNN, true, Nonlinearity::kTanh},        {ComparisonKind::kNTN, true, Nonlinearity::kTanh},
    {ComparisonKind::kNN, false, Nonlinearity::kLeakyRelu},  {ComparisonKind::kNTN, true, Nonlinearity::kLeakyRelu},
};

}  // namespace

TEST_CASE("block layout") {
  const auto c = small_config(ComparisonKind::kNTN, true);
  const ModelParams p(c);
  CHECK(p.shape(Block::kEmbeddings).size == 24);
  CHECK(p.shape(Block::kTransformWeights).size == 16);
  CHECK(p.shape(Block::kCompareWeights).size == 40);
  CHECK(p.shape(Block::kCompareTensor).size == 80);
  CHECK(p.shape(Block::kSoftmaxWeights).size == 35);
  CHECK(p.size() == 24 + 16 + 4 + 40 + 5 + 80 + 35 + 7);
  std::size_t offset = 0;
  for (const auto& s : p.shapes()) {
    CHECK(s.offset == offset);
    offset += s.size;
  }
  const ModelParams plain(small_config(ComparisonKind::kNN, false));
  CHECK(plain.shape(Block::kTransformWeights).size == 0);
  CHECK(plain.shape(Block::kCompareTensor).size == 0);
  CHECK_FALSE(p.shape(Block::kCompareBias).regularized);
  CHECK(p.shape(Block::kCompareTensor).regularized);
}

TEST_CASE("config validation") {
  ModelConfig c;
  c.embed_dim = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ModelConfig{};
  c.l2_strength = -1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_THROWS_AS(parse_comparison_kind("rnn"), std::invalid_argument);
  CHECK(parse_nonlinearity("leaky_relu") == Nonlinearity::kLeakyRelu);
}

TEST_CASE("initialization respects ranges and zero biases") {
  const auto c = small_config(ComparisonKind::kNTN, true);
  ModelParams p(c);
  Rng rng(3);
  initialize(p, rng);
  for (double v : p.block(Block::kEmbeddings)) CHECK(std::abs(v) <= c.embedding_init_range);
  for (double v : p.block(Block::kCompareTensor)) CHECK(std::abs(v) <= c.weight_init_range);
  for (double v : p.block(Block::kCompareBias)) CHECK(v == 0.0);
  for (double v : p.block(Block::kSoftmaxBias)) CHECK(v == 0.0);
}

TEST_CASE("forward returns a distribution matching the naive oracle") {
  for (const auto& v : kVariants) {
    const auto c = small_config(v.kind, v.transform, v.f);
    const auto p = random_params(c, 9);
    for (int l = 0; l < c.vocab_size; ++l) {
      for (int r = 0; r < c.vocab_size; ++r) {
        const auto probs = forward(p, l, r);
        CHECK(std::accumulate(probs.begin(), probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        const auto oracle = naive_forward(p, l, r);
        for (std::size_t y = 0; y < probs.size(); ++y) CHECK(probs[y] == doctest::Approx(oracle[y]).epsilon(1e-12));
      }
    }
  }
  const ModelParams p(small_config(ComparisonKind::kNN, false));
  CHECK_THROWS_AS(forward(p, 0, 6), std::out_of_range);
}

TEST_CASE("zero parameters give the uniform distribution and loss ln 7") {
  const auto c = small_config(ComparisonKind::kNTN, false);
  const ModelParams p(c);
  for (double v : forward(p, 1, 2)) CHECK(v == doctest::Approx(1.0 / 7.0));
  const std::vector<Example> batch{{1, 2, 3}, {0, 5, 6}};
  CHECK(batch_loss(p, batch) == doctest::Approx(std::log(7.0)));
}

TEST_CASE("batch_loss matches the naive oracle") {
  for (const auto& v : kVariants) {
    const auto c = small_config(v.kind, v.transform, v.f);
    const auto p = random_params(c, 17);
    const auto batch = random_batch(c, 8, 18);
    CHECK(batch_loss(p, batch) == doctest::Approx(naive_loss(p, batch)).epsilon(1e-12));
  }
  const ModelParams p(small_config(ComparisonKind::kNN, false));
  CHECK_THROWS_AS(batch_loss(p, std::vector<Example>{}), std::invalid_argument);
  CHECK_THROWS_AS(batch_loss(p, std::vector<Example>{{0, 1, 7}}), std::out_of_range);
}

TEST_CASE("NTN with a zero tensor equals NN") {
  const auto cn = small_config(ComparisonKind::kNN, true);
  const auto ct = small_config(ComparisonKind::kNTN, true);
  const auto pn = random_params(cn, 5);
  ModelParams pt(ct);
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    const auto block = static_cast<Block>(b);
    if (block == Block::kCompareTensor) continue;
    const auto src = pn.block(block);
    std::copy(src.begin(), src.end(), pt.block(block).begin());
  }
  for (int l = 0; l < 6; ++l) {
    const auto a = forward(pn, l, 5 - l), b = forward(pt, l, 5 - l);
    for (std::size_t y = 0; y < a.size(); ++y) CHECK(a[y] == doctest::Approx(b[y]).epsilon(1e-14));
  }
}

TEST_CASE("analytic gradients match finite differences") {
  for (const auto& v : kVariants) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto c = small_config(v.kind, v.transform, v.f);
      const auto p = random_params(c, 100 + seed);
      const auto batch = random_batch(c, 10, 200 + seed);
      CAPTURE(to_string(v.kind));
      CAPTURE(v.transform);
      CHECK(gradient_check(p, batch) < 1e-4);
    }
  }
}

TEST_CASE("backward returns the loss and counts correct predictions") {
  const auto c = small_config(ComparisonKind::kNTN, false);
  const auto p = random_params(c, 1);
  const auto batch = random_batch(c, 12, 2);
  Gradients g(c);
  std::size_t correct = 99;
  const double loss = backward(p, batch, g, &correct);
  CHECK(loss == doctest::Approx(batch_loss(p, batch)).epsilon(1e-14));
  std::size_t expected = 0;
  for (const auto& ex : batch) expected += predict(p, ex.left, ex.right).label == ex.label;
  CHECK(correct == expected);
  Gradients wrong(small_config(ComparisonKind::kNN, false));
  CHECK_THROWS_AS(backward(p, batch, wrong), std::invalid_argument);
}

TEST_CASE("embedding rows absent from the batch get zero gradient") {
  const auto c = small_config(ComparisonKind::kNTN, true);
  const auto p = random_params(c, 4);
  const std::vector<Example> batch{{0, 1, 2}, {1, 3, 0}};
  const auto g = backward(p, batch);
  for (int t : {2, 4, 5})
    for (double v : g.embedding(t)) CHECK(v == 0.0);
  double touched = 0.0;
  for (double v : g.embedding(3)) touched += std::abs(v);
  CHECK(touched > 0.0);
}

TEST_CASE("duplicating a batch leaves loss and gradient unchanged") {
  const auto c = small_config(ComparisonKind::kNTN, true);
  const auto p = random_params(c, 8);
  const auto batch = random_batch(c, 6, 9);
  auto twice = batch;
  twice.insert(twice.end(), batch.begin(), batch.end());
  CHECK(batch_loss(p, twice) == doctest::Approx(batch_loss(p, batch)).epsilon(1e-13));
  const auto g1 = backward(p, batch), g2 = backward(p, twice);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g2.values()[i] == doctest::Approx(g1.values()[i]).epsilon(1e-10));
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  const std::vector<double> p{0.1, 0.4, 0.4, 0.1};
  CHECK(argmax(p) == 1);
  const ModelParams zero(small_config(ComparisonKind::kNN, false));
  CHECK(predict(zero, 0, 1).label == 0);
}

TEST_CASE("checkpoints round-trip byte-identically") {
  for (const auto& v : kVariants) {
    const auto c = small_config(v.kind, v.transform, v.f);
    const auto p = random_params(c, 77);
    std::ostringstream first;
    save_checkpoint(p, first);
    std::istringstream in(first.str());
    const auto loaded = load_checkpoint(in);
    CHECK(loaded == p);
    std::ostringstream second;
    save_checkpoint(loaded, second);
    CHECK(second.str() == first.str());
  }
  std::istringstream bad("not a checkpoint\n");
  CHECK_THROWS(load_checkpoint(bad));
}
