#include "natlog/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace natlog {

namespace {

constexpr double kLeakySlope = 0.01;

double activate(Nonlinearity f, double x) {
  return f == Nonlinearity::kTanh ? std::tanh(x) : (x > 0.0 ? x : kLeakySlope * x);
}

// Derivative expressed through the activation's output.
double activate_grad(Nonlinearity f, double y) {
  return f == Nonlinearity::kTanh ? 1.0 - y * y : (y > 0.0 ? 1.0 : kLeakySlope);
}

std::size_t uz(int v) { return static_cast<std::size_t>(v); }

// Intermediate values of one forward pass, reused across examples.
struct Trace {
  std::vector<double> left, right;  // comparison-layer inputs
  std::vector<double> bilinear;     // NTN: row k holds T[k] * right
  std::vector<double> hidden;
  std::vector<double> probs;
  double log_normalizer = 0.0;
  std::vector<double> logits;

  explicit Trace(const ModelConfig& c)
      : left(uz(c.embed_dim)),
        right(uz(c.embed_dim)),
        bilinear(c.comparison == ComparisonKind::kNTN ? uz(c.feature_dim * c.embed_dim) : 0),
        hidden(uz(c.feature_dim)),
        probs(uz(c.num_classes)),
        logits(uz(c.num_classes)) {}
};

void check_index(const ModelParams& p, int term) {
  if (term < 0 || term >= p.config().vocab_size) throw std::out_of_range("term index out of range");
}

void encode(const ModelParams& p, int term, std::span<double> out) {
  const auto& c = p.config();
  const auto e = p.embedding(term);
  if (!c.use_transform_layer) {
    std::copy(e.begin(), e.end(), out.begin());
    return;
  }
  const auto a = p.block(Block::kTransformWeights);
  const auto bias = p.block(Block::kTransformBias);
  const std::size_t n = uz(c.embed_dim);
  for (std::size_t i = 0; i < n; ++i) {
    double z = bias[i];
    const double* row = &a[i * n];
    for (std::size_t j = 0; j < n; ++j) z += row[j] * e[j];
    out[i] = activate(c.nonlinearity, z);
  }
}

void run_forward(const ModelParams& p, int left, int right, Trace& t) {
  check_index(p, left);
  check_index(p, right);
  const auto& c = p.config();
  const std::size_t n = uz(c.embed_dim), m = uz(c.feature_dim), k_classes = uz(c.num_classes);
  encode(p, left, t.left);
  encode(p, right, t.right);

  const auto w = p.block(Block::kCompareWeights);
  const auto b = p.block(Block::kCompareBias);
  const bool ntn = c.comparison == ComparisonKind::kNTN;
  const auto tensor = p.block(Block::kCompareTensor);
  for (std::size_t k = 0; k < m; ++k) {
    double z = b[k];
    const double* row = &w[k * 2 * n];
    for (std::size_t i = 0; i < n; ++i) z += row[i] * t.left[i] + row[n + i] * t.right[i];
    if (ntn) {
      const double* slice = &tensor[k * n * n];
      double* tr = &t.bilinear[k * n];
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const double* srow = slice + i * n;
        for (std::size_t j = 0; j < n; ++j) acc += srow[j] * t.right[j];
        tr[i] = acc;
        z += t.left[i] * acc;
      }
    }
    t.hidden[k] = activate(c.nonlinearity, z);
  }

  const auto s = p.block(Block::kSoftmaxWeights);
  const auto sb = p.block(Block::kSoftmaxBias);
  double top = -INFINITY;
  for (std::size_t y = 0; y < k_classes; ++y) {
    double z = sb[y];
    const double* row = &s[y * m];
    for (std::size_t k = 0; k < m; ++k) z += row[k] * t.hidden[k];
    t.logits[y] = z;
    top = std::max(top, z);
  }
  double total = 0.0;
  for (std::size_t y = 0; y < k_classes; ++y) {
    t.probs[y] = std::exp(t.logits[y] - top);
    total += t.probs[y];
  }
  for (auto& v : t.probs) v /= total;
  t.log_normalizer = top + std::log(total);
}

// Sum of squares over regularized arrays; embeddings only for rows in batch.
double l2_penalty(const ModelParams& p, std::span<const Example> batch) {
  double sum = 0.0;
  for (const auto& shape : p.shapes()) {
    if (!shape.regularized || shape.name == "embeddings") continue;
    for (std::size_t i = 0; i < shape.size; ++i) {
      const double v = p.values()[shape.offset + i];
      sum += v * v;
    }
  }
  std::vector<bool> seen(uz(p.config().vocab_size), false);
  for (const auto& ex : batch) {
    for (int term : {ex.left, ex.right}) {
      check_index(p, term);
      if (seen[uz(term)]) continue;
      seen[uz(term)] = true;
      for (double v : p.embedding(term)) sum += v * v;
    }
  }
  return sum;
}

void check_batch(std::span<const Example> batch, const ModelConfig& c) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  for (const auto& ex : batch) {
    if (ex.label < 0 || ex.label >= c.num_classes) throw std::out_of_range("label out of range");
  }
}

}  // namespace

std::string_view to_string(ComparisonKind k) { return k == ComparisonKind::kNN ? "nn" : "ntn"; }
std::string_view to_string(Nonlinearity f) { return f == Nonlinearity::kTanh ? "tanh" : "leaky_relu"; }

ComparisonKind parse_comparison_kind(std::string_view s) {
  if (s == "nn") return ComparisonKind::kNN;
  if (s == "ntn") return ComparisonKind::kNTN;
  throw std::invalid_argument("unknown comparison kind '" + std::string(s) + "' (expected nn or ntn)");
}

Nonlinearity parse_nonlinearity(std::string_view s) {
  if (s == "tanh") return Nonlinearity::kTanh;
  if (s == "leaky_relu") return Nonlinearity::kLeakyRelu;
  throw std::invalid_argument("unknown nonlinearity '" + std::string(s) + "'");
}

void ModelConfig::validate() const {
  if (vocab_size < 1 || embed_dim < 1 || feature_dim < 1 || num_classes < 1) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  if (!(l2_strength >= 0.0)) throw std::invalid_argument("l2_strength must be nonnegative");
}

ModelParams::ModelParams(const ModelConfig& config) : config_(config) {
  config_.validate();
  const std::size_t v = uz(config.vocab_size), n = uz(config.embed_dim), m = uz(config.feature_dim),
                    k = uz(config.num_classes);
  const bool tr = config.use_transform_layer;
  const bool ntn = config.comparison == ComparisonKind::kNTN;
  shapes_ = {{
      {"embeddings", {v, n, 1}, 2, 0, 0, true},
      {"transform_weights", {tr ? n : 0, n, 1}, 2, 0, 0, true},
      {"transform_bias", {tr ? n : 0, 1, 1}, 1, 0, 0, false},
      {"compare_weights", {m, 2 * n, 1}, 2, 0, 0, true},
      {"compare_bias", {m, 1, 1}, 1, 0, 0, false},
      {"compare_tensor", {ntn ? m : 0, n, n}, 3, 0, 0, true},
      {"softmax_weights", {k, m, 1}, 2, 0, 0, true},
      {"softmax_bias", {k, 1, 1}, 1, 0, 0, false},
  }};
  std::size_t offset = 0;
  for (auto& s : shapes_) {
    s.offset = offset;
    s.size = s.dims[0] * s.dims[1] * s.dims[2];
    offset += s.size;
  }
  values_.assign(offset, 0.0);
}

std::span<double> ModelParams::block(Block b) {
  const auto& s = shape(b);
  return std::span(values_).subspan(s.offset, s.size);
}

std::span<const double> ModelParams::block(Block b) const {
  const auto& s = shape(b);
  return std::span(values_).subspan(s.offset, s.size);
}

std::span<double> ModelParams::embedding(int term) {
  const std::size_t n = uz(config_.embed_dim);
  return block(Block::kEmbeddings).subspan(uz(term) * n, n);
}

std::span<const double> ModelParams::embedding(int term) const {
  const std::size_t n = uz(config_.embed_dim);
  return block(Block::kEmbeddings).subspan(uz(term) * n, n);
}

void ModelParams::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

bool ModelParams::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void initialize(ModelParams& params, Rng& rng) {
  const auto& c = params.config();
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    const auto& shape = params.shapes()[b];
    auto values = params.block(static_cast<Block>(b));
    if (!shape.regularized) {
      std::fill(values.begin(), values.end(), 0.0);
      continue;
    }
    const double r = static_cast<Block>(b) == Block::kEmbeddings ? c.embedding_init_range : c.weight_init_range;
    for (auto& v : values) v = rng.uniform(-r, r);
  }
}

std::vector<double> forward(const ModelParams& params, int left, int right) {
  Trace t(params.config());
  run_forward(params, left, right, t);
  return t.probs;
}

int argmax(std::span<const double> probabilities) {
  return static_cast<int>(std::max_element(probabilities.begin(), probabilities.end()) - probabilities.begin());
}

Prediction predict(const ModelParams& params, int left, int right) {
  Prediction p;
  p.probabilities = forward(params, left, right);
  p.label = argmax(p.probabilities);
  return p;
}

double batch_loss(const ModelParams& params, std::span<const Example> batch) {
  const auto& c = params.config();
  check_batch(batch, c);
  Trace t(c);
  double ce = 0.0;
  for (const auto& ex : batch) {
    run_forward(params, ex.left, ex.right, t);
    ce += t.log_normalizer - t.logits[uz(ex.label)];
  }
  return ce / static_cast<double>(batch.size()) + 0.5 * c.l2_strength * l2_penalty(params, batch);
}

double backward(const ModelParams& params, std::span<const Example> batch, Gradients& grads,
                std::size_t* num_correct) {
  const auto& c = params.config();
  check_batch(batch, c);
  if (grads.size() != params.size()) throw std::invalid_argument("gradient buffer has wrong shape");
  grads.set_zero();

  const std::size_t n = uz(c.embed_dim), m = uz(c.feature_dim), k_classes = uz(c.num_classes);
  const bool ntn = c.comparison == ComparisonKind::kNTN;
  const double scale = 1.0 / static_cast<double>(batch.size());

  const auto w = params.block(Block::kCompareWeights);
  const auto tensor = params.block(Block::kCompareTensor);
  const auto s = params.block(Block::kSoftmaxWeights);
  const auto a = params.block(Block::kTransformWeights);
  auto gw = grads.block(Block::kCompareWeights);
  auto gb = grads.block(Block::kCompareBias);
  auto gt = grads.block(Block::kCompareTensor);
  auto gs = grads.block(Block::kSoftmaxWeights);
  auto gsb = grads.block(Block::kSoftmaxBias);
  auto ga = grads.block(Block::kTransformWeights);
  auto gab = grads.block(Block::kTransformBias);

  Trace t(c);
  std::vector<double> d_logits(k_classes), d_hidden(m), d_left(n), d_right(n), d_pre(n);
  double ce = 0.0;
  std::size_t correct = 0;

  for (const auto& ex : batch) {
    run_forward(params, ex.left, ex.right, t);
    ce += t.log_normalizer - t.logits[uz(ex.label)];
    correct += argmax(t.probs) == ex.label;

    for (std::size_t y = 0; y < k_classes; ++y) {
      d_logits[y] = scale * (t.probs[y] - (static_cast<int>(y) == ex.label ? 1.0 : 0.0));
    }
    std::fill(d_hidden.begin(), d_hidden.end(), 0.0);
    for (std::size_t y = 0; y < k_classes; ++y) {
      gsb[y] += d_logits[y];
      const double* srow = &s[y * m];
      double* gsrow = &gs[y * m];
      for (std::size_t k = 0; k < m; ++k) {
        gsrow[k] += d_logits[y] * t.hidden[k];
        d_hidden[k] += d_logits[y] * srow[k];
      }
    }

    std::fill(d_left.begin(), d_left.end(), 0.0);
    std::fill(d_right.begin(), d_right.end(), 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      const double dz = d_hidden[k] * activate_grad(c.nonlinearity, t.hidden[k]);
      if (dz == 0.0) continue;
      gb[k] += dz;
      const double* row = &w[k * 2 * n];
      double* grow = &gw[k * 2 * n];
      for (std::size_t i = 0; i < n; ++i) {
        grow[i] += dz * t.left[i];
        grow[n + i] += dz * t.right[i];
        d_left[i] += dz * row[i];
        d_right[i] += dz * row[n + i];
      }
      if (ntn) {
        const double* slice = &tensor[k * n * n];
        double* gslice = &gt[k * n * n];
        const double* tr = &t.bilinear[k * n];
        for (std::size_t i = 0; i < n; ++i) {
          const double dl = dz * t.left[i];
          d_left[i] += dz * tr[i];
          const double* srow = slice + i * n;
          double* gsrow = gslice + i * n;
          for (std::size_t j = 0; j < n; ++j) {
            gsrow[j] += dl * t.right[j];
            d_right[j] += dl * srow[j];
          }
        }
      }
    }

    // Back through the optional transform layer into the embedding rows.
    for (int side = 0; side < 2; ++side) {
      const int term = side == 0 ? ex.left : ex.right;
      const auto& d_out = side == 0 ? d_left : d_right;
      const auto& out = side == 0 ? t.left : t.right;
      auto ge = grads.embedding(term);
      if (!c.use_transform_layer) {
        for (std::size_t i = 0; i < n; ++i) ge[i] += d_out[i];
        continue;
      }
      const auto e = params.embedding(term);
      for (std::size_t i = 0; i < n; ++i) d_pre[i] = d_out[i] * activate_grad(c.nonlinearity, out[i]);
      for (std::size_t i = 0; i < n; ++i) {
        gab[i] += d_pre[i];
        const double* arow = &a[i * n];
        double* garow = &ga[i * n];
        for (std::size_t j = 0; j < n; ++j) {
          garow[j] += d_pre[i] * e[j];
          ge[j] += d_pre[i] * arow[j];
        }
      }
    }
  }

  // L2 terms.
  const double lambda = c.l2_strength;
  if (lambda > 0.0) {
    for (const auto& shape : params.shapes()) {
      if (!shape.regularized || shape.name == "embeddings") continue;
      for (std::size_t i = 0; i < shape.size; ++i) {
        grads.values()[shape.offset + i] += lambda * params.values()[shape.offset + i];
      }
    }
  }
  std::vector<bool> seen(uz(c.vocab_size), false);
  for (const auto& ex : batch) {
    for (int term : {ex.left, ex.right}) {
      if (seen[uz(term)]) continue;
      seen[uz(term)] = true;
      if (lambda == 0.0) continue;
      auto ge = grads.embedding(term);
      const auto e = params.embedding(term);
      for (std::size_t i = 0; i < n; ++i) ge[i] += lambda * e[i];
    }
  }

  if (num_correct) *num_correct = correct;
  return ce * scale + 0.5 * lambda * l2_penalty(params, batch);
}

Gradients backward(const ModelParams& params, std::span<const Example> batch) {
  Gradients g(params.config());
  backward(params, batch, g);
  return g;
}

double gradient_check(const ModelParams& params, std::span<const Example> batch, double epsilon) {
  const Gradients analytic = backward(params, batch);
  ModelParams probe = params;
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double original = probe.values()[i];
    probe.values()[i] = original + epsilon;
    const double up = batch_loss(probe, batch);
    probe.values()[i] = original - epsilon;
    const double down = batch_loss(probe, batch);
    probe.values()[i] = original;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double ga = analytic.values()[i];
    const double err = std::abs(ga - numeric) / std::max(std::abs(ga) + std::abs(numeric), 1e-8);
    worst = std::max(worst, err);
  }
  return worst;
}

namespace {

constexpr std::string_view kMagic = "natlog-model";
constexpr int kFormatVersion = 1;

void write_double(std::ostream& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, res.ptr - buf);
}

double read_double(const std::string& token) {
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw std::runtime_error("checkpoint: bad number '" + token + "'");
  }
  return v;
}

std::string expect_key(std::istream& in, std::string_view key) {
  std::string k, v;
  if (!(in >> k >> v) || k != key) throw std::runtime_error("checkpoint: expected '" + std::string(key) + "'");
  return v;
}

}  // namespace

void save_checkpoint(const ModelParams& params, std::ostream& out) {
  const auto& c = params.config();
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "vocab_size " << c.vocab_size << '\n';
  out << "embed_dim " << c.embed_dim << '\n';
  out << "feature_dim " << c.feature_dim << '\n';
  out << "num_classes " << c.num_classes << '\n';
  out << "comparison " << to_string(c.comparison) << '\n';
  out << "transform " << (c.use_transform_layer ? 1 : 0) << '\n';
  out << "nonlinearity " << to_string(c.nonlinearity) << '\n';
  out << "l2_strength ";
  write_double(out, c.l2_strength);
  out << "\nweight_init_range ";
  write_double(out, c.weight_init_range);
  out << "\nembedding_init_range ";
  write_double(out, c.embedding_init_range);
  out << '\n';
  for (const auto& shape : params.shapes()) {
    out << "block " << shape.name << ' ' << shape.rank;
    for (std::size_t d = 0; d < shape.rank; ++d) out << ' ' << shape.dims[d];
    out << '\n';
    for (std::size_t i = 0; i < shape.size; ++i) {
      if (i > 0) out << ' ';
      write_double(out, params.values()[shape.offset + i]);
    }
    out << '\n';
  }
}

ModelParams load_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic || version != kFormatVersion) {
    throw std::runtime_error("checkpoint: bad header");
  }
  ModelConfig c;
  c.vocab_size = std::stoi(expect_key(in, "vocab_size"));
  c.embed_dim = std::stoi(expect_key(in, "embed_dim"));
  c.feature_dim = std::stoi(expect_key(in, "feature_dim"));
  c.num_classes = std::stoi(expect_key(in, "num_classes"));
  c.comparison = parse_comparison_kind(expect_key(in, "comparison"));
  c.use_transform_layer = expect_key(in, "transform") == "1";
  c.nonlinearity = parse_nonlinearity(expect_key(in, "nonlinearity"));
  c.l2_strength = read_double(expect_key(in, "l2_strength"));
  c.weight_init_range = read_double(expect_key(in, "weight_init_range"));
  c.embedding_init_range = read_double(expect_key(in, "embedding_init_range"));

  ModelParams params(c);
  for (const auto& shape : params.shapes()) {
    std::string tag, name;
    std::size_t rank = 0;
    if (!(in >> tag >> name >> rank) || tag != "block" || name != shape.name || rank != shape.rank) {
      throw std::runtime_error("checkpoint: expected block '" + std::string(shape.name) + "'");
    }
    for (std::size_t d = 0; d < rank; ++d) {
      std::size_t dim = 0;
      if (!(in >> dim) || dim != shape.dims[d]) {
        throw std::runtime_error("checkpoint: shape mismatch in block '" + std::string(shape.name) + "'");
      }
    }
    std::string token;
    for (std::size_t i = 0; i < shape.size; ++i) {
      if (!(in >> token)) throw std::runtime_error("checkpoint: truncated block '" + std::string(shape.name) + "'");
      params.values()[shape.offset + i] = read_double(token);
    }
  }
  return params;
}

}  // namespace natlog
