#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "natlog/dataset.hpp"
#include "natlog/rng.hpp"

namespace natlog {

enum class ComparisonKind { kNN, kNTN };
enum class Nonlinearity { kTanh, kLeakyRelu };

std::string_view to_string(ComparisonKind k);
std::string_view to_string(Nonlinearity f);
ComparisonKind parse_comparison_kind(std::string_view s);
Nonlinearity parse_nonlinearity(std::string_view s);

struct ModelConfig {
  int vocab_size = 1;
  int embed_dim = 11;     // n
  int feature_dim = 90;   // m
  int num_classes = 7;
  ComparisonKind comparison = ComparisonKind::kNTN;
  bool use_transform_layer = false;
  Nonlinearity nonlinearity = Nonlinearity::kTanh;
  double l2_strength = 1e-3;
  double weight_init_range = 0.05;
  double embedding_init_range = 0.1;

  void validate() const;  // throws std::invalid_argument
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Parameter blocks in storage order.
enum class Block : std::size_t {
  kEmbeddings = 0,   // vocab x n
  kTransformWeights, // n x n (transform layer only)
  kTransformBias,    // n
  kCompareWeights,   // m x 2n
  kCompareBias,      // m
  kCompareTensor,    // m x n x n, [k][left i][right j] (NTN only)
  kSoftmaxWeights,   // classes x m
  kSoftmaxBias,      // classes
};
inline constexpr std::size_t kNumBlocks = 8;

struct BlockShape {
  std::string_view name;
  std::array<std::size_t, 3> dims{0, 1, 1};
  std::size_t rank = 1;
  std::size_t offset = 0;
  std::size_t size = 0;
  bool regularized = false;
  friend bool operator==(const BlockShape&, const BlockShape&) = default;
};

/// All learnable arrays of one model in a single flat buffer. Gradients use
/// the same type so optimizers and checks can walk both in lockstep.
class ModelParams {
 public:
  explicit ModelParams(const ModelConfig& config);  // all zeros

  const ModelConfig& config() const { return config_; }
  const BlockShape& shape(Block b) const { return shapes_[static_cast<std::size_t>(b)]; }
  const std::array<BlockShape, kNumBlocks>& shapes() const { return shapes_; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> block(Block b);
  std::span<const double> block(Block b) const;

  std::span<double> embedding(int term);
  std::span<const double> embedding(int term) const;

  void set_zero();
  bool all_finite() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  ModelConfig config_;
  std::array<BlockShape, kNumBlocks> shapes_{};
  std::vector<double> values_;
};

using Gradients = ModelParams;

// Weights uniform in +-weight_init_range, biases zero, embeddings uniform in
// +-embedding_init_range.
void initialize(ModelParams& params, Rng& rng);

/// Class distribution for one term pair.
std::vector<double> forward(const ModelParams& params, int left, int right);

struct Prediction {
  int label = 0;
  std::vector<double> probabilities;
};

// Argmax of forward(), lowest class index on ties.
Prediction predict(const ModelParams& params, int left, int right);
int argmax(std::span<const double> probabilities);

/// Mean cross-entropy of the true labels plus (l2/2) times the squared norm of
/// every weight array (biases excluded). Embedding rows are regularized only
/// when their term occurs in the batch, so rows outside the batch keep a zero
/// gradient.
double batch_loss(const ModelParams& params, std::span<const Example> batch);

/// Exact gradient of batch_loss. Returns the loss as well; num_correct, when
/// given, receives how many examples the current params classify correctly.
double backward(const ModelParams& params, std::span<const Example> batch, Gradients& grads,
                std::size_t* num_correct = nullptr);
Gradients backward(const ModelParams& params, std::span<const Example> batch);

/// Max over all parameters of |analytic - numeric| / max(|analytic| + |numeric|, 1e-8)
/// with central differences of half-width epsilon.
double gradient_check(const ModelParams& params, std::span<const Example> batch, double epsilon = 1e-5);

/// Text checkpoint: a header with the config followed by one line per block.
/// Values use shortest round-trip formatting, so save -> load -> save is
/// byte-identical.
void save_checkpoint(const ModelParams& params, std::ostream& out);
ModelParams load_checkpoint(std::istream& in);

}  // namespace natlog
