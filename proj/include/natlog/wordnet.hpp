#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "natlog/dataset.hpp"
#include "natlog/rng.hpp"

namespace natlog::wordnet {

using natlog::ParseError;

struct Synset {
  std::string id;
  std::vector<std::string> lemmas;  // file order
  std::vector<int> parents;         // direct hypernyms
};

/// Synsets and their direct hypernym links (child -> parent). Acyclic.
class TaxonomyGraph {
 public:
  int add_node(std::string_view id);  // idempotent
  int find(std::string_view id) const;  // -1 when absent
  const Synset& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
  Synset& node(int i) { return nodes_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return nodes_.size(); }
  std::size_t edge_count() const;
  // Children lists, built on demand.
  std::vector<std::vector<int>> children() const;
  // Throws std::runtime_error naming a synset on the cycle.
  void check_acyclic() const;

 private:
  std::vector<Synset> nodes_;
  std::unordered_map<std::string, int> index_;
};

enum class SourceFormat { kWndb, kEdgeList };

/// WordNet 3.0 `data.noun` content. Only `@` hypernym pointers to nouns are
/// kept; other pointer symbols are skipped. Synset ids are the 8-digit offsets.
TaxonomyGraph parse_wndb(std::string_view content);

/// Lines `child<TAB>parent<TAB>lemma1,lemma2,...`. An empty parent field
/// declares a node without adding an edge. Blank lines and `#` comments are
/// ignored.
TaxonomyGraph parse_edge_list(std::string_view content);

TaxonomyGraph parse_taxonomy(std::string_view content, SourceFormat format);

/// Maps `lemma.n.NN` to a data.noun offset using WordNet's `index.noun`
/// (synset offsets are listed in sense order there).
std::string resolve_sense_name(std::string_view index_noun_content, std::string_view sense_name);

/// Hyponym subtree of a root, with one surface term per kept synset.
struct TermGraph {
  const TaxonomyGraph* graph = nullptr;
  int root = -1;
  std::vector<int> subtree;        // synset indices in breadth-first order
  std::vector<std::string> terms;  // per graph node; empty when not kept
  Vocabulary vocabulary;           // kept terms in subtree order
  std::vector<int> term_node;      // vocabulary index -> synset index
};

bool is_single_word(std::string_view lemma);

/// Breadth-first over the root's transitive hyponyms (root included), children
/// in graph order. Each synset keeps its first single-word lemma; synsets
/// without one, or whose term was already taken by an earlier synset, are
/// dropped.
TermGraph extract_terms(const TaxonomyGraph& graph, std::string_view root_id);

inline constexpr std::string_view kHypernym = "hypernym";
inline constexpr std::string_view kHyponym = "hyponym";
inline constexpr std::string_view kCoordinate = "coordinate";

/// (x, y, hyponym) and (y, x, hypernym) for every kept x strictly below kept
/// y; (x, y, coordinate) for kept terms sharing a direct hypernym and not in
/// an ancestry relation. Labels are indexed hypernym=0, hyponym=1,
/// coordinate=2; examples are sorted by (left, right).
LabeledDataset generate_pairs(const TermGraph& terms);

inline constexpr double kDefaultCoordinateRatio = 0.7;

/// Drops random coordinate pairs (both directions together) until the
/// coordinate count is at most target_ratio * hypernym count.
LabeledDataset downsample_coordinates(const LabeledDataset& dataset, Rng& rng,
                                      double target_ratio = kDefaultCoordinateRatio);

inline constexpr int kNumFolds = 5;
inline constexpr int kNumSlices = 10;

/// Ten 10% slices of a random permutation; the first five are the test slices.
struct FoldPlan {
  std::size_t num_examples = 0;
  std::vector<std::vector<std::size_t>> test_slices;  // kNumFolds slices

  // Everything outside the fold's test slice, subsampled to round(fraction *
  // pool) with rng when fraction < 1. Sorted ascending.
  std::vector<std::size_t> training_pool(int fold, double fraction, Rng& rng) const;
};

FoldPlan make_folds(std::size_t num_examples, Rng& rng);

struct PretrainedVectors {
  std::vector<double> matrix;  // vocab x dim, row-major
  std::vector<bool> covered;
  std::size_t covered_count = 0;
  double coverage = 0.0;
};

/// Reads `token v1 ... vd` lines. Vocabulary terms found in the file (exact
/// match first, then lowercase) get their vector; the rest draw uniformly from
/// +-init_range. A row with d != embed_dim or an unparseable value throws
/// ParseError.
PretrainedVectors load_pretrained_vectors(std::string_view content, const Vocabulary& vocabulary, int embed_dim,
                                          Rng& rng, double init_range = 0.1);

/// Random tree-shaped taxonomy as edge-list text, for exercising the pipeline
/// without WordNet. Roughly num_terms single-word synsets under a root named
/// `root`, at least min_depth levels deep, with a few multiword-only synsets
/// and a few nodes with a second parent.
std::string synthetic_taxonomy(int num_terms, int min_depth, Rng& rng);

struct DatasetStats {
  std::size_t term_count = 0;
  std::vector<std::pair<std::string, std::size_t>> label_counts;
  std::string majority_label;
  double baseline_share = 0.0;
};

DatasetStats dataset_stats(const LabeledDataset& dataset);

}  // namespace natlog::wordnet
