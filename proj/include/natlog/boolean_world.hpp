#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "natlog/relation.hpp"
#include "natlog/rng.hpp"

namespace natlog {

/// Named terms denoting nonempty proper subsets of a small domain. Several
/// terms may denote the same subset and many subsets go unnamed.
struct BooleanStructure {
  Domain domain{2};
  std::vector<std::string> terms;
  std::vector<FiniteSet> denotations;  // parallel to terms

  std::size_t num_terms() const { return terms.size(); }
};

/// Ordered pair of term indices and the relation between their denotations.
struct Statement {
  int left = 0;
  int right = 0;
  Relation relation = Relation::kEquivalence;

  friend bool operator==(const Statement&, const Statement&) = default;
};

struct SplitDataset {
  std::vector<Statement> train;
  std::vector<Statement> test_provable;
  std::vector<Statement> test_unprovable;
};

class InconsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Terms are named t0..t{n-1}; each denotation is drawn uniformly, with
// replacement, from the nonempty proper subsets of the domain.
BooleanStructure sample_structure(int num_terms, int domain_size, Rng& rng);

// One statement per ordered pair, self-pairs included, in row-major order.
std::vector<Statement> enumerate_statements(const BooleanStructure& s);

// Uniform partition; |test| = round(test_fraction * n). Both halves keep the
// input order.
std::pair<std::vector<Statement>, std::vector<Statement>> split_statements(
    std::span<const Statement> statements, double test_fraction, Rng& rng);

/// Dense map from ordered term pair to the derived relation, if any.
class ClosureMap {
 public:
  explicit ClosureMap(std::size_t num_terms)
      : n_(num_terms), cells_(num_terms * num_terms, kUnknown) {}

  std::size_t num_terms() const { return n_; }
  std::optional<Relation> get(int a, int b) const {
    const auto c = cells_[index(a, b)];
    if (c == kUnknown) return std::nullopt;
    return static_cast<Relation>(c);
  }
  bool contains(int a, int b) const { return cells_[index(a, b)] != kUnknown; }
  std::size_t size() const;
  std::vector<Statement> statements() const;

  friend bool operator==(const ClosureMap&, const ClosureMap&) = default;

 private:
  friend class ClosureBuilder;
  static constexpr std::uint8_t kUnknown = 0xff;
  std::size_t index(int a, int b) const {
    return static_cast<std::size_t>(a) * n_ + static_cast<std::size_t>(b);
  }

  std::size_t n_;
  std::vector<std::uint8_t> cells_;
};

/// Least fixpoint of reflexivity (t = t), the training facts, converse and
/// join. Throws InconsistencyError if two relations are derived for one pair.
ClosureMap provability_closure(std::span<const Statement> train, std::size_t num_terms);

// A test statement is provable iff the closure assigns its pair exactly its
// relation. A closure entry that contradicts a test statement throws
// InconsistencyError.
std::pair<std::vector<Statement>, std::vector<Statement>> partition_test(
    std::span<const Statement> test, const ClosureMap& closure);

struct SimulatedWorld {
  BooleanStructure structure;
  SplitDataset split;
};

// Structure sampling, enumeration, split and provability partition in one go,
// all drawn from a single random stream.
SimulatedWorld generate_world(int num_terms, int domain_size, double test_fraction, Rng& rng);

}  // namespace natlog
