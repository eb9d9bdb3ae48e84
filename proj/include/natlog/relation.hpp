#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace natlog {

// The seven natural-logic relations. The enumerator order is also the class
// index order used by the classifiers and the row/column order of the join
// table.
enum class Relation : std::uint8_t {
  kEquivalence = 0,       // x = y
  kEntailment,            // x strictly inside y
  kReverseEntailment,     // x strictly contains y
  kNegation,              // disjoint, union is the whole domain
  kAlternation,           // disjoint, union is not the whole domain
  kCover,                 // overlapping, union is the whole domain
  kIndependence,          // none of the above
};

inline constexpr std::size_t kNumRelations = 7;

inline constexpr std::array<Relation, kNumRelations> kAllRelations = {
    Relation::kEquivalence, Relation::kEntailment, Relation::kReverseEntailment,
    Relation::kNegation,    Relation::kAlternation, Relation::kCover,
    Relation::kIndependence};

constexpr std::size_t index_of(Relation r) { return static_cast<std::size_t>(r); }

Relation relation_from_index(std::size_t i);

// ASCII token used in dataset files: = < > ^ | v #
char to_token(Relation r);
// Unicode rendering: ≡ ⊏ ⊐ ^ | ‿ #
std::string_view to_symbol(Relation r);
std::string_view to_name(Relation r);
// Accepts the ASCII token; throws std::invalid_argument otherwise.
Relation parse_relation(std::string_view token);

/// Universe of entities, indexed 0..size-1. Sizes up to 64 fit a bitmask.
struct Domain {
  int size = 0;

  explicit Domain(int n);
  std::uint64_t full_mask() const {
    return size == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << size) - 1;
  }
};

/// Subset of a Domain stored as a bitmask over entity indices.
struct FiniteSet {
  std::uint64_t bits = 0;

  static FiniteSet of(std::initializer_list<int> members);

  bool empty() const { return bits == 0; }
  bool contains(int i) const { return (bits >> i) & 1u; }
  int count() const;

  friend FiniteSet operator&(FiniteSet a, FiniteSet b) { return {a.bits & b.bits}; }
  friend FiniteSet operator|(FiniteSet a, FiniteSet b) { return {a.bits | b.bits}; }
  friend bool operator==(FiniteSet, FiniteSet) = default;
  friend auto operator<=>(FiniteSet, FiniteSet) = default;
};

std::string to_string(FiniteSet s);

// True when s is neither empty nor the whole domain (and inside the domain).
bool is_nonvacuous(FiniteSet s, const Domain& d);

// All nonempty proper subsets of d in increasing bitmask order.
std::vector<FiniteSet> nonvacuous_subsets(const Domain& d);

/// Evaluates which of the seven relations holds between x and y. Both sets
/// must be nonempty proper subsets of d; the conditions overlap for the empty
/// set and the full domain, so those are rejected with std::invalid_argument.
/// Entailment and reverse entailment are strict: x == y is equivalence.
Relation relation_of_sets(FiniteSet x, FiniteSet y, const Domain& d);

// Swaps entailment and reverse entailment; every other relation is symmetric.
Relation converse(Relation r);

/// Composition: given a R b and b S c, the relation that must hold between a
/// and c, or nullopt when nothing follows.
std::optional<Relation> join(Relation r, Relation s);

struct JoinViolation {
  FiniteSet x, y, z;
  Relation xy, yz, predicted, actual;
};

/// Checks every defined join cell against brute-force set semantics over all
/// triples of nonempty proper subsets of d. Throws std::invalid_argument when
/// d has no such subsets (size < 2) or is too large to enumerate (size > 8).
std::vector<JoinViolation> verify_join_soundness(const Domain& d);

}  // namespace natlog
