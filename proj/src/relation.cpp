#include "natlog/relation.hpp"

#include <bit>
#include <sstream>

namespace natlog {

namespace {

using R = Relation;
constexpr std::optional<Relation> kDot = std::nullopt;

// Rows: relation of (a, b). Columns: relation of (b, c).
// Order: = < > ^ | v #
constexpr std::array<std::array<std::optional<Relation>, kNumRelations>, kNumRelations> kJoinTable = {{
    {R::kEquivalence, R::kEntailment, R::kReverseEntailment, R::kNegation, R::kAlternation, R::kCover, R::kIndependence},
    {R::kEntailment, R::kEntailment, kDot, R::kAlternation, R::kAlternation, kDot, kDot},
    {R::kReverseEntailment, kDot, R::kReverseEntailment, R::kCover, kDot, R::kCover, kDot},
    {R::kNegation, R::kCover, R::kAlternation, R::kEquivalence, R::kReverseEntailment, R::kEntailment, R::kIndependence},
    {R::kAlternation, kDot, R::kAlternation, R::kEntailment, kDot, R::kEntailment, kDot},
    {R::kCover, R::kCover, kDot, R::kReverseEntailment, R::kReverseEntailment, kDot, kDot},
    {R::kIndependence, kDot, kDot, R::kIndependence, kDot, kDot, kDot},
}};

constexpr std::array<char, kNumRelations> kTokens = {'=', '<', '>', '^', '|', 'v', '#'};
constexpr std::array<std::string_view, kNumRelations> kSymbols = {"≡", "⊏", "⊐", "^", "|", "‿", "#"};
constexpr std::array<std::string_view, kNumRelations> kNames = {
    "equivalence", "entailment", "reverse_entailment", "negation",
    "alternation", "cover",      "independence"};

}  // namespace

Relation relation_from_index(std::size_t i) {
  if (i >= kNumRelations) throw std::out_of_range("relation index out of range");
  return static_cast<Relation>(i);
}

char to_token(Relation r) { return kTokens[index_of(r)]; }
std::string_view to_symbol(Relation r) { return kSymbols[index_of(r)]; }
std::string_view to_name(Relation r) { return kNames[index_of(r)]; }

Relation parse_relation(std::string_view token) {
  if (token.size() == 1) {
    for (std::size_t i = 0; i < kNumRelations; ++i) {
      if (kTokens[i] == token[0]) return static_cast<Relation>(i);
    }
  }
  throw std::invalid_argument("unknown relation token '" + std::string(token) + "'");
}

Domain::Domain(int n) : size(n) {
  if (n < 1 || n > 64) throw std::invalid_argument("domain size must be in [1, 64]");
}

FiniteSet FiniteSet::of(std::initializer_list<int> members) {
  FiniteSet s;
  for (int m : members) s.bits |= std::uint64_t{1} << m;
  return s;
}

int FiniteSet::count() const { return std::popcount(bits); }

std::string to_string(FiniteSet s) {
  std::ostringstream out;
  out << '{';
  bool first = true;
  for (int i = 0; i < 64; ++i) {
    if (!s.contains(i)) continue;
    if (!first) out << ',';
    out << i;
    first = false;
  }
  out << '}';
  return out.str();
}

bool is_nonvacuous(FiniteSet s, const Domain& d) {
  return s.bits != 0 && (s.bits & ~d.full_mask()) == 0 && s.bits != d.full_mask();
}

std::vector<FiniteSet> nonvacuous_subsets(const Domain& d) {
  if (d.size > 24) throw std::invalid_argument("domain too large to enumerate subsets");
  std::vector<FiniteSet> out;
  for (std::uint64_t b = 1; b < d.full_mask(); ++b) out.push_back({b});
  return out;
}

Relation relation_of_sets(FiniteSet x, FiniteSet y, const Domain& d) {
  if (!is_nonvacuous(x, d) || !is_nonvacuous(y, d)) {
    throw std::invalid_argument("relation_of_sets requires nonempty proper subsets of the domain");
  }
  if (x == y) return Relation::kEquivalence;
  const std::uint64_t meet = x.bits & y.bits;
  const bool exhaustive = (x.bits | y.bits) == d.full_mask();
  if (meet == x.bits) return Relation::kEntailment;
  if (meet == y.bits) return Relation::kReverseEntailment;
  if (meet == 0) return exhaustive ? Relation::kNegation : Relation::kAlternation;
  return exhaustive ? Relation::kCover : Relation::kIndependence;
}

Relation converse(Relation r) {
  switch (r) {
    case Relation::kEntailment: return Relation::kReverseEntailment;
    case Relation::kReverseEntailment: return Relation::kEntailment;
    default: return r;
  }
}

std::optional<Relation> join(Relation r, Relation s) {
  return kJoinTable[index_of(r)][index_of(s)];
}

std::vector<JoinViolation> verify_join_soundness(const Domain& d) {
  if (d.size < 2) throw std::invalid_argument("domain has no nonempty proper subsets");
  if (d.size > 8) throw std::invalid_argument("domain too large for exhaustive join check");
  const auto sets = nonvacuous_subsets(d);
  std::vector<JoinViolation> violations;
  for (FiniteSet x : sets) {
    for (FiniteSet y : sets) {
      const Relation xy = relation_of_sets(x, y, d);
      for (FiniteSet z : sets) {
        const Relation yz = relation_of_sets(y, z, d);
        const auto predicted = join(xy, yz);
        if (!predicted) continue;
        const Relation actual = relation_of_sets(x, z, d);
        if (actual != *predicted) violations.push_back({x, y, z, xy, yz, *predicted, actual});
      }
    }
  }
  return violations;
}

}  // namespace natlog
