#include "natlog/boolean_world.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace natlog {

BooleanStructure sample_structure(int num_terms, int domain_size, Rng& rng) {
  if (domain_size < 2) throw std::invalid_argument("domain_size must be at least 2");
  if (num_terms < 1) throw std::invalid_argument("num_terms must be at least 1");
  BooleanStructure s{Domain(domain_size), {}, {}};
  // Admissible masks are exactly 1 .. 2^n - 2.
  const std::uint64_t admissible = s.domain.full_mask() - 1;
  for (int i = 0; i < num_terms; ++i) {
    s.terms.push_back("t" + std::to_string(i));
    s.denotations.push_back({1 + rng.below(admissible)});
  }
  return s;
}

std::vector<Statement> enumerate_statements(const BooleanStructure& s) {
  const int n = static_cast<int>(s.num_terms());
  std::vector<Statement> out;
  out.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      out.push_back({a, b, relation_of_sets(s.denotations[a], s.denotations[b], s.domain)});
    }
  }
  return out;
}

std::pair<std::vector<Statement>, std::vector<Statement>> split_statements(
    std::span<const Statement> statements, double test_fraction, Rng& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("test_fraction must be in (0, 1)");
  }
  const std::size_t n = statements.size();
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(std::span(order));
  std::vector<bool> is_test(n, false);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;

  std::pair<std::vector<Statement>, std::vector<Statement>> out;
  for (std::size_t i = 0; i < n; ++i) {
    (is_test[i] ? out.second : out.first).push_back(statements[i]);
  }
  return out;
}

std::size_t ClosureMap::size() const {
  return static_cast<std::size_t>(std::count_if(cells_.begin(), cells_.end(),
                                                [](std::uint8_t c) { return c != kUnknown; }));
}

std::vector<Statement> ClosureMap::statements() const {
  std::vector<Statement> out;
  for (std::size_t a = 0; a < n_; ++a) {
    for (std::size_t b = 0; b < n_; ++b) {
      const auto c = cells_[a * n_ + b];
      if (c != kUnknown) out.push_back({static_cast<int>(a), static_cast<int>(b), static_cast<Relation>(c)});
    }
  }
  return out;
}

// Worklist fixpoint. Every fact is processed once: when (a,b) is popped it is
// joined against every known (b,c) on the right and every known (c,a) on the
// left, so each premise pair is combined when the later of the two arrives.
class ClosureBuilder {
 public:
  explicit ClosureBuilder(std::size_t n) : map_(n) {}

  void add(int a, int b, Relation r) {
    assert_fact(a, b, r);
    assert_fact(b, a, converse(r));
  }

  ClosureMap run() {
    const int n = static_cast<int>(map_.n_);
    while (!pending_.empty()) {
      const auto [a, b] = pending_.front();
      pending_.pop_front();
      const Relation r = *map_.get(a, b);
      for (int c = 0; c < n; ++c) {
        if (const auto s = map_.get(b, c)) {
          if (const auto t = join(r, *s)) add(a, c, *t);
        }
        if (const auto s = map_.get(c, a)) {
          if (const auto t = join(*s, r)) add(c, b, *t);
        }
      }
    }
    return std::move(map_);
  }

 private:
  void assert_fact(int a, int b, Relation r) {
    const auto n = static_cast<int>(map_.n_);
    if (a < 0 || b < 0 || a >= n || b >= n) throw std::out_of_range("statement term index out of range");
    auto& cell = map_.cells_[map_.index(a, b)];
    if (cell == ClosureMap::kUnknown) {
      cell = static_cast<std::uint8_t>(r);
      pending_.emplace_back(a, b);
    } else if (cell != static_cast<std::uint8_t>(r)) {
      throw InconsistencyError("conflicting relations derived for pair (" + std::to_string(a) + ", " +
                               std::to_string(b) + "): " + std::string(to_symbol(static_cast<Relation>(cell))) +
                               " vs " + std::string(to_symbol(r)));
    }
  }

  ClosureMap map_;
  std::deque<std::pair<int, int>> pending_;
};

ClosureMap provability_closure(std::span<const Statement> train, std::size_t num_terms) {
  ClosureBuilder builder(num_terms);
  for (std::size_t t = 0; t < num_terms; ++t) {
    builder.add(static_cast<int>(t), static_cast<int>(t), Relation::kEquivalence);
  }
  for (const auto& s : train) builder.add(s.left, s.right, s.relation);
  return builder.run();
}

std::pair<std::vector<Statement>, std::vector<Statement>> partition_test(
    std::span<const Statement> test, const ClosureMap& closure) {
  std::pair<std::vector<Statement>, std::vector<Statement>> out;
  for (const auto& s : test) {
    const auto derived = closure.get(s.left, s.right);
    if (derived && *derived != s.relation) {
      throw InconsistencyError("closure contradicts test statement");
    }
    (derived ? out.first : out.second).push_back(s);
  }
  return out;
}

SimulatedWorld generate_world(int num_terms, int domain_size, double test_fraction, Rng& rng) {
  SimulatedWorld w;
  w.structure = sample_structure(num_terms, domain_size, rng);
  const auto all = enumerate_statements(w.structure);
  auto [train, test] = split_statements(all, test_fraction, rng);
  const auto closure = provability_closure(train, w.structure.num_terms());
  auto [provable, unprovable] = partition_test(test, closure);
  w.split = {std::move(train), std::move(provable), std::move(unprovable)};
  return w;
}

}  // namespace natlog
