#include "natlog/wordnet.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <tuple>
#include <sstream>
#include <unordered_set>

namespace natlog::wordnet {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Iterates lines, stripping a trailing '\r'. Line numbers start at 1.
template <typename Fn>
void for_each_line(std::string_view content, Fn&& fn) {
  std::size_t line_no = 0, start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    auto line = content.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(++line_no, line);
    start = end + 1;
  }
}

bool all_of_digits(std::string_view s, int base) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [base](char c) {
    return base == 16 ? std::isxdigit(static_cast<unsigned char>(c)) : std::isdigit(static_cast<unsigned char>(c));
  });
}

std::size_t parse_count(std::string_view s, int base, std::size_t line, const char* field) {
  std::size_t v = 0;
  if (!all_of_digits(s, base) || std::from_chars(s.data(), s.data() + s.size(), v, base).ec != std::errc()) {
    throw ParseError(line, std::string("bad ") + field + " '" + std::string(s) + "'");
  }
  return v;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

int TaxonomyGraph::add_node(std::string_view id) {
  std::string key(id);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  const int i = static_cast<int>(nodes_.size());
  index_.emplace(key, i);
  nodes_.push_back({std::move(key), {}, {}});
  return i;
}

int TaxonomyGraph::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? -1 : it->second;
}

std::size_t TaxonomyGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& s : nodes_) n += s.parents.size();
  return n;
}

std::vector<std::vector<int>> TaxonomyGraph::children() const {
  std::vector<std::vector<int>> out(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (int p : nodes_[i].parents) out[static_cast<std::size_t>(p)].push_back(static_cast<int>(i));
  }
  return out;
}

void TaxonomyGraph::check_acyclic() const {
  // 0 = unvisited, 1 = on stack, 2 = done.
  std::vector<std::uint8_t> state(nodes_.size(), 0);
  for (std::size_t start = 0; start < nodes_.size(); ++start) {
    if (state[start] != 0) continue;
    std::vector<std::pair<int, std::size_t>> stack{{static_cast<int>(start), 0}};
    state[start] = 1;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      const auto& parents = nodes_[static_cast<std::size_t>(node)].parents;
      if (next == parents.size()) {
        state[static_cast<std::size_t>(node)] = 2;
        stack.pop_back();
        continue;
      }
      const int p = parents[next++];
      if (state[static_cast<std::size_t>(p)] == 1) {
        throw std::runtime_error("hypernym cycle through synset '" + nodes_[static_cast<std::size_t>(p)].id + "'");
      }
      if (state[static_cast<std::size_t>(p)] == 0) {
        state[static_cast<std::size_t>(p)] = 1;
        stack.emplace_back(p, 0);
      }
    }
  }
}

TaxonomyGraph parse_wndb(std::string_view content) {
  TaxonomyGraph g;
  struct PendingEdge {
    int child;
    std::string parent;
    std::size_t line;
  };
  std::vector<PendingEdge> edges;

  for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    // The license preamble lines start with two spaces.
    if (line.empty() || line.front() == ' ') return;
    const auto bar = line.find('|');
    const auto tokens = split_whitespace(line.substr(0, bar));
    std::size_t pos = 0;
    auto next = [&](const char* field) -> std::string_view {
      if (pos >= tokens.size()) throw ParseError(line_no, std::string("missing ") + field);
      return tokens[pos++];
    };
    const auto offset = next("synset offset");
    if (offset.size() != 8 || !all_of_digits(offset, 10)) {
      throw ParseError(line_no, "bad synset offset '" + std::string(offset) + "'");
    }
    parse_count(next("lex_filenum"), 10, line_no, "lex_filenum");
    const auto ss_type = next("ss_type");
    if (ss_type.size() != 1 || std::string_view("nvasr").find(ss_type[0]) == std::string_view::npos) {
      throw ParseError(line_no, "bad ss_type '" + std::string(ss_type) + "'");
    }
    if (g.find(offset) >= 0 && !g.node(g.find(offset)).lemmas.empty()) {
      throw ParseError(line_no, "duplicate synset offset " + std::string(offset));
    }
    const int node = g.add_node(offset);
    const auto w_cnt = parse_count(next("w_cnt"), 16, line_no, "w_cnt");
    if (w_cnt == 0) throw ParseError(line_no, "synset without words");
    for (std::size_t w = 0; w < w_cnt; ++w) {
      g.node(node).lemmas.emplace_back(next("word"));
      parse_count(next("lex_id"), 16, line_no, "lex_id");
    }
    const auto p_cnt = parse_count(next("p_cnt"), 10, line_no, "p_cnt");
    for (std::size_t p = 0; p < p_cnt; ++p) {
      const auto symbol = next("pointer symbol");
      const auto target = next("pointer offset");
      const auto pos_tag = next("pointer pos");
      const auto source_target = next("pointer source/target");
      if (target.size() != 8 || !all_of_digits(target, 10)) {
        throw ParseError(line_no, "bad pointer offset '" + std::string(target) + "'");
      }
      if (source_target.size() != 4 || !all_of_digits(source_target, 16)) {
        throw ParseError(line_no, "bad pointer source/target '" + std::string(source_target) + "'");
      }
      if (symbol == "@" && pos_tag == "n") edges.push_back({node, std::string(target), line_no});
    }
  });

  for (const auto& e : edges) {
    const int parent = g.find(e.parent);
    if (parent < 0 || g.node(parent).lemmas.empty()) {
      throw ParseError(e.line, "hypernym pointer to unknown synset " + e.parent);
    }
    auto& parents = g.node(e.child).parents;
    if (std::find(parents.begin(), parents.end(), parent) == parents.end()) parents.push_back(parent);
  }
  g.check_acyclic();
  return g;
}

TaxonomyGraph parse_edge_list(std::string_view content) {
  TaxonomyGraph g;
  for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    if (trim(line).empty() || trim(line).front() == '#') return;
    const auto fields = split(line, '\t');
    if (fields.size() != 3) throw ParseError(line_no, "expected child<TAB>parent<TAB>lemmas");
    const auto child_id = trim(fields[0]);
    const auto parent_id = trim(fields[1]);
    if (child_id.empty()) throw ParseError(line_no, "empty child synset");
    const int child = g.add_node(child_id);

    std::vector<std::string> lemmas;
    if (!trim(fields[2]).empty()) {
      for (auto lemma : split(fields[2], ',')) {
        lemma = trim(lemma);
        if (lemma.empty()) throw ParseError(line_no, "empty lemma");
        lemmas.emplace_back(lemma);
      }
    }
    auto& existing = g.node(child).lemmas;
    if (existing.empty()) {
      existing = std::move(lemmas);
    } else if (!lemmas.empty() && lemmas != existing) {
      throw ParseError(line_no, "conflicting lemma lists for synset '" + std::string(child_id) + "'");
    }

    if (parent_id.empty()) return;
    if (parent_id == child_id) throw ParseError(line_no, "self-loop on '" + std::string(child_id) + "'");
    const int parent = g.add_node(parent_id);
    auto& parents = g.node(child).parents;
    if (std::find(parents.begin(), parents.end(), parent) == parents.end()) parents.push_back(parent);
  });
  g.check_acyclic();
  return g;
}

TaxonomyGraph parse_taxonomy(std::string_view content, SourceFormat format) {
  return format == SourceFormat::kWndb ? parse_wndb(content) : parse_edge_list(content);
}

std::string resolve_sense_name(std::string_view index_noun_content, std::string_view sense_name) {
  const auto parts = split(sense_name, '.');
  if (parts.size() != 3 || parts[1] != "n") {
    throw std::invalid_argument("expected a noun sense name like organism.n.01, got '" + std::string(sense_name) + "'");
  }
  const auto sense = parse_count(parts[2], 10, 0, "sense number");
  if (sense == 0) throw std::invalid_argument("sense numbers start at 1");
  const std::string lemma = lowercase(parts[0]);

  std::string found;
  for_each_line(index_noun_content, [&](std::size_t line_no, std::string_view line) {
    if (!found.empty() || line.empty() || line.front() == ' ') return;
    const auto tokens = split_whitespace(line);
    if (tokens.size() < 4 || tokens[0] != lemma || tokens[1] != "n") return;
    // lemma pos synset_cnt p_cnt [ptr_symbol...] sense_cnt tagsense_cnt offsets...
    const auto synset_cnt = parse_count(tokens[2], 10, line_no, "synset_cnt");
    const auto p_cnt = parse_count(tokens[3], 10, line_no, "p_cnt");
    const std::size_t first_offset = 4 + p_cnt + 2;
    if (tokens.size() != first_offset + synset_cnt) throw ParseError(line_no, "malformed index.noun entry");
    if (sense > synset_cnt) throw std::invalid_argument("no sense " + std::string(parts[2]) + " for " + lemma);
    found = std::string(tokens[first_offset + sense - 1]);
  });
  if (found.empty()) throw std::invalid_argument("lemma '" + lemma + "' not found in index.noun");
  return found;
}

bool is_single_word(std::string_view lemma) {
  return !lemma.empty() && lemma.find_first_of(" _\t") == std::string_view::npos;
}

TermGraph extract_terms(const TaxonomyGraph& graph, std::string_view root_id) {
  const int root = graph.find(root_id);
  if (root < 0) throw std::invalid_argument("root synset '" + std::string(root_id) + "' not in taxonomy");
  TermGraph tg;
  tg.graph = &graph;
  tg.root = root;
  tg.terms.assign(graph.size(), {});

  const auto children = graph.children();
  std::vector<bool> seen(graph.size(), false);
  std::deque<int> queue{root};
  seen[static_cast<std::size_t>(root)] = true;
  while (!queue.empty()) {
    const int node = queue.front();
    queue.pop_front();
    tg.subtree.push_back(node);
    for (const auto& lemma : graph.node(node).lemmas) {
      if (!is_single_word(lemma)) continue;
      if (tg.vocabulary.find(lemma) < 0) {
        tg.vocabulary.add(lemma);
        tg.term_node.push_back(node);
        tg.terms[static_cast<std::size_t>(node)] = lemma;
      }
      break;
    }
    for (int c : children[static_cast<std::size_t>(node)]) {
      if (!seen[static_cast<std::size_t>(c)]) {
        seen[static_cast<std::size_t>(c)] = true;
        queue.push_back(c);
      }
    }
  }
  return tg;
}

LabeledDataset generate_pairs(const TermGraph& tg) {
  const auto& graph = *tg.graph;
  LabeledDataset ds;
  ds.vocabulary = tg.vocabulary;
  ds.labels = {std::string(kHypernym), std::string(kHyponym), std::string(kCoordinate)};
  constexpr int kHyper = 0, kHypo = 1, kCoord = 2;

  std::vector<int> term_of(graph.size(), -1);
  for (std::size_t t = 0; t < tg.term_node.size(); ++t) term_of[static_cast<std::size_t>(tg.term_node[t])] = static_cast<int>(t);

  const auto vocab = static_cast<std::uint64_t>(tg.term_node.size());
  std::unordered_map<std::uint64_t, int> labels;
  auto key = [vocab](int a, int b) { return static_cast<std::uint64_t>(a) * vocab + static_cast<std::uint64_t>(b); };

  // Ancestry over every hypernym path.
  std::vector<int> stamp(graph.size(), -1);
  for (std::size_t x = 0; x < tg.term_node.size(); ++x) {
    std::vector<int> stack(graph.node(tg.term_node[x]).parents);
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      if (stamp[static_cast<std::size_t>(node)] == static_cast<int>(x)) continue;
      stamp[static_cast<std::size_t>(node)] = static_cast<int>(x);
      if (const int y = term_of[static_cast<std::size_t>(node)]; y >= 0) {
        labels[key(static_cast<int>(x), y)] = kHypo;
        labels[key(y, static_cast<int>(x))] = kHyper;
      }
      for (int p : graph.node(node).parents) stack.push_back(p);
    }
  }

  // Coordinates: kept children of a common direct hypernym. Ancestry wins.
  const auto children = graph.children();
  for (const auto& kids : children) {
    std::vector<int> kept;
    for (int c : kids) {
      if (term_of[static_cast<std::size_t>(c)] >= 0) kept.push_back(term_of[static_cast<std::size_t>(c)]);
    }
    for (int a : kept) {
      for (int b : kept) {
        if (a != b) labels.try_emplace(key(a, b), kCoord);
      }
    }
  }

  ds.examples.reserve(labels.size());
  for (const auto& [k, label] : labels) {
    ds.examples.push_back({static_cast<int>(k / vocab), static_cast<int>(k % vocab), label});
  }
  std::sort(ds.examples.begin(), ds.examples.end(), [](const Example& a, const Example& b) {
    return std::tie(a.left, a.right) < std::tie(b.left, b.right);
  });
  return ds;
}

LabeledDataset downsample_coordinates(const LabeledDataset& dataset, Rng& rng, double target_ratio) {
  if (!(target_ratio >= 0.0)) throw std::invalid_argument("target_ratio must be nonnegative");
  const int coord = dataset.label_index(kCoordinate);
  const int hyper = dataset.label_index(kHypernym);
  const auto counts = dataset.label_counts();
  const double limit = target_ratio * static_cast<double>(counts[static_cast<std::size_t>(hyper)]);
  std::size_t remaining = counts[static_cast<std::size_t>(coord)];
  if (static_cast<double>(remaining) <= limit) return dataset;

  // Unordered pair -> number of coordinate examples it carries.
  std::map<std::pair<int, int>, std::size_t> groups;
  for (const auto& ex : dataset.examples) {
    if (ex.label == coord) groups[{std::min(ex.left, ex.right), std::max(ex.left, ex.right)}]++;
  }
  std::vector<std::pair<int, int>> order;
  for (const auto& [pair, n] : groups) order.push_back(pair);
  rng.shuffle(std::span(order));

  std::set<std::pair<int, int>> dropped;
  for (const auto& pair : order) {
    if (static_cast<double>(remaining) <= limit) break;
    remaining -= groups[pair];
    dropped.insert(pair);
  }

  LabeledDataset out;
  out.vocabulary = dataset.vocabulary;
  out.labels = dataset.labels;
  for (const auto& ex : dataset.examples) {
    if (ex.label == coord && dropped.count({std::min(ex.left, ex.right), std::max(ex.left, ex.right)})) continue;
    out.examples.push_back(ex);
  }
  return out;
}

FoldPlan make_folds(std::size_t num_examples, Rng& rng) {
  if (num_examples < static_cast<std::size_t>(kNumSlices)) throw std::invalid_argument("need at least 10 examples");
  std::vector<std::size_t> perm(num_examples);
  for (std::size_t i = 0; i < num_examples; ++i) perm[i] = i;
  rng.shuffle(std::span(perm));
  const std::size_t slice = num_examples / kNumSlices;
  FoldPlan plan;
  plan.num_examples = num_examples;
  for (int f = 0; f < kNumFolds; ++f) {
    std::vector<std::size_t> s(perm.begin() + static_cast<std::ptrdiff_t>(f * slice),
                               perm.begin() + static_cast<std::ptrdiff_t>((f + 1) * slice));
    std::sort(s.begin(), s.end());
    plan.test_slices.push_back(std::move(s));
  }
  return plan;
}

std::vector<std::size_t> FoldPlan::training_pool(int fold, double fraction, Rng& rng) const {
  if (fold < 0 || fold >= static_cast<int>(test_slices.size())) throw std::out_of_range("fold index out of range");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("training fraction must be in (0, 1]");
  std::vector<bool> in_test(num_examples, false);
  for (auto i : test_slices[static_cast<std::size_t>(fold)]) in_test[i] = true;
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < num_examples; ++i) {
    if (!in_test[i]) pool.push_back(i);
  }
  if (fraction < 1.0) {
    rng.shuffle(std::span(pool));
    const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool.size())));
    pool.resize(std::max<std::size_t>(keep, 1));
    std::sort(pool.begin(), pool.end());
  }
  return pool;
}

PretrainedVectors load_pretrained_vectors(std::string_view content, const Vocabulary& vocabulary, int embed_dim,
                                          Rng& rng, double init_range) {
  if (embed_dim < 1) throw std::invalid_argument("embed_dim must be positive");
  const std::size_t d = static_cast<std::size_t>(embed_dim);
  PretrainedVectors out;
  out.matrix.resize(vocabulary.size() * d);
  for (auto& v : out.matrix) v = rng.uniform(-init_range, init_range);
  out.covered.assign(vocabulary.size(), false);

  std::unordered_map<std::string, std::vector<int>> by_lower;
  for (std::size_t i = 0; i < vocabulary.size(); ++i) by_lower[lowercase(vocabulary.term(static_cast<int>(i)))].push_back(static_cast<int>(i));
  // 0 = random, 1 = lowercase match, 2 = exact match.
  std::vector<std::uint8_t> quality(vocabulary.size(), 0);
  std::vector<double> row(d);

  for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    const auto tokens = split_whitespace(line);
    if (tokens.empty()) return;
    if (tokens.size() - 1 != d) {
      throw ParseError(line_no, "vector has " + std::to_string(tokens.size() - 1) + " values, expected " +
                                    std::to_string(d));
    }
    for (std::size_t j = 0; j < d; ++j) {
      const auto tok = tokens[j + 1];
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), row[j]);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
        throw ParseError(line_no, "unparseable value '" + std::string(tok) + "'");
      }
    }
    auto assign = [&](int term, std::uint8_t q) {
      if (quality[static_cast<std::size_t>(term)] >= q) return;
      quality[static_cast<std::size_t>(term)] = q;
      std::copy(row.begin(), row.end(), out.matrix.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(term) * d));
    };
    if (const int exact = vocabulary.find(tokens[0]); exact >= 0) assign(exact, 2);
    if (auto it = by_lower.find(std::string(tokens[0])); it != by_lower.end()) {
      for (int term : it->second) assign(term, 1);
    }
  });

  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    out.covered[i] = quality[i] > 0;
    out.covered_count += out.covered[i];
  }
  out.coverage = vocabulary.size() == 0 ? 0.0
                                        : static_cast<double>(out.covered_count) / static_cast<double>(vocabulary.size());
  return out;
}

std::string synthetic_taxonomy(int num_terms, int min_depth, Rng& rng) {
  if (num_terms < min_depth + 1 || min_depth < 1) throw std::invalid_argument("synthetic taxonomy too small");
  std::vector<std::vector<int>> parents(1);
  std::vector<std::string> lemmas{"root"};
  auto word = [](int i) { return "w" + std::to_string(i); };

  // A spine guarantees the requested depth.
  for (int i = 1; i <= min_depth; ++i) {
    parents.push_back({i - 1});
    lemmas.push_back(word(i));
  }
  int next_word = min_depth + 1;
  int kept = min_depth + 1;
  while (kept < num_terms) {
    const int id = static_cast<int>(parents.size());
    std::vector<int> ps{static_cast<int>(rng.below(static_cast<std::uint64_t>(id)))};
    // Occasional second parent; always an earlier node, so the graph stays acyclic.
    if (id > 2 && rng.uniform01() < 0.03) {
      const int extra = static_cast<int>(rng.below(static_cast<std::uint64_t>(id)));
      if (extra != ps[0]) ps.push_back(extra);
    }
    parents.push_back(std::move(ps));
    // Occasional synset with only multiword lemmas.
    if (rng.uniform01() < 0.03) {
      lemmas.push_back("multi_word_" + std::to_string(id));
    } else {
      lemmas.push_back(word(next_word++) + (rng.uniform01() < 0.2 ? ",alt_form" + std::to_string(id) : ""));
      ++kept;
    }
  }

  std::ostringstream out;
  out << "S0\t\t" << lemmas[0] << '\n';
  for (std::size_t i = 1; i < parents.size(); ++i) {
    for (int p : parents[i]) out << 'S' << i << "\tS" << p << '\t' << lemmas[i] << '\n';
  }
  return out.str();
}

DatasetStats dataset_stats(const LabeledDataset& dataset) {
  DatasetStats s;
  s.term_count = dataset.vocabulary.size();
  const auto counts = dataset.label_counts();
  std::size_t best = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    s.label_counts.emplace_back(dataset.labels[i], counts[i]);
    if (counts[i] > counts[best]) best = i;
  }
  if (!counts.empty()) s.majority_label = dataset.labels[best];
  s.baseline_share = dataset.majority_share();
  return s;
}

}  // namespace natlog::wordnet
