#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace natlog {

/// Malformed input; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Term vocabulary: dense indices in insertion order.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> terms);

  // Returns the index of term, inserting it if new.
  int add(std::string_view term);
  // -1 when absent.
  int find(std::string_view term) const;
  int at(std::string_view term) const;  // throws std::out_of_range

  const std::string& term(int index) const { return terms_.at(static_cast<std::size_t>(index)); }
  const std::vector<std::string>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, int> index_;
};

struct Example {
  int left = 0;
  int right = 0;
  int label = 0;

  friend bool operator==(const Example&, const Example&) = default;
};

/// Vocabulary, label inventory and labeled term pairs.
struct LabeledDataset {
  Vocabulary vocabulary;
  std::vector<std::string> labels;
  std::vector<Example> examples;

  std::vector<std::size_t> label_counts() const;
  // Share of the most frequent label; 0 for an empty dataset.
  double majority_share() const;
  int label_index(std::string_view name) const;  // throws std::out_of_range
};

}  // namespace natlog
