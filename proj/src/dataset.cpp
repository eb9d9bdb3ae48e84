#include "natlog/dataset.hpp"

#include <algorithm>
#include <stdexcept>

namespace natlog {

Vocabulary::Vocabulary(std::vector<std::string> terms) {
  for (const auto& t : terms) add(t);
}

int Vocabulary::add(std::string_view term) {
  std::string key(term);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(terms_.size());
  index_.emplace(key, id);
  terms_.push_back(std::move(key));
  return id;
}

int Vocabulary::find(std::string_view term) const {
  auto it = index_.find(std::string(term));
  return it == index_.end() ? -1 : it->second;
}

int Vocabulary::at(std::string_view term) const {
  const int id = find(term);
  if (id < 0) throw std::out_of_range("unknown term '" + std::string(term) + "'");
  return id;
}

std::vector<std::size_t> LabeledDataset::label_counts() const {
  std::vector<std::size_t> counts(labels.size(), 0);
  for (const auto& ex : examples) counts.at(static_cast<std::size_t>(ex.label))++;
  return counts;
}

double LabeledDataset::majority_share() const {
  if (examples.empty()) return 0.0;
  const auto counts = label_counts();
  return static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
         static_cast<double>(examples.size());
}

int LabeledDataset::label_index(std::string_view name) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == name) return static_cast<int>(i);
  }
  throw std::out_of_range("unknown label '" + std::string(name) + "'");
}

}  // namespace natlog
