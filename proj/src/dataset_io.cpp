#include "natlog/dataset_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace natlog {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, '\t')) out.push_back(field);
  if (!line.empty() && line.back() == '\t') out.emplace_back();
  return out;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

int lookup(Vocabulary& vocabulary, const std::string& term, bool grow, std::size_t line_no) {
  if (term.empty()) throw ParseError(line_no, "empty term");
  if (grow) return vocabulary.add(term);
  const int id = vocabulary.find(term);
  if (id < 0) throw ParseError(line_no, "unknown term '" + term + "'");
  return id;
}

}  // namespace

void write_statements(std::ostream& out, std::span<const Statement> statements, const Vocabulary& vocabulary) {
  for (const auto& s : statements) {
    out << vocabulary.term(s.left) << '\t' << vocabulary.term(s.right) << '\t' << to_token(s.relation) << '\n';
  }
}

std::vector<Statement> read_statements(std::istream& in, Vocabulary& vocabulary, bool grow_vocabulary) {
  std::vector<Statement> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (blank(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) throw ParseError(line_no, "expected left<TAB>right<TAB>relation");
    Statement s;
    s.left = lookup(vocabulary, fields[0], grow_vocabulary, line_no);
    s.right = lookup(vocabulary, fields[1], grow_vocabulary, line_no);
    try {
      s.relation = parse_relation(fields[2]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, e.what());
    }
    out.push_back(s);
  }
  return out;
}

void write_labeled_dataset(std::ostream& out, const LabeledDataset& dataset) {
  for (const auto& ex : dataset.examples) {
    out << dataset.vocabulary.term(ex.left) << '\t' << dataset.vocabulary.term(ex.right) << '\t'
        << dataset.labels.at(static_cast<std::size_t>(ex.label)) << '\n';
  }
}

LabeledDataset read_labeled_dataset(std::istream& in, std::vector<std::string> labels) {
  LabeledDataset ds;
  ds.labels = std::move(labels);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (blank(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) throw ParseError(line_no, "expected left<TAB>right<TAB>label");
    Example ex;
    ex.left = lookup(ds.vocabulary, fields[0], true, line_no);
    ex.right = lookup(ds.vocabulary, fields[1], true, line_no);
    try {
      ex.label = ds.label_index(fields[2]);
    } catch (const std::out_of_range& e) {
      throw ParseError(line_no, e.what());
    }
    ds.examples.push_back(ex);
  }
  return ds;
}

void write_meta(std::ostream& out, const MetaFile& meta) {
  for (const auto& [k, v] : meta) out << k << '=' << v << '\n';
}

MetaFile read_meta(std::istream& in) {
  MetaFile meta;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (blank(line)) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError(line_no, "expected key=value");
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return meta;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw std::ios_base::failure("write to '" + path.string() + "' failed");
}

}  // namespace natlog
