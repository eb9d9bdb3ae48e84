#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "natlog/boolean_world.hpp"
#include "natlog/dataset.hpp"

namespace natlog {

// `left<TAB>right<TAB>token`, one statement per line.
void write_statements(std::ostream& out, std::span<const Statement> statements, const Vocabulary& vocabulary);

/// Parses statement lines. Unknown terms are added to the vocabulary when
/// grow_vocabulary is set and rejected otherwise. Blank lines are skipped.
std::vector<Statement> read_statements(std::istream& in, Vocabulary& vocabulary, bool grow_vocabulary = true);

// `left<TAB>right<TAB>label`.
void write_labeled_dataset(std::ostream& out, const LabeledDataset& dataset);

/// Reads a labeled TSV against a fixed label inventory. The vocabulary is
/// built in order of first appearance.
LabeledDataset read_labeled_dataset(std::istream& in, std::vector<std::string> labels);

// Flat `key=value` lines, written in key order.
using MetaFile = std::map<std::string, std::string>;
void write_meta(std::ostream& out, const MetaFile& meta);
MetaFile read_meta(std::istream& in);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace natlog
