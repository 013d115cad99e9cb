#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fragflow/fragments.hpp"

namespace fragflow {

struct CorpusOptions {
  int count = 5000;
  int min_tokens = 8;   // of the fragment notation
  int max_tokens = 40;
  std::uint64_t seed = 0;
  FragRuleSet rules = FragRuleSet::defaults();
  /// Give up after count * this many assemblies.
  int attempts_per_molecule = 200;
};

/// Unique canonical SMILES assembled from a small set of head, linker and
/// tail templates. Every molecule carries at least one heteroatom. Throws
/// std::runtime_error when the attempt limit is hit first.
std::vector<std::string> generate_corpus(const CorpusOptions& options);

/// Fragment notation of each SMILES, molecule i fragmented with rng fork i.
std::vector<std::string> fragment_corpus(std::span<const std::string> smiles, const FragRuleSet& rules, std::uint64_t seed);

/// Lines of a text file with surrounding whitespace trimmed; empty lines and
/// lines starting with '#' skipped.
std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, std::span<const std::string> lines);

}  // namespace fragflow
