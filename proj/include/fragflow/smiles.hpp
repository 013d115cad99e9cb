#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fragflow/molgraph.hpp"

namespace fragflow {

enum class SmilesErrorKind {
  EmptyInput,
  NonAscii,
  UnbalancedBranch,
  UnclosedRing,
  UnknownAtom,
  ValenceOverflow,
  UnsupportedFeature,  // stereo, isotopes, wildcards outside attachments
  MultipleComponents,
  BadSyntax,
};

const char* to_string(SmilesErrorKind kind);

class SmilesError : public std::runtime_error {
 public:
  SmilesError(SmilesErrorKind kind, std::size_t offset, const std::string& detail);

  SmilesErrorKind kind() const { return kind_; }
  /// Byte offset into the parsed text where the problem was detected.
  std::size_t offset() const { return offset_; }

 private:
  SmilesErrorKind kind_;
  std::size_t offset_;
};

struct SmilesParseOptions {
  /// Accept `[i*]` attachment atoms (fragment notation).
  bool allow_attachments = false;
};

/// Parses the supported SMILES subset: organic-subset and bracket atoms with
/// charge and H count, bonds `- = # :`, branches, ring closures 0-9 and %nn,
/// lowercase aromatic atoms. Implicit hydrogens are inferred from standard
/// valences and 6-membered Kekulé rings of C/N are perceived as aromatic.
MolGraph parse_smiles(std::string_view text, const SmilesParseOptions& options = {});

/// Canonical atom ranks from iterative neighbourhood refinement with
/// deterministic tie-breaking; a permutation of 0..n-1.
std::vector<int> canonical_ranks(const MolGraph& g);

/// Deterministic canonical SMILES; isomorphic graphs give identical strings.
std::string write_smiles(const MolGraph& g);

/// parse_smiles followed by write_smiles.
std::string canonical_smiles(std::string_view text);

}  // namespace fragflow
