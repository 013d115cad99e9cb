#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fragflow/molgraph.hpp"
#include "fragflow/rng.hpp"

namespace fragflow {

/// A breakable bond class: an unordered pair of elements. With
/// `carbonyl_carbon` set, the rule is C-C(=O): one of the two carbons must
/// carry a double bond to oxygen.
struct FragRule {
  int element_a = 6;
  int element_b = 6;
  bool carbonyl_carbon = false;
};

struct FragRuleSet {
  std::vector<FragRule> rules;
  int min_fragment_heavy_atoms = 2;
  bool allow_ring_bonds = false;
  /// Endpoints on 3- or 4-membered rings are protected unless this is set.
  bool allow_small_ring_atoms = false;

  /// Acyclic single C-N, C-O and C-C(=O) bonds, fragments of at least two
  /// heavy atoms.
  static FragRuleSet defaults();
};

struct FragmentedMol {
  std::vector<MolGraph> fragments;

  /// Number of distinct attachment labels.
  int num_attachments() const;
};

enum class FragmentErrorKind { DanglingAttachment, BadFragmentSyntax, ValenceOverflow, BadAssembly };

const char* to_string(FragmentErrorKind kind);

class FragmentError : public std::runtime_error {
 public:
  FragmentError(FragmentErrorKind kind, const std::string& detail, int label = 0);
  FragmentErrorKind kind() const { return kind_; }
  /// Attachment label involved, 0 when not applicable.
  int label() const { return label_; }

 private:
  FragmentErrorKind kind_;
  int label_;
};

bool bond_breakable(const MolGraph& g, int bond, const FragRuleSet& rules);

/// Cuts, in bond index order, every rule-matching bond whose removal leaves
/// both sides with at least `min_fragment_heavy_atoms` heavy atoms. Each cut
/// becomes a pair of `[k*]` atoms, k = 1..K in cut order. The fragment list
/// is shuffled with `rng`.
FragmentedMol fragment(const MolGraph& g, const FragRuleSet& rules, Rng& rng);

/// Space-separated fragment SMILES with attachment labels renumbered by first
/// appearance in the text.
std::string to_notation(const FragmentedMol& f);

/// Inverse of to_notation. Every label must occur exactly twice and each
/// attachment atom must have exactly one bond.
FragmentedMol parse_notation(std::string_view text);

/// Joins each attachment pair into one bond between the host atoms.
/// Throws FragmentError (ValenceOverflow, BadAssembly) for impossible joins.
MolGraph reassemble(const FragmentedMol& f);

/// Rewrites `[i*]` labels to 1..K in order of first appearance.
std::string renumber_attachments(std::string_view notation);

/// Fragment-space crossover: the notation of `a` with one uniformly chosen
/// fragment replaced by a uniformly chosen fragment of `b`, labels
/// renumbered. The result need not be a valid molecule.
std::string crossover(const FragmentedMol& a, const FragmentedMol& b, Rng& rng);

/// Splits fragment notation on single spaces.
std::vector<std::string> split_fragments(std::string_view notation);

}  // namespace fragflow
