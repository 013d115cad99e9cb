#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fragflow {

enum class BondOrder : std::uint8_t { Single = 1, Double = 2, Triple = 3, Aromatic = 4 };

/// Contribution of a bond to an atom's valence before any aromatic pi
/// bookkeeping: aromatic bonds count one.
inline int valence_contribution(BondOrder order) {
  return order == BondOrder::Aromatic ? 1 : static_cast<int>(order);
}

struct Atom {
  int element = 6;  // atomic number, 0 for an attachment dummy
  int charge = 0;
  bool aromatic = false;
  int hydrogens = 0;     // total attached hydrogens
  bool bracket = false;  // hydrogens fixed as written rather than inferred
  int attachment = 0;    // label i of an [i*] attachment point, 0 otherwise

  bool is_dummy() const { return element == 0; }
  bool is_heavy() const { return element > 1; }
  friend bool operator==(const Atom&, const Atom&) = default;
};

struct Bond {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::Single;

  int other(int atom) const { return atom == a ? b : a; }
};

struct Neighbor {
  int atom;
  int bond;
};

class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Undirected molecular graph of typed atoms and bonds.
///
/// The container enforces structural invariants (valid endpoints, no self
/// loops, no duplicate bonds); chemical validity is checked separately by
/// validate_valence / validate_aromaticity.
class MolGraph {
 public:
  int add_atom(const Atom& atom);
  int add_bond(int a, int b, BondOrder order);

  /// Removes an atom and its bonds. Indices above `index` shift down by one.
  void remove_atom(int index);
  void remove_bond(int bond_index);
  void set_bond_order(int bond_index, BondOrder order) { bonds_.at(bond_index).order = order; }

  std::size_t num_atoms() const { return atoms_.size(); }
  std::size_t num_bonds() const { return bonds_.size(); }
  bool empty() const { return atoms_.empty(); }

  const Atom& atom(int i) const { return atoms_.at(i); }
  Atom& atom(int i) { return atoms_.at(i); }
  const Bond& bond(int i) const { return bonds_.at(i); }
  std::span<const Atom> atoms() const { return atoms_; }
  std::span<const Bond> bonds() const { return bonds_; }
  std::span<const Neighbor> neighbors(int atom) const { return adjacency_.at(atom); }
  int degree(int atom) const { return static_cast<int>(adjacency_.at(atom).size()); }

  std::optional<int> find_bond(int a, int b) const;

 private:
  void rebuild_adjacency();

  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

/// Sum of bond valence contributions plus attached hydrogens.
int explicit_valence(const MolGraph& g, int atom);

/// Recomputes hydrogens on every non-bracket atom from the standard valence
/// table. Returns the index of the first atom whose bonds already exceed every
/// allowed valence, or nullopt when all atoms fit.
std::optional<int> infer_implicit_hydrogens(MolGraph& g);

/// Hydrogen count a SMILES reader would infer for `atom` if it were written
/// without brackets; nullopt when no allowed valence fits.
std::optional<int> implicit_hydrogens_for(const MolGraph& g, int atom);

bool atom_valence_ok(const MolGraph& g, int atom);

/// True iff every atom's bond-order sum plus hydrogens fits an allowed valence
/// for its element and charge.
bool validate_valence(const MolGraph& g);

/// Every aromatic bond joins aromatic atoms and every aromatic atom lies on a
/// ring of aromatic bonds.
bool validate_aromaticity(const MolGraph& g);

bool is_connected(const MolGraph& g);

/// Structural plus chemical validity: connected, valences fit, aromatic flags
/// consistent.
bool is_valid(const MolGraph& g);

struct RingInfo {
  std::vector<bool> bond_in_ring;
  std::vector<bool> atom_in_ring;
};

/// Ring membership from bridge detection: a bond is a ring bond iff removing
/// it leaves its endpoints connected.
RingInfo ring_info(const MolGraph& g);

/// Marks 6-membered rings of sp2 carbon/nitrogen written in Kekulé form as
/// aromatic. Repeats until fused systems stop changing.
void perceive_aromaticity(MolGraph& g);

/// Graph isomorphism respecting atom attributes and bond orders (backtracking
/// search; no canonical ranks involved).
bool are_isomorphic(const MolGraph& a, const MolGraph& b);

/// Copy of `g` with atoms reordered so that new index i holds old atom
/// `order[i]`.
MolGraph permute_atoms(const MolGraph& g, std::span<const int> order);

}  // namespace fragflow
