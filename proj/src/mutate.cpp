#include <array>

#include "fragflow/optimizer.hpp"
#include "fragflow/smiles.hpp"

namespace fragflow {
namespace {

constexpr std::array<int, 6> kSwapElements{6, 7, 8, 9, 16, 17};
constexpr std::array<int, 5> kAppendElements{6, 7, 8, 9, 17};

template <std::size_t N>
int pick_other(const std::array<int, N>& choices, int current, Rng& rng) {
  std::vector<int> options;
  for (int e : choices)
    if (e != current) options.push_back(e);
  return options[rng.index(options.size())];
}

// Rebuilds implicit hydrogens and round-trips through SMILES so the result is
// exactly what a reader of its canonical string would get.
std::optional<MolGraph> finish(MolGraph g) {
  if (g.empty() || infer_implicit_hydrogens(g)) return std::nullopt;
  if (!is_valid(g)) return std::nullopt;
  try {
    MolGraph out = parse_smiles(write_smiles(g));
    if (!is_valid(out)) return std::nullopt;
    return out;
  } catch (const SmilesError&) {
    return std::nullopt;
  }
}

}  // namespace

std::optional<MolGraph> try_mutation(const MolGraph& mol, MutationKind kind, Rng& rng) {
  MolGraph g = mol;
  const int n = static_cast<int>(g.num_atoms());
  std::vector<int> pool;
  switch (kind) {
    case MutationKind::ElementSwap: {
      for (int i = 0; i < n; ++i)
        if (g.atom(i).is_heavy() && !g.atom(i).aromatic && g.atom(i).charge == 0) pool.push_back(i);
      if (pool.empty()) return std::nullopt;
      Atom& a = g.atom(pool[rng.index(pool.size())]);
      a.element = pick_other(kSwapElements, a.element, rng);
      a.bracket = false;
      break;
    }
    case MutationKind::BondOrder: {
      for (int b = 0; b < static_cast<int>(g.num_bonds()); ++b)
        if (g.bond(b).order != BondOrder::Aromatic) pool.push_back(b);
      if (pool.empty()) return std::nullopt;
      const int b = pool[rng.index(pool.size())];
      const int current = static_cast<int>(g.bond(b).order);
      int next = static_cast<int>(rng.uniform_int(1, 2));
      if (next >= current) ++next;
      g.set_bond_order(b, static_cast<BondOrder>(next));
      break;
    }
    case MutationKind::AppendAtom: {
      for (int i = 0; i < n; ++i)
        if (g.atom(i).is_heavy() && g.atom(i).hydrogens > 0) pool.push_back(i);
      if (pool.empty()) return std::nullopt;
      const int host = pool[rng.index(pool.size())];
      if (g.atom(host).bracket) --g.atom(host).hydrogens;
      Atom added;
      added.element = kAppendElements[rng.index(kAppendElements.size())];
      g.add_bond(host, g.add_atom(added), BondOrder::Single);
      break;
    }
    case MutationKind::DeleteAtom: {
      if (n < 2) return std::nullopt;
      for (int i = 0; i < n; ++i)
        if (g.degree(i) == 1) pool.push_back(i);
      if (pool.empty()) return std::nullopt;
      const int victim = pool[rng.index(pool.size())];
      const Neighbor host = g.neighbors(victim)[0];
      if (g.atom(host.atom).bracket) g.atom(host.atom).hydrogens += valence_contribution(g.bond(host.bond).order);
      g.remove_atom(victim);
      break;
    }
  }
  return finish(std::move(g));
}

MolGraph mutate(const MolGraph& mol, Rng& rng) {
  for (int attempt = 0; attempt < 10; ++attempt) {
    const auto kind = static_cast<MutationKind>(rng.index(4));
    if (auto out = try_mutation(mol, kind, rng)) return *out;
  }
  return mol;
}

}  // namespace fragflow
