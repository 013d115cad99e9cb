#include "fragflow/descriptors.hpp"

#include <numeric>

#include "fragflow/elements.hpp"

namespace fragflow {
namespace {

// Cyclomatic number of the subgraph made of the bonds accepted by `keep`.
template <class Keep>
int cyclomatic(const MolGraph& g, Keep keep) {
  const int n = static_cast<int>(g.num_atoms());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int cycles = 0;
  for (const auto& b : g.bonds()) {
    if (!keep(b)) continue;
    const int ra = find(b.a), rb = find(b.b);
    if (ra == rb) ++cycles;
    else parent[ra] = rb;
  }
  return cycles;
}

int heavy_degree(const MolGraph& g, int atom) {
  int d = 0;
  for (const auto& nb : g.neighbors(atom))
    if (g.atom(nb.atom).is_heavy()) ++d;
  return d;
}

bool has_triple(const MolGraph& g, int atom) {
  for (const auto& nb : g.neighbors(atom))
    if (g.bond(nb.bond).order == BondOrder::Triple) return true;
  return false;
}

}  // namespace

DescriptorSet descriptors(const MolGraph& g) {
  DescriptorSet d;
  const RingInfo rings = ring_info(g);
  for (int i = 0; i < static_cast<int>(g.num_atoms()); ++i) {
    const Atom& a = g.atom(i);
    if (a.is_dummy()) continue;
    d.molecular_weight += element_by_number(a.element)->mass + 1.008 * a.hydrogens;
    if (a.is_heavy()) ++d.heavy_atoms;
    if (a.element == 7 || a.element == 8) {
      if (a.hydrogens >= 1) ++d.hbond_donors;
      if (a.charge <= 0) ++d.hbond_acceptors;
    }
  }
  d.rings = cyclomatic(g, [](const Bond&) { return true; });
  d.aromatic_rings = cyclomatic(g, [](const Bond& b) { return b.order == BondOrder::Aromatic; });
  for (int bi = 0; bi < static_cast<int>(g.num_bonds()); ++bi) {
    const Bond& b = g.bond(bi);
    if (b.order != BondOrder::Single || rings.bond_in_ring[bi]) continue;
    if (!g.atom(b.a).is_heavy() || !g.atom(b.b).is_heavy()) continue;
    if (heavy_degree(g, b.a) < 2 || heavy_degree(g, b.b) < 2) continue;
    if (has_triple(g, b.a) || has_triple(g, b.b)) continue;
    ++d.rotatable_bonds;
  }
  return d;
}

}  // namespace fragflow
