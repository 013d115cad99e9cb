#include <algorithm>
#include <functional>

#include "fragflow/molgraph.hpp"

namespace fragflow {
namespace {

// Attributes that must agree between mapped atoms. The bracket flag is a
// spelling detail of the source text and is ignored.
bool same_atom(const Atom& x, const Atom& y) {
  return x.element == y.element && x.charge == y.charge && x.aromatic == y.aromatic &&
         x.hydrogens == y.hydrogens && x.attachment == y.attachment;
}

}  // namespace

bool are_isomorphic(const MolGraph& a, const MolGraph& b) {
  const int n = static_cast<int>(a.num_atoms());
  if (n != static_cast<int>(b.num_atoms()) || a.num_bonds() != b.num_bonds()) return false;
  if (n == 0) return true;

  // Match order: BFS over `a` so each new atom (after the first of each
  // component) already has a mapped neighbour constraining its candidates.
  std::vector<int> order;
  std::vector<bool> queued(n, false);
  for (int s = 0; s < n; ++s) {
    if (queued[s]) continue;
    queued[s] = true;
    order.push_back(s);
    for (std::size_t head = order.size() - 1; head < order.size(); ++head)
      for (const auto& nb : a.neighbors(order[head]))
        if (!queued[nb.atom]) {
          queued[nb.atom] = true;
          order.push_back(nb.atom);
        }
  }

  std::vector<int> map_ab(n, -1), map_ba(n, -1);
  std::function<bool(int)> extend = [&](int depth) {
    if (depth == n) return true;
    const int u = order[depth];
    for (int v = 0; v < n; ++v) {
      if (map_ba[v] >= 0 || !same_atom(a.atom(u), b.atom(v)) || a.degree(u) != b.degree(v)) continue;
      bool ok = true;
      for (const auto& nb : a.neighbors(u)) {
        const int mapped = map_ab[nb.atom];
        if (mapped < 0) continue;
        const auto bond = b.find_bond(v, mapped);
        if (!bond || b.bond(*bond).order != a.bond(nb.bond).order) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      // Mapped neighbours of v must come from mapped neighbours of u.
      int mapped_a = 0, mapped_b = 0;
      for (const auto& nb : a.neighbors(u)) mapped_a += map_ab[nb.atom] >= 0;
      for (const auto& nb : b.neighbors(v)) mapped_b += map_ba[nb.atom] >= 0;
      if (mapped_a != mapped_b) continue;
      map_ab[u] = v;
      map_ba[v] = u;
      if (extend(depth + 1)) return true;
      map_ab[u] = -1;
      map_ba[v] = -1;
    }
    return false;
  };
  return extend(0);
}

}  // namespace fragflow
