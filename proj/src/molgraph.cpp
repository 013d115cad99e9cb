#include "fragflow/molgraph.hpp"

#include <algorithm>
#include <array>
#include <functional>

#include "fragflow/elements.hpp"

namespace fragflow {

int MolGraph::add_atom(const Atom& atom) {
  atoms_.push_back(atom);
  adjacency_.emplace_back();
  return static_cast<int>(atoms_.size()) - 1;
}

int MolGraph::add_bond(int a, int b, BondOrder order) {
  const int n = static_cast<int>(atoms_.size());
  if (a < 0 || b < 0 || a >= n || b >= n) throw GraphError("bond endpoint out of range");
  if (a == b) throw GraphError("self-loop bond");
  if (find_bond(a, b)) throw GraphError("duplicate bond");
  bonds_.push_back({a, b, order});
  const int index = static_cast<int>(bonds_.size()) - 1;
  adjacency_[a].push_back({b, index});
  adjacency_[b].push_back({a, index});
  return index;
}

std::optional<int> MolGraph::find_bond(int a, int b) const {
  if (a < 0 || a >= static_cast<int>(adjacency_.size())) return std::nullopt;
  for (const auto& nb : adjacency_[a])
    if (nb.atom == b) return nb.bond;
  return std::nullopt;
}

void MolGraph::remove_bond(int bond_index) {
  bonds_.erase(bonds_.begin() + bond_index);
  rebuild_adjacency();
}

void MolGraph::remove_atom(int index) {
  atoms_.erase(atoms_.begin() + index);
  std::vector<Bond> kept;
  kept.reserve(bonds_.size());
  for (Bond b : bonds_) {
    if (b.a == index || b.b == index) continue;
    if (b.a > index) --b.a;
    if (b.b > index) --b.b;
    kept.push_back(b);
  }
  bonds_ = std::move(kept);
  rebuild_adjacency();
}

void MolGraph::rebuild_adjacency() {
  adjacency_.assign(atoms_.size(), {});
  for (int i = 0; i < static_cast<int>(bonds_.size()); ++i) {
    adjacency_[bonds_[i].a].push_back({bonds_[i].b, i});
    adjacency_[bonds_[i].b].push_back({bonds_[i].a, i});
  }
}

int explicit_valence(const MolGraph& g, int atom) {
  int total = g.atom(atom).hydrogens;
  for (const auto& nb : g.neighbors(atom)) total += valence_contribution(g.bond(nb.bond).order);
  return total;
}

namespace {

int aromatic_bond_count(const MolGraph& g, int atom) {
  int count = 0;
  for (const auto& nb : g.neighbors(atom))
    if (g.bond(nb.bond).order == BondOrder::Aromatic) ++count;
  return count;
}

// Aromatic atoms that take part in the ring pi system through a double bond
// of the Kekulé form; o, s and se donate a lone pair instead.
bool wants_pi_bond(const Atom& a) {
  if (!a.aromatic) return false;
  return a.element == 5 || a.element == 6 || a.element == 7 || a.element == 15;
}

std::optional<int> smallest_fit(std::span<const int> allowed, int used) {
  for (int v : allowed)
    if (v >= used) return v;
  return std::nullopt;
}

}  // namespace

std::optional<int> implicit_hydrogens_for(const MolGraph& g, int atom) {
  const Atom& a = g.atom(atom);
  if (a.is_dummy()) return 0;
  const auto allowed = allowed_valences(a.element, a.charge);
  int used = 0;
  for (const auto& nb : g.neighbors(atom)) used += valence_contribution(g.bond(nb.bond).order);
  if (a.aromatic && wants_pi_bond(a) && aromatic_bond_count(g, atom) > 0) {
    if (auto v = smallest_fit(allowed, used + 1)) return *v - (used + 1);
  }
  if (auto v = smallest_fit(allowed, used)) return *v - used;
  return std::nullopt;
}

std::optional<int> infer_implicit_hydrogens(MolGraph& g) {
  std::optional<int> first_bad;
  for (int i = 0; i < static_cast<int>(g.num_atoms()); ++i) {
    if (g.atom(i).bracket) continue;
    if (auto h = implicit_hydrogens_for(g, i)) {
      g.atom(i).hydrogens = *h;
    } else {
      g.atom(i).hydrogens = 0;
      if (!first_bad) first_bad = i;
    }
  }
  return first_bad;
}

bool atom_valence_ok(const MolGraph& g, int atom) {
  const Atom& a = g.atom(atom);
  if (a.hydrogens < 0) return false;
  if (a.is_dummy()) return a.hydrogens == 0 && g.degree(atom) >= 1 && explicit_valence(g, atom) <= 3;
  const auto allowed = allowed_valences(a.element, a.charge);
  const int used = explicit_valence(g, atom);
  const bool fits = std::find(allowed.begin(), allowed.end(), used) != allowed.end();
  if (fits) return true;
  // One extra unit for the pi bond an aromatic atom carries in Kekulé form.
  if (a.aromatic && aromatic_bond_count(g, atom) > 0)
    return std::find(allowed.begin(), allowed.end(), used + 1) != allowed.end();
  return false;
}

bool validate_valence(const MolGraph& g) {
  for (int i = 0; i < static_cast<int>(g.num_atoms()); ++i)
    if (!atom_valence_ok(g, i)) return false;
  return true;
}

RingInfo ring_info(const MolGraph& g) {
  const int n = static_cast<int>(g.num_atoms());
  RingInfo info;
  info.bond_in_ring.assign(g.num_bonds(), true);
  info.atom_in_ring.assign(g.num_atoms(), false);
  std::vector<int> disc(n, -1), low(n, 0);
  int timer = 0;
  std::function<void(int, int)> dfs = [&](int u, int parent_bond) {
    disc[u] = low[u] = timer++;
    for (const auto& nb : g.neighbors(u)) {
      if (nb.bond == parent_bond) continue;
      if (disc[nb.atom] >= 0) {
        low[u] = std::min(low[u], disc[nb.atom]);
      } else {
        dfs(nb.atom, nb.bond);
        low[u] = std::min(low[u], low[nb.atom]);
        if (low[nb.atom] > disc[u]) info.bond_in_ring[nb.bond] = false;
      }
    }
  };
  for (int i = 0; i < n; ++i)
    if (disc[i] < 0) dfs(i, -1);
  for (int b = 0; b < static_cast<int>(g.num_bonds()); ++b) {
    if (!info.bond_in_ring[b]) continue;
    info.atom_in_ring[g.bond(b).a] = true;
    info.atom_in_ring[g.bond(b).b] = true;
  }
  return info;
}

bool validate_aromaticity(const MolGraph& g) {
  MolGraph aromatic_only;
  for (const auto& a : g.atoms()) aromatic_only.add_atom(a);
  for (const auto& b : g.bonds()) {
    if (b.order != BondOrder::Aromatic) continue;
    if (!g.atom(b.a).aromatic || !g.atom(b.b).aromatic) return false;
    aromatic_only.add_bond(b.a, b.b, b.order);
  }
  const RingInfo rings = ring_info(aromatic_only);
  for (int i = 0; i < static_cast<int>(g.num_atoms()); ++i)
    if (g.atom(i).aromatic && !rings.atom_in_ring[i]) return false;
  return true;
}

bool is_connected(const MolGraph& g) {
  if (g.empty()) return false;
  std::vector<bool> seen(g.num_atoms(), false);
  std::vector<int> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (const auto& nb : g.neighbors(u)) {
      if (seen[nb.atom]) continue;
      seen[nb.atom] = true;
      ++count;
      stack.push_back(nb.atom);
    }
  }
  return count == g.num_atoms();
}

bool is_valid(const MolGraph& g) {
  return is_connected(g) && validate_valence(g) && validate_aromaticity(g);
}

namespace {

// All simple 6-cycles, each reported once with its smallest atom first.
std::vector<std::array<int, 6>> six_rings(const MolGraph& g, const RingInfo& rings) {
  std::vector<std::array<int, 6>> found;
  std::array<int, 6> path{};
  std::function<void(int, int)> extend = [&](int depth, int start) {
    const int u = path[depth - 1];
    for (const auto& nb : g.neighbors(u)) {
      if (!rings.bond_in_ring[nb.bond]) continue;
      const int v = nb.atom;
      if (depth == 6) {
        if (v == start && path[1] < path[5]) found.push_back(path);
        continue;
      }
      if (v <= start) continue;
      if (std::find(path.begin(), path.begin() + depth, v) != path.begin() + depth) continue;
      path[depth] = v;
      extend(depth + 1, start);
    }
  };
  for (int s = 0; s < static_cast<int>(g.num_atoms()); ++s) {
    if (!rings.atom_in_ring[s]) continue;
    path[0] = s;
    extend(1, s);
  }
  return found;
}

}  // namespace

void perceive_aromaticity(MolGraph& g) {
  const RingInfo rings = ring_info(g);
  const auto candidates = six_rings(g, rings);
  if (candidates.empty()) return;

  auto sp2_ok = [&](int atom) {
    const Atom& a = g.atom(atom);
    if (a.aromatic) return true;
    if ((a.element != 6 && a.element != 7) || a.charge != 0) return false;
    int doubles = 0;
    for (const auto& nb : g.neighbors(atom)) {
      const BondOrder order = g.bond(nb.bond).order;
      if (order == BondOrder::Triple) return false;
      if (order == BondOrder::Double) {
        if (!rings.bond_in_ring[nb.bond]) return false;
        ++doubles;
      }
    }
    return doubles == 1;
  };

  bool changed = true;
  std::vector<bool> done(candidates.size(), false);
  while (changed) {
    changed = false;
    for (std::size_t r = 0; r < candidates.size(); ++r) {
      if (done[r]) continue;
      const auto& ring = candidates[r];
      if (!std::all_of(ring.begin(), ring.end(), sp2_ok)) continue;
      bool all_aromatic = true;
      for (int i = 0; i < 6; ++i) {
        const auto bond = g.find_bond(ring[i], ring[(i + 1) % 6]);
        if (g.bond(*bond).order == BondOrder::Triple) all_aromatic = false;
      }
      if (!all_aromatic) continue;
      for (int i = 0; i < 6; ++i) {
        g.atom(ring[i]).aromatic = true;
        g.set_bond_order(*g.find_bond(ring[i], ring[(i + 1) % 6]), BondOrder::Aromatic);
      }
      done[r] = true;
      changed = true;
    }
  }
}

MolGraph permute_atoms(const MolGraph& g, std::span<const int> order) {
  if (order.size() != g.num_atoms()) throw GraphError("permutation size mismatch");
  std::vector<int> new_index(g.num_atoms(), -1);
  MolGraph out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    new_index[order[i]] = static_cast<int>(i);
    out.add_atom(g.atom(order[i]));
  }
  for (const auto& b : g.bonds()) out.add_bond(new_index[b.a], new_index[b.b], b.order);
  return out;
}

}  // namespace fragflow
