#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <functional>
#include <map>
#include <string>
#include <tuple>

#include "fragflow/elements.hpp"
#include "fragflow/smiles.hpp"

namespace fragflow {
namespace {

// Rank of each key = number of keys strictly smaller; equal keys share a rank.
template <class Key>
std::vector<int> ranks_from_keys(const std::vector<Key>& keys) {
  const int n = static_cast<int>(keys.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return keys[a] < keys[b]; });
  std::vector<int> ranks(n, 0);
  for (int k = 1; k < n; ++k)
    ranks[order[k]] = keys[order[k]] == keys[order[k - 1]] ? ranks[order[k - 1]] : k;
  return ranks;
}

int count_classes(const std::vector<int>& ranks) {
  std::vector<int> sorted = ranks;
  std::sort(sorted.begin(), sorted.end());
  return static_cast<int>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

std::vector<int> refine(const MolGraph& g, std::vector<int> ranks) {
  const int n = static_cast<int>(g.num_atoms());
  int classes = count_classes(ranks);
  while (classes < n) {
    using Key = std::pair<int, std::vector<std::pair<int, int>>>;
    std::vector<Key> keys(n);
    for (int i = 0; i < n; ++i) {
      keys[i].first = ranks[i];
      for (const auto& nb : g.neighbors(i))
        keys[i].second.emplace_back(ranks[nb.atom], static_cast<int>(g.bond(nb.bond).order));
      std::sort(keys[i].second.begin(), keys[i].second.end());
    }
    auto next = ranks_from_keys(keys);
    const int next_classes = count_classes(next);
    ranks = std::move(next);
    if (next_classes == classes) break;
    classes = next_classes;
  }
  return ranks;
}

std::string element_text(const Atom& a) {
  std::string sym(element_by_number(a.element)->symbol);
  if (a.aromatic) sym[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(sym[0])));
  return sym;
}

std::string atom_text(const MolGraph& g, int i) {
  const Atom& a = g.atom(i);
  if (a.is_dummy()) return a.attachment > 0 ? "[" + std::to_string(a.attachment) + "*]" : "[*]";
  const ElementInfo* e = element_by_number(a.element);
  const auto implicit = implicit_hydrogens_for(g, i);
  const bool bare = e->organic && a.charge == 0 && (!a.aromatic || e->aromatic_ok) && implicit &&
                    *implicit == a.hydrogens && g.degree(i) + a.hydrogens > 0;
  if (bare) return element_text(a);
  std::string out = "[" + element_text(a);
  if (a.hydrogens > 0) out += a.hydrogens == 1 ? "H" : "H" + std::to_string(a.hydrogens);
  if (a.charge != 0) {
    out += a.charge > 0 ? '+' : '-';
    if (std::abs(a.charge) > 1) out += std::to_string(std::abs(a.charge));
  }
  return out + "]";
}

std::string bond_text(const MolGraph& g, const Bond& b, bool in_ring) {
  const bool both_aromatic = g.atom(b.a).aromatic && g.atom(b.b).aromatic;
  switch (b.order) {
    case BondOrder::Double: return "=";
    case BondOrder::Triple: return "#";
    case BondOrder::Aromatic: return in_ring ? "" : ":";
    case BondOrder::Single: return both_aromatic ? "-" : "";
  }
  return "";
}

class Writer {
 public:
  explicit Writer(const MolGraph& g) : g_(g), ranks_(canonical_ranks(g)), rings_(ring_info(g)) {
    const int n = static_cast<int>(g.num_atoms());
    sorted_neighbors_.resize(n);
    for (int i = 0; i < n; ++i) {
      auto& nbs = sorted_neighbors_[i];
      nbs.assign(g.neighbors(i).begin(), g.neighbors(i).end());
      std::sort(nbs.begin(), nbs.end(), [&](const Neighbor& x, const Neighbor& y) { return ranks_[x.atom] < ranks_[y.atom]; });
    }
    visit_order_.assign(n, -1);
    children_.resize(n);
    closures_.resize(n);
    tree_bond_.assign(g.num_bonds(), false);
  }

  std::string run() {
    const int n = static_cast<int>(g_.num_atoms());
    std::vector<int> by_rank(n);
    for (int i = 0; i < n; ++i) by_rank[ranks_[i]] = i;
    std::string out;
    for (int start : by_rank) {
      if (visit_order_[start] >= 0) continue;
      discover(start, -1);
      if (!out.empty()) out += '.';
      emit(start, out);
    }
    return out;
  }

 private:
  void discover(int u, int parent_bond) {
    visit_order_[u] = counter_++;
    for (const auto& nb : sorted_neighbors_[u]) {
      if (nb.bond == parent_bond) continue;
      if (visit_order_[nb.atom] < 0) {
        tree_bond_[nb.bond] = true;
        children_[u].push_back(nb);
        discover(nb.atom, nb.bond);
      } else if (!tree_bond_[nb.bond] && !closure_seen(nb.bond)) {
        closures_[u].push_back(nb);
        closures_[nb.atom].push_back({u, nb.bond});
        seen_closures_.push_back(nb.bond);
      }
    }
  }

  bool closure_seen(int bond) const {
    return std::find(seen_closures_.begin(), seen_closures_.end(), bond) != seen_closures_.end();
  }

  void emit(int u, std::string& out) {
    out += atom_text(g_, u);
    auto closures = closures_[u];
    std::sort(closures.begin(), closures.end(), [&](const Neighbor& x, const Neighbor& y) { return ranks_[x.atom] < ranks_[y.atom]; });
    std::vector<int> released;
    for (const auto& c : closures) {
      auto open = open_rings_.find(c.bond);
      if (open != open_rings_.end()) {
        out += ring_label(open->second);
        released.push_back(open->second);
        open_rings_.erase(open);
      } else {
        const int number = lowest_free();
        in_use_.push_back(number);
        open_rings_[c.bond] = number;
        out += bond_text(g_, g_.bond(c.bond), rings_.bond_in_ring[c.bond]) + ring_label(number);
      }
    }
    for (int r : released) in_use_.erase(std::find(in_use_.begin(), in_use_.end(), r));

    const auto& kids = children_[u];
    for (std::size_t k = 0; k < kids.size(); ++k) {
      const bool last = k + 1 == kids.size();
      if (!last) out += '(';
      out += bond_text(g_, g_.bond(kids[k].bond), rings_.bond_in_ring[kids[k].bond]);
      emit(kids[k].atom, out);
      if (!last) out += ')';
    }
  }

  int lowest_free() const {
    for (int r = 1;; ++r)
      if (std::find(in_use_.begin(), in_use_.end(), r) == in_use_.end()) return r;
  }

  static std::string ring_label(int number) {
    if (number < 10) return std::to_string(number);
    return "%" + std::to_string(number);
  }

  const MolGraph& g_;
  std::vector<int> ranks_;
  RingInfo rings_;
  std::vector<std::vector<Neighbor>> sorted_neighbors_;
  std::vector<int> visit_order_;
  int counter_ = 0;
  std::vector<std::vector<Neighbor>> children_;
  std::vector<std::vector<Neighbor>> closures_;
  std::vector<bool> tree_bond_;
  std::vector<int> seen_closures_;
  std::map<int, int> open_rings_;  // bond -> ring number
  std::vector<int> in_use_;
};

}  // namespace

std::vector<int> canonical_ranks(const MolGraph& g) {
  const int n = static_cast<int>(g.num_atoms());
  using Invariant = std::tuple<int, int, int, int, bool, int>;
  std::vector<Invariant> initial(n);
  for (int i = 0; i < n; ++i) {
    const Atom& a = g.atom(i);
    initial[i] = {a.element, g.degree(i), a.charge, a.hydrogens, a.aromatic, a.attachment};
  }
  std::vector<int> ranks = refine(g, ranks_from_keys(initial));

  // Break the remaining ties one atom at a time: within the lowest tied
  // class, the atom with the smallest index keeps the rank and the rest move
  // up by one, then refinement propagates the split.
  while (count_classes(ranks) < n) {
    std::vector<int> counts(n, 0);
    for (int r : ranks) ++counts[r];
    int tied = 0;
    while (counts[tied] < 2) ++tied;
    bool kept = false;
    for (int i = 0; i < n; ++i) {
      if (ranks[i] != tied) continue;
      if (kept) ranks[i] = tied + 1;
      kept = true;
    }
    ranks = refine(g, ranks);
  }
  return ranks;
}

std::string write_smiles(const MolGraph& g) { return Writer(g).run(); }

}  // namespace fragflow
