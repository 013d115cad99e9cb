#include "fragflow/fragments.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "fragflow/smiles.hpp"

namespace fragflow {

const char* to_string(FragmentErrorKind kind) {
  switch (kind) {
    case FragmentErrorKind::DanglingAttachment: return "DanglingAttachment";
    case FragmentErrorKind::BadFragmentSyntax: return "BadFragmentSyntax";
    case FragmentErrorKind::ValenceOverflow: return "ValenceOverflow";
    case FragmentErrorKind::BadAssembly: return "BadAssembly";
  }
  return "Unknown";
}

FragmentError::FragmentError(FragmentErrorKind kind, const std::string& detail, int label)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind), label_(label) {}

FragRuleSet FragRuleSet::defaults() {
  FragRuleSet set;
  set.rules = {{6, 7, false}, {6, 8, false}, {6, 6, true}};
  return set;
}

int FragmentedMol::num_attachments() const {
  std::set<int> labels;
  for (const auto& frag : fragments)
    for (const auto& a : frag.atoms())
      if (a.is_dummy() && a.attachment > 0) labels.insert(a.attachment);
  return static_cast<int>(labels.size());
}

namespace {

bool is_carbonyl_carbon(const MolGraph& g, int atom) {
  if (g.atom(atom).element != 6) return false;
  for (const auto& nb : g.neighbors(atom))
    if (g.bond(nb.bond).order == BondOrder::Double && g.atom(nb.atom).element == 8) return true;
  return false;
}

// Member of a 3- or 4-membered ring.
bool in_small_ring(const MolGraph& g, int atom) {
  for (const auto& n1 : g.neighbors(atom))
    for (const auto& n2 : g.neighbors(n1.atom)) {
      if (n2.atom == atom) continue;
      if (g.find_bond(n2.atom, atom)) return true;
      for (const auto& n3 : g.neighbors(n2.atom))
        if (n3.atom != n1.atom && n3.atom != atom && g.find_bond(n3.atom, atom)) return true;
    }
  return false;
}

int heavy_count_from(const MolGraph& g, int start, int skip_bond) {
  std::vector<bool> seen(g.num_atoms(), false);
  std::vector<int> stack{start};
  seen[start] = true;
  int heavy = 0;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    if (g.atom(u).is_heavy()) ++heavy;
    for (const auto& nb : g.neighbors(u)) {
      if (nb.bond == skip_bond || seen[nb.atom]) continue;
      seen[nb.atom] = true;
      stack.push_back(nb.atom);
    }
  }
  return heavy;
}

std::vector<std::vector<int>> components(const MolGraph& g) {
  std::vector<int> comp(g.num_atoms(), -1);
  std::vector<std::vector<int>> out;
  for (int s = 0; s < static_cast<int>(g.num_atoms()); ++s) {
    if (comp[s] >= 0) continue;
    out.emplace_back();
    std::vector<int> stack{s};
    comp[s] = static_cast<int>(out.size()) - 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      out.back().push_back(u);
      for (const auto& nb : g.neighbors(u))
        if (comp[nb.atom] < 0) {
          comp[nb.atom] = comp[s];
          stack.push_back(nb.atom);
        }
    }
    std::sort(out.back().begin(), out.back().end());
  }
  return out;
}

MolGraph induced(const MolGraph& g, const std::vector<int>& atoms) {
  std::vector<int> index(g.num_atoms(), -1);
  MolGraph out;
  for (int a : atoms) index[a] = out.add_atom(g.atom(a));
  for (const auto& b : g.bonds())
    if (index[b.a] >= 0 && index[b.b] >= 0) out.add_bond(index[b.a], index[b.b], b.order);
  return out;
}

}  // namespace

bool bond_breakable(const MolGraph& g, int bond, const FragRuleSet& rules) {
  const Bond& b = g.bond(bond);
  if (b.order != BondOrder::Single) return false;
  const Atom& x = g.atom(b.a);
  const Atom& y = g.atom(b.b);
  if (!x.is_heavy() || !y.is_heavy()) return false;
  if (!rules.allow_ring_bonds && ring_info(g).bond_in_ring[bond]) return false;
  if (!rules.allow_small_ring_atoms && (in_small_ring(g, b.a) || in_small_ring(g, b.b))) return false;
  for (const auto& r : rules.rules) {
    const bool forward = x.element == r.element_a && y.element == r.element_b;
    const bool backward = x.element == r.element_b && y.element == r.element_a;
    if (!forward && !backward) continue;
    if (!r.carbonyl_carbon) return true;
    if (is_carbonyl_carbon(g, b.a) || is_carbonyl_carbon(g, b.b)) return true;
  }
  return false;
}

FragmentedMol fragment(const MolGraph& g, const FragRuleSet& rules, Rng& rng) {
  MolGraph work = g;
  std::vector<int> candidates;
  for (int b = 0; b < static_cast<int>(g.num_bonds()); ++b)
    if (bond_breakable(g, b, rules)) candidates.push_back(b);

  // Bonds are cut by rewiring each endpoint to a fresh dummy, so bond indices
  // of the original graph stay valid throughout.
  int label = 0;
  for (int b : candidates) {
    const Bond bond = work.bond(b);
    if (heavy_count_from(work, bond.a, b) < rules.min_fragment_heavy_atoms) continue;
    if (heavy_count_from(work, bond.b, b) < rules.min_fragment_heavy_atoms) continue;
    ++label;
    Atom dummy;
    dummy.element = 0;
    dummy.bracket = true;
    dummy.attachment = label;
    const int da = work.add_atom(dummy);
    const int db = work.add_atom(dummy);
    // Reattach: a keeps the original bond slot toward its dummy; b gets a new one.
    MolGraph rebuilt;
    for (const auto& atom : work.atoms()) rebuilt.add_atom(atom);
    for (int i = 0; i < static_cast<int>(work.num_bonds()); ++i) {
      const Bond& wb = work.bond(i);
      if (i == b) rebuilt.add_bond(bond.a, da, bond.order);
      else rebuilt.add_bond(wb.a, wb.b, wb.order);
    }
    rebuilt.add_bond(bond.b, db, bond.order);
    work = std::move(rebuilt);
  }

  FragmentedMol out;
  for (const auto& comp : components(work)) out.fragments.push_back(induced(work, comp));
  rng.shuffle(std::span<MolGraph>(out.fragments));
  return out;
}

std::string renumber_attachments(std::string_view notation) {
  std::string out;
  std::map<std::string, int> assigned;
  std::size_t i = 0;
  while (i < notation.size()) {
    if (notation[i] == '[') {
      std::size_t j = i + 1;
      while (j < notation.size() && std::isdigit(static_cast<unsigned char>(notation[j]))) ++j;
      if (j > i + 1 && j + 1 < notation.size() && notation[j] == '*' && notation[j + 1] == ']') {
        const std::string key(notation.substr(i + 1, j - i - 1));
        auto it = assigned.find(key);
        if (it == assigned.end()) it = assigned.emplace(key, static_cast<int>(assigned.size()) + 1).first;
        out += "[" + std::to_string(it->second) + "*]";
        i = j + 2;
        continue;
      }
    }
    out += notation[i++];
  }
  return out;
}

std::string to_notation(const FragmentedMol& f) {
  std::string text;
  for (std::size_t i = 0; i < f.fragments.size(); ++i) {
    if (i > 0) text += ' ';
    text += write_smiles(f.fragments[i]);
  }
  return renumber_attachments(text);
}

std::vector<std::string> split_fragments(std::string_view notation) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t space = notation.find(' ', start);
    parts.emplace_back(notation.substr(start, space == std::string_view::npos ? std::string_view::npos : space - start));
    if (space == std::string_view::npos) break;
    start = space + 1;
  }
  return parts;
}

FragmentedMol parse_notation(std::string_view text) {
  if (text.empty()) throw FragmentError(FragmentErrorKind::BadFragmentSyntax, "empty notation");
  FragmentedMol out;
  SmilesParseOptions options;
  options.allow_attachments = true;
  std::map<int, int> counts;
  for (const auto& part : split_fragments(text)) {
    if (part.empty()) throw FragmentError(FragmentErrorKind::BadFragmentSyntax, "empty fragment");
    try {
      out.fragments.push_back(parse_smiles(part, options));
    } catch (const SmilesError& e) {
      throw FragmentError(FragmentErrorKind::BadFragmentSyntax, "'" + part + "': " + e.what());
    }
    const MolGraph& frag = out.fragments.back();
    for (int i = 0; i < static_cast<int>(frag.num_atoms()); ++i) {
      const Atom& a = frag.atom(i);
      if (!a.is_dummy()) continue;
      if (a.attachment == 0) throw FragmentError(FragmentErrorKind::BadFragmentSyntax, "unlabelled attachment in '" + part + "'");
      if (frag.degree(i) != 1)
        throw FragmentError(FragmentErrorKind::BadFragmentSyntax, "attachment must carry exactly one bond", a.attachment);
      ++counts[a.attachment];
    }
  }
  for (const auto& [label, count] : counts)
    if (count != 2)
      throw FragmentError(FragmentErrorKind::DanglingAttachment,
                          "attachment " + std::to_string(label) + " appears " + std::to_string(count) + " time(s)", label);
  return out;
}

MolGraph reassemble(const FragmentedMol& f) {
  MolGraph g;
  for (const auto& frag : f.fragments) {
    const int offset = static_cast<int>(g.num_atoms());
    for (const auto& a : frag.atoms()) g.add_atom(a);
    for (const auto& b : frag.bonds()) g.add_bond(b.a + offset, b.b + offset, b.order);
  }

  std::map<int, std::vector<int>> by_label;
  for (int i = 0; i < static_cast<int>(g.num_atoms()); ++i)
    if (g.atom(i).is_dummy()) by_label[g.atom(i).attachment].push_back(i);

  std::vector<int> dummies;
  for (const auto& [label, ends] : by_label) {
    if (label == 0 || ends.size() != 2)
      throw FragmentError(FragmentErrorKind::DanglingAttachment, "attachment " + std::to_string(label) + " is not paired", label);
    int hosts[2];
    BondOrder orders[2];
    for (int k = 0; k < 2; ++k) {
      if (g.degree(ends[k]) != 1)
        throw FragmentError(FragmentErrorKind::BadAssembly, "attachment must carry exactly one bond", label);
      const Neighbor nb = g.neighbors(ends[k])[0];
      hosts[k] = nb.atom;
      orders[k] = g.bond(nb.bond).order;
    }
    if (orders[0] != orders[1]) throw FragmentError(FragmentErrorKind::BadAssembly, "attachment bond orders differ", label);
    if (g.atom(hosts[0]).is_dummy() || g.atom(hosts[1]).is_dummy())
      throw FragmentError(FragmentErrorKind::BadAssembly, "attachment bonded to attachment", label);
    if (hosts[0] == hosts[1]) throw FragmentError(FragmentErrorKind::BadAssembly, "attachment pair on one atom", label);
    if (g.find_bond(hosts[0], hosts[1])) throw FragmentError(FragmentErrorKind::BadAssembly, "join duplicates a bond", label);
    g.add_bond(hosts[0], hosts[1], orders[0]);
    dummies.push_back(ends[0]);
    dummies.push_back(ends[1]);
  }
  std::sort(dummies.rbegin(), dummies.rend());
  for (int d : dummies) g.remove_atom(d);

  if (!is_connected(g)) throw FragmentError(FragmentErrorKind::BadAssembly, "fragments do not join into one molecule");
  if (!validate_valence(g)) throw FragmentError(FragmentErrorKind::ValenceOverflow, "joined atom exceeds its valence");
  perceive_aromaticity(g);
  if (!validate_aromaticity(g)) throw FragmentError(FragmentErrorKind::BadAssembly, "aromatic atom outside an aromatic ring");
  return g;
}

std::string crossover(const FragmentedMol& a, const FragmentedMol& b, Rng& rng) {
  auto parts = split_fragments(to_notation(a));
  const auto donor = split_fragments(to_notation(b));
  const std::size_t slot = rng.index(parts.size());
  parts[slot] = donor[rng.index(donor.size())];
  std::string text;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) text += ' ';
    text += parts[i];
  }
  return renumber_attachments(text);
}

}  // namespace fragflow
