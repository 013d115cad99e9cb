#include <array>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string_view>

#include "fragflow/corpus.hpp"
#include "fragflow/smiles.hpp"
#include "fragflow/tokenizer.hpp"

namespace fragflow {
namespace {

// Heads end on the atom the next piece bonds to; linkers continue from their
// last atom outside any branch; tails close the chain.
constexpr std::array<std::string_view, 14> kHeads{
    "C", "CC", "CCC", "CC(C)", "c1ccccc1", "c1ccncc1", "C1CCCCC1", "C1CCOCC1", "FC", "ClC", "N#CC", "OC", "CO", "O=C(N)"};
constexpr std::array<std::string_view, 15> kLinkers{"C",   "CC",         "O",           "N",   "S",   "C(=O)", "C(=O)N", "NC(=O)",
                                                    "C(=O)O", "OC(=O)", "c1ccc(cc1)", "C1CCN(CC1)", "C=C", "N(C)", "CC(O)"};
constexpr std::array<std::string_view, 16> kTails{"C",      "CC",     "O",   "N",         "F",         "Cl",        "C(=O)O", "C(=O)N",
                                                  "C#N",    "c1ccccc1", "c1ccccn1", "C1CCCC1", "OC",       "NC",        "S",      "SC"};

bool has_heteroatom(const MolGraph& g) {
  for (const auto& a : g.atoms())
    if (a.is_heavy() && a.element != 6) return true;
  return false;
}

}  // namespace

std::vector<std::string> generate_corpus(const CorpusOptions& options) {
  if (options.count < 0 || options.min_tokens < 1 || options.max_tokens < options.min_tokens)
    throw std::invalid_argument("generate_corpus: bad count or token range");
  Rng rng(options.seed);
  std::set<std::string> seen;
  std::vector<std::string> out;
  const long limit = static_cast<long>(options.count) * options.attempts_per_molecule;
  for (long attempt = 0; static_cast<int>(out.size()) < options.count; ++attempt) {
    if (attempt >= limit) throw std::runtime_error("generate_corpus: attempt limit reached before the requested count");
    std::string text(kHeads[rng.index(kHeads.size())]);
    const int links = static_cast<int>(rng.uniform_int(0, 4));
    for (int k = 0; k < links; ++k) text += kLinkers[rng.index(kLinkers.size())];
    text += kTails[rng.index(kTails.size())];
    MolGraph g;
    try {
      g = parse_smiles(text);
    } catch (const SmilesError&) {
      continue;
    }
    if (!is_valid(g) || !has_heteroatom(g)) continue;
    std::string canon = write_smiles(g);
    if (seen.count(canon)) continue;
    Rng frag_rng = rng.fork(attempt);
    const auto tokens = lex(to_notation(fragment(g, options.rules, frag_rng)));
    const int n = static_cast<int>(tokens.size());
    if (n < options.min_tokens || n > options.max_tokens) continue;
    seen.insert(canon);
    out.push_back(std::move(canon));
  }
  return out;
}

std::vector<std::string> fragment_corpus(std::span<const std::string> smiles, const FragRuleSet& rules, std::uint64_t seed) {
  const Rng root(seed);
  std::vector<std::string> out;
  out.reserve(smiles.size());
  for (std::size_t i = 0; i < smiles.size(); ++i) {
    Rng rng = root.fork(i);
    out.push_back(to_notation(fragment(parse_smiles(smiles[i]), rules, rng)));
  }
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r\n");
    out.push_back(line.substr(first, last - first + 1));
  }
  return out;
}

void write_lines(const std::string& path, std::span<const std::string> lines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace fragflow
