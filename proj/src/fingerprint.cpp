#include "fragflow/fingerprint.hpp"

#include <algorithm>
#include <bit>

namespace fragflow {

int Fingerprint::popcount() const {
  int total = 0;
  for (auto w : words) total += std::popcount(w);
  return total;
}

std::vector<int> Fingerprint::on_bits() const {
  std::vector<int> bits;
  for (int i = 0; i < nbits; ++i)
    if (test(i)) bits.push_back(i);
  return bits;
}

Fingerprint empty_fingerprint(int nbits) {
  if (nbits <= 0 || !std::has_single_bit(static_cast<unsigned>(nbits)))
    throw FingerprintError(FingerprintError::Kind::BadWidth, "fingerprint width must be a power of two");
  Fingerprint fp;
  fp.nbits = nbits;
  fp.words.assign((nbits + 63) / 64, 0);
  return fp;
}

std::uint64_t hash_mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
  return hash_mix(seed ^ (hash_mix(value) + 0x632be59bd9b4e019ULL + (seed << 6) + (seed >> 2)));
}

namespace {

std::uint64_t atom_invariant(const MolGraph& g, int i, const RingInfo& rings) {
  const Atom& a = g.atom(i);
  int heavy_degree = 0;
  for (const auto& nb : g.neighbors(i))
    if (g.atom(nb.atom).element != 1) ++heavy_degree;
  std::uint64_t h = hash_mix(static_cast<std::uint64_t>(a.element));
  h = hash_combine(h, static_cast<std::uint64_t>(heavy_degree));
  h = hash_combine(h, static_cast<std::uint64_t>(a.hydrogens));
  h = hash_combine(h, static_cast<std::uint64_t>(a.charge + 16));
  h = hash_combine(h, a.aromatic ? 1 : 0);
  h = hash_combine(h, rings.atom_in_ring[i] ? 1 : 0);
  h = hash_combine(h, static_cast<std::uint64_t>(a.attachment));
  return h;
}

}  // namespace

std::vector<std::vector<std::uint64_t>> morgan_environments(const MolGraph& g, int radius) {
  if (radius < 0) throw FingerprintError(FingerprintError::Kind::BadRadius, "radius must be >= 0");
  const int n = static_cast<int>(g.num_atoms());
  const RingInfo rings = ring_info(g);
  std::vector<std::vector<std::uint64_t>> layers;
  std::vector<std::uint64_t> current(n);
  for (int i = 0; i < n; ++i) current[i] = atom_invariant(g, i, rings);
  layers.push_back(current);
  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint64_t> next(n);
    for (int i = 0; i < n; ++i) {
      std::vector<std::pair<int, std::uint64_t>> around;
      for (const auto& nb : g.neighbors(i))
        around.emplace_back(static_cast<int>(g.bond(nb.bond).order), current[nb.atom]);
      std::sort(around.begin(), around.end());
      std::uint64_t h = hash_combine(current[i], static_cast<std::uint64_t>(r));
      for (const auto& [order, id] : around) h = hash_combine(hash_combine(h, static_cast<std::uint64_t>(order)), id);
      next[i] = h;
    }
    current = std::move(next);
    layers.push_back(current);
  }
  return layers;
}

Fingerprint morgan_fingerprint(const MolGraph& g, int radius, int nbits) {
  Fingerprint fp = empty_fingerprint(nbits);
  fp.radius = radius;
  const auto layers = morgan_environments(g, radius);
  for (const auto& layer : layers)
    for (int i = 0; i < static_cast<int>(layer.size()); ++i) {
      if (g.atom(i).element == 1) continue;
      fp.set(static_cast<int>(layer[i] & static_cast<std::uint64_t>(nbits - 1)));
    }
  return fp;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.nbits != b.nbits || a.words.size() != b.words.size())
    throw FingerprintError(FingerprintError::Kind::WidthMismatch, "fingerprint widths differ");
  int both = 0;
  int either = 0;
  for (std::size_t i = 0; i < a.words.size(); ++i) {
    both += std::popcount(a.words[i] & b.words[i]);
    either += std::popcount(a.words[i] | b.words[i]);
  }
  if (either == 0) return 1.0;
  return static_cast<double>(both) / static_cast<double>(either);
}

}  // namespace fragflow
