#include <algorithm>
#include <map>

#include "fragflow/optimizer.hpp"
#include "fragflow/smiles.hpp"

namespace fragflow {

bool Population::contains(const std::string& smiles) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const PopEntry& e) { return e.smiles == smiles; });
}

void Population::update(std::span<const Scored> candidates) {
  std::map<std::string, PopEntry> pool;
  for (const auto& e : entries_) pool.emplace(e.smiles, e);
  for (const auto& c : candidates) {
    auto it = pool.find(c.smiles);
    if (it != pool.end()) {
      it->second.score = std::max(it->second.score, c.score);
      continue;
    }
    try {
      pool.emplace(c.smiles, PopEntry{c.smiles, c.score, morgan_fingerprint(parse_smiles(c.smiles))});
    } catch (const SmilesError&) {
    }
  }
  std::vector<PopEntry> ordered;
  ordered.reserve(pool.size());
  for (auto& [smiles, e] : pool) ordered.push_back(std::move(e));
  std::stable_sort(ordered.begin(), ordered.end(), [](const PopEntry& a, const PopEntry& b) { return a.score > b.score; });

  std::vector<PopEntry> kept;
  for (auto& e : ordered) {
    if (static_cast<int>(kept.size()) >= max_size_) break;
    const bool far = std::all_of(kept.begin(), kept.end(),
                                 [&](const PopEntry& k) { return 1.0 - tanimoto(k.fp, e.fp) >= min_distance_; });
    if (far) kept.push_back(std::move(e));
  }
  entries_ = std::move(kept);
}

double Population::min_pairwise_distance() const {
  double best = 1.0;
  for (std::size_t i = 0; i < entries_.size(); ++i)
    for (std::size_t j = i + 1; j < entries_.size(); ++j)
      best = std::min(best, 1.0 - tanimoto(entries_[i].fp, entries_[j].fp));
  return best;
}

std::vector<double> rank_probabilities(std::size_t size, double kappa) {
  std::vector<double> p(size);
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    p[i] = 1.0 / (static_cast<double>(i + 1) + kappa * static_cast<double>(size));
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

std::pair<int, int> rank_sample_parents(const Population& pop, double kappa, Rng& rng) {
  if (pop.size() < 2) throw OptimizerError(OptimizerError::Kind::PopulationTooSmall, "rank sampling needs two entries");
  if (!(kappa > 0.0)) throw OptimizerError(OptimizerError::Kind::BadConfig, "kappa must be positive");
  auto w = rank_probabilities(pop.size(), kappa);
  const int first = static_cast<int>(rng.categorical(w));
  w[first] = 0.0;
  const int second = static_cast<int>(rng.categorical(w));
  return {first, second};
}

}  // namespace fragflow
