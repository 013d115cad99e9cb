#include <algorithm>
#include <cmath>
#include <numeric>

#include "fragflow/optimizer.hpp"

namespace fragflow {

Bandit::Bandit(std::vector<int> lengths, std::vector<double> prior, BanditConfig config) : config_(config) {
  if (lengths.empty()) throw OptimizerError(OptimizerError::Kind::BadConfig, "bandit needs at least one arm");
  if (!prior.empty() && prior.size() != lengths.size())
    throw OptimizerError(OptimizerError::Kind::BadConfig, "bandit prior size differs from arm count");
  if (!(config.tau > 0.0) || config.floor < 0.0 || config.floor > 1.0 || !(config.sigma > 0.0))
    throw OptimizerError(OptimizerError::Kind::BadConfig, "bandit tau, sigma or floor out of range");
  if (prior.empty()) prior.assign(lengths.size(), 1.0);
  const double total = std::accumulate(prior.begin(), prior.end(), 0.0);
  if (!(total > 0.0) || std::any_of(prior.begin(), prior.end(), [](double p) { return p < 0.0; }))
    throw OptimizerError(OptimizerError::Kind::BadConfig, "bandit prior must be nonnegative with positive mass");
  for (double& p : prior) p /= total;
  prior_ = std::move(prior);
  for (int L : lengths) arms_.push_back({L, 0, 0.0, 0.0});
}

Bandit Bandit::from_length_dist(const LengthDist& dist, BanditConfig config) {
  std::vector<int> lengths;
  std::vector<double> prior;
  for (int n = 1; n <= dist.max_length(); ++n)
    if (dist.probs[n] > 0.0) {
      lengths.push_back(n);
      prior.push_back(dist.probs[n]);
    }
  return Bandit(std::move(lengths), std::move(prior), config);
}

std::vector<double> Bandit::scores() const {
  long total = 0;
  for (const auto& a : arms_) total += a.visits;
  std::vector<double> s(arms_.size(), 0.0);
  for (std::size_t k = 0; k < arms_.size(); ++k) {
    const auto& a = arms_[k];
    if (a.visits == 0) continue;
    const double ucb = config_.c * std::sqrt(std::log(static_cast<double>(total)) / static_cast<double>(a.visits));
    double neighborhood = 0.0;
    if (best_length_) {
      const double d = static_cast<double>(a.length - *best_length_);
      neighborhood = std::exp(-d * d / (2.0 * config_.sigma * config_.sigma));
    }
    s[k] = config_.w_best * a.best + config_.w_quant * a.quantile + ucb + neighborhood;
  }
  return s;
}

std::vector<double> Bandit::probabilities() const {
  const std::size_t K = arms_.size();
  const auto s = scores();
  // Unvisited arms keep their prior mass; visited arms share the rest by
  // softmax of their scores.
  double unvisited_mass = 0.0;
  double smax = -INFINITY;
  for (std::size_t k = 0; k < K; ++k) {
    if (arms_[k].visits == 0)
      unvisited_mass += prior_[k];
    else
      smax = std::max(smax, s[k]);
  }
  std::vector<double> p(K, 0.0);
  double z = 0.0;
  for (std::size_t k = 0; k < K; ++k)
    if (arms_[k].visits > 0) z += std::exp((s[k] - smax) / config_.tau);
  for (std::size_t k = 0; k < K; ++k) {
    if (arms_[k].visits == 0)
      p[k] = prior_[k];
    else
      p[k] = (1.0 - unvisited_mass) * std::exp((s[k] - smax) / config_.tau) / z;
  }
  const double eps = config_.floor;
  for (double& x : p) x = (1.0 - eps) * x + eps / static_cast<double>(K);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= total;
  return p;
}

int Bandit::sample(Rng& rng) const { return arms_[rng.categorical(probabilities())].length; }

int Bandit::modal_length() const {
  const auto p = probabilities();
  return arms_[std::max_element(p.begin(), p.end()) - p.begin()].length;
}

void Bandit::update(int length, double reward) {
  auto it = std::find_if(arms_.begin(), arms_.end(), [&](const BanditArm& a) { return a.length == length; });
  if (it == arms_.end()) throw OptimizerError(OptimizerError::Kind::UnknownArm, "no bandit arm for length " + std::to_string(length));
  it->best = it->visits == 0 ? reward : std::max(it->best, reward);
  ++it->visits;
  // pinball-loss subgradient step toward the q-quantile
  it->quantile += config_.eta_q * (config_.q - (reward < it->quantile ? 1.0 : 0.0));
  it->quantile = std::clamp(it->quantile, 0.0, 1.0);
  if (!best_length_ || reward > best_reward_) {
    best_length_ = length;
    best_reward_ = reward;
  }
}

}  // namespace fragflow
