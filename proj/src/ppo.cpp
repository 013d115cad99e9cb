#include <algorithm>
#include <cmath>

#include "fragflow/optimizer.hpp"

namespace fragflow {

void validate(const PPOConfig& cfg) {
  if (!(cfg.clip > 0.0 && cfg.clip < 1.0)) throw OptimizerError(OptimizerError::Kind::BadConfig, "ppo clip must lie in (0,1)");
  if (cfg.epochs < 1) throw OptimizerError(OptimizerError::Kind::BadConfig, "ppo epochs must be >= 1");
  if (cfg.timesteps < 1) throw OptimizerError(OptimizerError::Kind::BadConfig, "ppo timesteps must be >= 1");
  if (cfg.cadence < 1) throw OptimizerError(OptimizerError::Kind::BadConfig, "ppo cadence must be >= 1");
  if (!(cfg.lr > 0.0) || cfg.adv_eps < 0.0 || cfg.c_neg < 0.0 || cfg.beta < 0.0)
    throw OptimizerError(OptimizerError::Kind::BadConfig, "ppo lr, eps, c_neg or beta out of range");
}

std::vector<TrainExample> perturbations(const TokenSeq& x1, int vocab, int timesteps, double t_max, Rng& rng) {
  std::vector<TrainExample> out;
  out.reserve(timesteps);
  for (int k = 0; k < timesteps; ++k) {
    const double t = std::min(rng.uniform(), t_max);
    const TokenSeq x0 = uniform_source(x1.length, vocab, x1.capacity(), rng);
    out.push_back({x1, noise_interpolate(x0, x1, t, rng), t});
  }
  return out;
}

double ppo_logprob(const Predictor& model, std::span<const TrainExample> states) {
  if (states.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : states) {
    bool any = false;
    for (int i = 0; i < s.x1.length; ++i) any |= s.xt.ids[i] != s.x1.ids[i];
    if (!any) continue;
    const Eigen::MatrixXd lp = model.log_probs(s.xt.active(), s.t);
    double sum = 0.0;
    for (int i = 0; i < s.x1.length; ++i)
      if (s.xt.ids[i] != s.x1.ids[i]) sum += lp(i, s.x1.ids[i]);
    total += loss_weight(s.t) * sum;
  }
  return total / static_cast<double>(states.size());
}

double ppo_logprob(const Predictor& model, const TokenSeq& x1, int timesteps, Rng& rng, double t_max) {
  const auto states = perturbations(x1, model.vocab_size(), timesteps, t_max, rng);
  return ppo_logprob(model, states);
}

double ppo_logprob_grad(const DenoiserParams<double>& params, std::span<const TrainExample> states, double scale,
                        DenoiserParams<double>& grad) {
  if (states.empty()) return 0.0;
  const double inv = 1.0 / static_cast<double>(states.size());
  double total = 0.0;
  ForwardCache<double> cache;
  for (const auto& s : states) {
    bool any = false;
    for (int i = 0; i < s.x1.length; ++i) any |= s.xt.ids[i] != s.x1.ids[i];
    if (!any) continue;
    const Eigen::MatrixXd lp = log_softmax_rows<double>(forward(params, s.xt.active(), s.t, &cache));
    const double w = loss_weight(s.t);
    // d log softmax_y / d logits = onehot_y - softmax, on noised rows only
    Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(lp.rows(), lp.cols());
    double sum = 0.0;
    for (int i = 0; i < s.x1.length; ++i) {
      if (s.xt.ids[i] == s.x1.ids[i]) continue;
      sum += lp(i, s.x1.ids[i]);
      dlogits.row(i) = -lp.row(i).array().exp();
      dlogits(i, s.x1.ids[i]) += 1.0;
    }
    total += w * sum;
    if (scale != 0.0) {
      dlogits *= w * inv * scale;
      backward(params, cache, dlogits, grad);
    }
  }
  return total * inv;
}

std::vector<double> normalize_advantages(std::span<const double> rewards, double eps) {
  std::vector<double> a(rewards.size(), 0.0);
  if (rewards.empty()) return a;
  const auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
  if (*lo == *hi) return a;
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(rewards.size());
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / static_cast<double>(rewards.size()));
  for (std::size_t i = 0; i < rewards.size(); ++i) a[i] = (rewards[i] - mean) / (sd + eps);
  return a;
}

PPOBatch make_ppo_batch(const DenoiserParams<double>& old_params, std::span<const PPOSample> samples, const PPOConfig& cfg,
                        Rng& rng) {
  PPOBatch batch;
  std::vector<double> rewards;
  const NeuralDenoiser old(old_params);
  for (const auto& s : samples) {
    batch.states.push_back(perturbations(s.x1, old_params.vocab, cfg.timesteps, cfg.t_max, rng));
    batch.old_logprobs.push_back(ppo_logprob(old, batch.states.back()));
    rewards.push_back(s.reward);
  }
  batch.advantages = normalize_advantages(rewards, cfg.adv_eps);
  for (double& a : batch.advantages)
    if (a < 0.0) a *= cfg.c_neg;
  return batch;
}

double ppo_objective(const DenoiserParams<double>& params, const PPOBatch& batch, const PPOConfig& cfg,
                     DenoiserParams<double>* grad) {
  if (grad) *grad = params.zeros_like();
  const std::size_t n = batch.states.size();
  if (n == 0) return 0.0;
  const NeuralDenoiser model(params);
  double objective = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double A = batch.advantages[i];
    if (A == 0.0 && cfg.beta == 0.0) continue;  // contributes nothing, not even a gradient
    const double logp = ppo_logprob(model, batch.states[i]);
    const double diff = logp - batch.old_logprobs[i];
    const double ratio = std::exp(diff);
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
    const double surrogate = std::min(ratio * A, clipped * A);
    // k3 estimator of KL(pi_theta || pi_old) with r = pi_old / pi_theta
    const double kl = std::exp(-diff) - 1.0 + diff;
    objective += surrogate - cfg.beta * kl;
    if (grad) {
      const bool active = ratio * A <= clipped * A;
      double coeff = active ? ratio * A : 0.0;
      coeff -= cfg.beta * (1.0 - std::exp(-diff));
      if (coeff != 0.0) ppo_logprob_grad(params, batch.states[i], coeff / static_cast<double>(n), *grad);
    }
  }
  return objective / static_cast<double>(n);
}

PPOReport ppo_update(DenoiserParams<double>& params, const DenoiserParams<double>& old_params,
                     std::span<const PPOSample> samples, const PPOConfig& cfg, Rng& rng) {
  validate(cfg);
  PPOReport report;
  const PPOBatch batch = make_ppo_batch(old_params, samples, cfg, rng);
  AdamW<double> opt(params, {cfg.lr, 0.99, 0.999, 1e-8, 0.0});
  DenoiserParams<double> grad = params.zeros_like();
  for (int k = 0; k < cfg.epochs; ++k) {
    const double obj = ppo_objective(params, batch, cfg, &grad);
    if (!std::isfinite(obj) || !grad.all_finite())
      throw DenoiserError(DenoiserErrorKind::DivergenceDetected, "ppo update diverged at step " + std::to_string(k), k);
    if (k == 0) report.initial_objective = obj;
    // ascent on the objective = descent on its negation
    for (auto* m : grad.arrays()) *m = -*m;
    opt.step(params, grad);
    ++report.steps;
  }
  report.final_objective = ppo_objective(params, batch, cfg);
  return report;
}

}  // namespace fragflow
