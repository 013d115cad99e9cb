#include "fragflow/training.hpp"

#include <cmath>
#include <numeric>

namespace fragflow {

TokenSeq noise_interpolate(const TokenSeq& x0, const TokenSeq& x1, double t, Rng& rng) {
  if (x0.length != x1.length || x0.capacity() != x1.capacity())
    throw DenoiserError(DenoiserErrorKind::LengthMismatch, "noise_interpolate: sequences differ in length");
  TokenSeq xt = x1;
  for (int i = 0; i < x1.length; ++i)
    if (!rng.bernoulli(t)) xt.ids[i] = x0.ids[i];
  return xt;
}

TokenSeq uniform_source(int length, int vocab, int capacity, Rng& rng) {
  if (vocab < 2) throw DenoiserError(DenoiserErrorKind::BadConfig, "uniform_source: vocabulary has no non-PAD token");
  std::vector<int> ids(length);
  for (auto& id : ids) id = static_cast<int>(rng.uniform_int(1, vocab - 1));
  return make_seq(ids, capacity);
}

double loss_weight(double t) { return 1.0 / (1.0 - t * t); }

TrainExample make_example(const TokenSeq& x1, int vocab, double t_max, Rng& rng) {
  TrainExample ex;
  ex.x1 = x1;
  ex.t = rng.uniform(0.0, t_max);
  const TokenSeq x0 = uniform_source(x1.length, vocab, x1.capacity(), rng);
  ex.xt = noise_interpolate(x0, x1, ex.t, rng);
  return ex;
}

double example_loss(const Predictor& model, const TrainExample& ex) {
  const Eigen::MatrixXd lp = model.log_probs(ex.xt.active(), ex.t);
  double nll = 0.0;
  for (int i = 0; i < ex.x1.length; ++i) nll -= lp(i, ex.x1.ids[i]);
  return loss_weight(ex.t) * nll;
}

double batch_loss(const Predictor& model, std::span<const TrainExample> batch) {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : batch) total += example_loss(model, ex);
  return total / static_cast<double>(batch.size());
}

double loss_and_grad(const DenoiserParams<double>& params, std::span<const TrainExample> batch, DenoiserParams<double>& grad) {
  grad = params.zeros_like();
  if (batch.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  ForwardCache<double> cache;
  for (const auto& ex : batch) {
    const Eigen::MatrixXd logits = forward(params, ex.xt.active(), ex.t, &cache);
    const Eigen::MatrixXd lp = log_softmax_rows<double>(logits);
    const double w = loss_weight(ex.t);
    // d(-w sum log softmax)/dlogits = w (softmax - onehot)
    Eigen::MatrixXd dlogits = lp.array().exp();
    for (int i = 0; i < ex.x1.length; ++i) {
      total -= w * lp(i, ex.x1.ids[i]);
      dlogits(i, ex.x1.ids[i]) -= 1.0;
    }
    dlogits *= w * scale;
    backward(params, cache, dlogits, grad);
  }
  return total * scale;
}

double evaluation_loss(const DenoiserParams<double>& params, std::span<const TokenSeq> seqs, double t_max, std::uint64_t seed,
                       int copies) {
  if (seqs.empty()) return 0.0;
  Rng rng(seed);
  std::vector<TrainExample> batch;
  for (const auto& s : seqs)
    for (int c = 0; c < copies; ++c) batch.push_back(make_example(s, params.vocab, t_max, rng));
  return batch_loss(NeuralDenoiser(params), batch);
}

TrainReport train(DenoiserParams<double>& params, std::span<const TokenSeq> corpus, const TrainConfig& config, Rng& rng) {
  if (corpus.empty()) throw DenoiserError(DenoiserErrorKind::BadConfig, "train: empty corpus");
  if (config.batch_size < 1 || config.epochs < 0 || config.samples_per_sequence < 1)
    throw DenoiserError(DenoiserErrorKind::BadConfig, "train: bad batch size, epoch or sample count");
  const std::size_t held = static_cast<std::size_t>(std::floor(config.holdout_fraction * static_cast<double>(corpus.size())));
  const auto train_set = corpus.first(corpus.size() - held);
  const auto holdout = corpus.last(held);
  if (train_set.empty()) throw DenoiserError(DenoiserErrorKind::BadConfig, "train: holdout leaves no training data");
  const std::uint64_t eval_seed = rng.fork(0xe7a1).seed();

  TrainReport report;
  if (!holdout.empty()) report.initial_holdout_loss = evaluation_loss(params, holdout, config.t_max, eval_seed);

  typename AdamW<double>::Config adam;
  adam.lr = config.lr;
  adam.beta1 = config.beta1;
  adam.beta2 = config.beta2;
  adam.weight_decay = config.weight_decay;
  AdamW<double> opt(params, adam);
  DenoiserParams<double> grad = params.zeros_like();

  std::vector<std::size_t> order(train_set.size() * config.samples_per_sequence);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i % train_set.size();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<TrainExample> batch;
      for (std::size_t k = start; k < end; ++k) batch.push_back(make_example(train_set[order[k]], params.vocab, config.t_max, rng));
      const double loss = loss_and_grad(params, batch, grad);
      if (!std::isfinite(loss) || !grad.all_finite())
        throw DenoiserError(DenoiserErrorKind::DivergenceDetected,
                            "training diverged at step " + std::to_string(report.steps), report.steps);
      opt.step(params, grad);
      report.batch_losses.push_back(loss);
      ++report.steps;
    }
  }
  if (!holdout.empty()) report.final_holdout_loss = evaluation_loss(params, holdout, config.t_max, eval_seed);
  return report;
}

}  // namespace fragflow
