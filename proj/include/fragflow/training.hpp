#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fragflow/denoiser.hpp"
#include "fragflow/rng.hpp"
#include "fragflow/tokenizer.hpp"

namespace fragflow {

enum class DenoiserErrorKind { LengthMismatch, DivergenceDetected, BadConfig };

class DenoiserError : public std::runtime_error {
 public:
  DenoiserError(DenoiserErrorKind kind, const std::string& detail, long step = -1)
      : std::runtime_error(detail), kind_(kind), step_(step) {}
  DenoiserErrorKind kind() const { return kind_; }
  /// Optimizer step at which training diverged, -1 otherwise.
  long step() const { return step_; }

 private:
  DenoiserErrorKind kind_;
  long step_;
};

/// Per position: x1 with probability t, else x0.
TokenSeq noise_interpolate(const TokenSeq& x0, const TokenSeq& x1, double t, Rng& rng);

/// `length` tokens drawn uniformly from 1..vocab-1, PAD-padded to capacity.
TokenSeq uniform_source(int length, int vocab, int capacity, Rng& rng);

/// Time weight 1 / (1 - t^2).
double loss_weight(double t);

struct TrainExample {
  TokenSeq x1;
  TokenSeq xt;
  double t = 0.0;
};

/// Draws t ~ U(0, t_max), a uniform source and the interpolated state.
TrainExample make_example(const TokenSeq& x1, int vocab, double t_max, Rng& rng);

/// -w(t) * sum over active positions of log p(x1_i | x_t, t).
double example_loss(const Predictor& model, const TrainExample& ex);

/// Mean of example_loss over the batch; 0 for an empty batch.
double batch_loss(const Predictor& model, std::span<const TrainExample> batch);

/// batch_loss for the transformer plus its exact gradient, written to `grad`
/// (which is reset to zero first).
double loss_and_grad(const DenoiserParams<double>& params, std::span<const TrainExample> batch, DenoiserParams<double>& grad);

/// Adam with decoupled weight decay.
template <class Scalar>
class AdamW {
 public:
  struct Config {
    double lr = 1e-4;
    double beta1 = 0.99;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
  };

  AdamW(const DenoiserParams<Scalar>& like, Config config)
      : config_(config), m_(like.zeros_like()), v_(like.zeros_like()) {}

  /// One descent step along `grad`.
  void step(DenoiserParams<Scalar>& params, const DenoiserParams<Scalar>& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    auto p = params.arrays();
    auto g = grad.arrays();
    auto m = m_.arrays();
    auto v = v_.arrays();
    const Scalar b1 = static_cast<Scalar>(config_.beta1), b2 = static_cast<Scalar>(config_.beta2);
    for (std::size_t i = 0; i < p.size(); ++i) {
      *m[i] = b1 * *m[i] + (Scalar(1) - b1) * *g[i];
      v[i]->array() = b2 * v[i]->array() + (Scalar(1) - b2) * g[i]->array().square();
      if (config_.weight_decay != 0.0) *p[i] *= static_cast<Scalar>(1.0 - config_.lr * config_.weight_decay);
      p[i]->array() -= static_cast<Scalar>(config_.lr) * (m[i]->array() / static_cast<Scalar>(c1)) /
                       ((v[i]->array() / static_cast<Scalar>(c2)).sqrt() + static_cast<Scalar>(config_.eps));
    }
  }

  long steps() const { return t_; }

 private:
  Config config_;
  DenoiserParams<Scalar> m_, v_;
  long t_ = 0;
};

struct TrainConfig {
  int epochs = 1;
  int batch_size = 16;
  /// Noisy copies drawn per corpus sequence per epoch.
  int samples_per_sequence = 1;
  double lr = 1e-4;
  double weight_decay = 0.01;
  double beta1 = 0.99;
  double beta2 = 0.999;
  double t_max = 0.999;
  /// Trailing fraction of the corpus held out for evaluation.
  double holdout_fraction = 0.0;
};

struct TrainReport {
  std::vector<double> batch_losses;
  double initial_holdout_loss = 0.0;
  double final_holdout_loss = 0.0;
  long steps = 0;
};

/// Mean loss over fixed noisy copies of `seqs` drawn from `seed`.
double evaluation_loss(const DenoiserParams<double>& params, std::span<const TokenSeq> seqs, double t_max, std::uint64_t seed,
                       int copies = 4);

/// Minibatch AdamW on the time-weighted loss. Throws DenoiserError
/// (DivergenceDetected) with the step index when the loss turns non-finite.
TrainReport train(DenoiserParams<double>& params, std::span<const TokenSeq> corpus, const TrainConfig& config, Rng& rng);

}  // namespace fragflow
