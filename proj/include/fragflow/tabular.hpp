#pragma once

#include <vector>

#include "fragflow/denoiser.hpp"
#include "fragflow/tokenizer.hpp"

namespace fragflow {

/// Exact posterior denoiser over a small dataset of equal-length sequences:
/// p(x1_i = v | x_t) = sum over y with y_i = v of w(y | x_t, t), where
/// w(y) is proportional to prod_i [t 1(x_t_i = y_i) + (1 - t) / (V - 1)]
/// under the uniform-source path. The dataset is weighted uniformly.
class TabularDenoiser : public Predictor {
 public:
  TabularDenoiser(std::vector<TokenSeq> dataset, int vocab);

  int vocab_size() const override { return vocab_; }
  Eigen::MatrixXd log_probs(std::span<const int> xt, double t) const override;

  /// Normalized posterior weights over dataset elements.
  std::vector<double> posterior(std::span<const int> xt, double t) const;
  const std::vector<TokenSeq>& dataset() const { return data_; }

 private:
  std::vector<TokenSeq> data_;
  int vocab_;
  int length_;
};

}  // namespace fragflow
