#include "fragflow/tabular.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fragflow {

TabularDenoiser::TabularDenoiser(std::vector<TokenSeq> dataset, int vocab) : data_(std::move(dataset)), vocab_(vocab) {
  if (data_.empty()) throw std::invalid_argument("TabularDenoiser: empty dataset");
  if (vocab_ < 2) throw std::invalid_argument("TabularDenoiser: vocabulary too small");
  length_ = data_[0].length;
  for (const auto& y : data_) {
    if (y.length != length_) throw std::invalid_argument("TabularDenoiser: sequences must share one length");
    for (int id : y.active())
      if (id <= kPadId || id >= vocab_) throw std::invalid_argument("TabularDenoiser: token outside 1..V-1");
  }
}

std::vector<double> TabularDenoiser::posterior(std::span<const int> xt, double t) const {
  if (static_cast<int>(xt.size()) != length_) throw std::invalid_argument("TabularDenoiser: length mismatch");
  // Per-position likelihood of x_t given x1 = y: a source draw hits any given
  // non-PAD token with probability 1/(V-1).
  const double off = (1.0 - t) / static_cast<double>(vocab_ - 1);
  const double on = t + off;
  std::vector<double> logw(data_.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < data_.size(); ++k) {
    double lw = 0.0;
    for (int i = 0; i < length_; ++i) {
      const double lik = data_[k].ids[i] == xt[i] ? on : off;
      lw += lik > 0.0 ? std::log(lik) : -std::numeric_limits<double>::infinity();
    }
    logw[k] = lw;
    best = std::max(best, lw);
  }
  std::vector<double> w(data_.size());
  double total = 0.0;
  for (std::size_t k = 0; k < data_.size(); ++k) total += (w[k] = std::isfinite(logw[k]) ? std::exp(logw[k] - best) : 0.0);
  if (!(total > 0.0)) {
    // x_t matches no element exactly at t = 1; fall back to the prior.
    for (auto& x : w) x = 1.0 / static_cast<double>(w.size());
    return w;
  }
  for (auto& x : w) x /= total;
  return w;
}

Eigen::MatrixXd TabularDenoiser::log_probs(std::span<const int> xt, double t) const {
  const auto w = posterior(xt, t);
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(length_, vocab_);
  for (std::size_t k = 0; k < data_.size(); ++k)
    for (int i = 0; i < length_; ++i) probs(i, data_[k].ids[i]) += w[k];
  return probs.array().log().matrix();
}

}  // namespace fragflow
