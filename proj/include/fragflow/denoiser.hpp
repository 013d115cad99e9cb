#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fragflow/rng.hpp"

namespace fragflow {

/// Anything that predicts p(x1 | x_t, t) per active position.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual int vocab_size() const = 0;
  /// n x V matrix of log-probabilities (rows sum to 1 after exp; entries may
  /// be -inf for impossible tokens).
  virtual Eigen::MatrixXd log_probs(std::span<const int> xt, double t) const = 0;
};

/// All trainable arrays of the transformer denoiser. Vectors are stored as
/// one-column matrices so that every array has the same type.
template <class Scalar>
struct DenoiserParams {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  struct Block {
    Matrix ln1_scale, ln1_offset;  // d x 1
    Matrix wq, wk, wv, wo;         // d x d
    Matrix ln2_scale, ln2_offset;  // d x 1
    Matrix ff1, ff1_bias;          // d x 4d, 4d x 1
    Matrix ff2, ff2_bias;          // 4d x d, d x 1
  };

  int vocab = 0;
  int dim = 0;
  bool positional = true;  // fixed sinusoidal position signal, not trained

  Matrix token_embedding;  // V x d
  Matrix time_weight;      // d x d, applied to the sinusoidal time feature
  Matrix time_bias;        // d x 1
  std::vector<Block> blocks;
  Matrix final_scale, final_offset;  // d x 1
  Matrix output_weight;              // d x V
  Matrix output_bias;                // V x 1

  int num_blocks() const { return static_cast<int>(blocks.size()); }

  /// Arrays in declaration order; this order defines flattening and the
  /// on-disk layout.
  std::vector<Matrix*> arrays() {
    std::vector<Matrix*> out{&token_embedding, &time_weight, &time_bias};
    for (auto& b : blocks)
      for (Matrix* m : {&b.ln1_scale, &b.ln1_offset, &b.wq, &b.wk, &b.wv, &b.wo, &b.ln2_scale, &b.ln2_offset, &b.ff1,
                        &b.ff1_bias, &b.ff2, &b.ff2_bias})
        out.push_back(m);
    for (Matrix* m : {&final_scale, &final_offset, &output_weight, &output_bias}) out.push_back(m);
    return out;
  }
  std::vector<const Matrix*> arrays() const {
    auto mut = const_cast<DenoiserParams*>(this)->arrays();
    return {mut.begin(), mut.end()};
  }

  Eigen::Index num_params() const {
    Eigen::Index total = 0;
    for (const Matrix* m : arrays()) total += m->size();
    return total;
  }

  DenoiserParams zeros_like() const {
    DenoiserParams z = *this;
    for (Matrix* m : z.arrays()) m->setZero();
    return z;
  }

  bool all_finite() const {
    for (const Matrix* m : arrays())
      if (!m->allFinite()) return false;
    return true;
  }

  template <class Other>
  DenoiserParams<Other> cast() const {
    DenoiserParams<Other> out;
    out.vocab = vocab;
    out.dim = dim;
    out.positional = positional;
    out.blocks.resize(blocks.size());
    auto src = arrays();
    auto dst = out.arrays();
    for (std::size_t i = 0; i < src.size(); ++i) *dst[i] = src[i]->template cast<Other>();
    return out;
  }

  friend bool operator==(const DenoiserParams& a, const DenoiserParams& b) {
    if (a.vocab != b.vocab || a.dim != b.dim || a.blocks.size() != b.blocks.size() || a.positional != b.positional)
      return false;
    auto x = a.arrays();
    auto y = b.arrays();
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i]->rows() != y[i]->rows() || x[i]->cols() != y[i]->cols() || *x[i] != *y[i]) return false;
    return true;
  }
};

template <class Scalar>
DenoiserParams<Scalar> init_params(int vocab, int dim, int num_blocks, Rng& rng, bool positional = true) {
  using Matrix = typename DenoiserParams<Scalar>::Matrix;
  if (vocab < 2 || dim < 1 || num_blocks < 0) throw std::invalid_argument("init_params: bad shape");
  auto gaussian = [&](int rows, int cols, double scale) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<Scalar>(scale * rng.normal());
    return m;
  };
  const double fan = 1.0 / std::sqrt(static_cast<double>(dim));
  DenoiserParams<Scalar> p;
  p.vocab = vocab;
  p.dim = dim;
  p.positional = positional;
  p.token_embedding = gaussian(vocab, dim, 1.0);
  p.time_weight = gaussian(dim, dim, fan);
  p.time_bias = Matrix::Zero(dim, 1);
  for (int b = 0; b < num_blocks; ++b) {
    typename DenoiserParams<Scalar>::Block blk;
    blk.ln1_scale = Matrix::Ones(dim, 1);
    blk.ln1_offset = Matrix::Zero(dim, 1);
    blk.wq = gaussian(dim, dim, fan);
    blk.wk = gaussian(dim, dim, fan);
    blk.wv = gaussian(dim, dim, fan);
    blk.wo = gaussian(dim, dim, fan);
    blk.ln2_scale = Matrix::Ones(dim, 1);
    blk.ln2_offset = Matrix::Zero(dim, 1);
    blk.ff1 = gaussian(dim, 4 * dim, fan);
    blk.ff1_bias = Matrix::Zero(4 * dim, 1);
    blk.ff2 = gaussian(4 * dim, dim, 0.5 / std::sqrt(static_cast<double>(dim)));
    blk.ff2_bias = Matrix::Zero(dim, 1);
    p.blocks.push_back(std::move(blk));
  }
  p.final_scale = Matrix::Ones(dim, 1);
  p.final_offset = Matrix::Zero(dim, 1);
  p.output_weight = gaussian(dim, vocab, fan);
  p.output_bias = Matrix::Zero(vocab, 1);
  return p;
}

namespace detail {

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kTimeScale = 100.0;

/// Sinusoidal features of a scalar: even slots sin(x w_k), odd slots cos.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sinusoid(double x, int dim) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> f(dim);
  const int half = std::max(1, dim / 2);
  for (int k = 0; k < dim; ++k) {
    const double w = std::exp(-std::log(10000.0) * static_cast<double>(k / 2) / half);
    f(k) = static_cast<Scalar>(k % 2 == 0 ? std::sin(x * w) : std::cos(x * w));
  }
  return f;
}

template <class Scalar>
struct NormCache {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> xhat;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rstd;
};

template <class Scalar, class M>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> layer_norm(const Eigen::MatrixBase<M>& x, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& scale,
                                                         const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& offset, NormCache<Scalar>& cache) {
  const Eigen::Index d = x.cols();
  cache.xhat.resize(x.rows(), d);
  cache.rstd.resize(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Scalar mean = x.row(i).mean();
    const Scalar var = (x.row(i).array() - mean).square().mean();
    const Scalar r = Scalar(1) / std::sqrt(var + Scalar(kLayerNormEps));
    cache.rstd(i) = r;
    cache.xhat.row(i) = (x.row(i).array() - mean) * r;
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> y = cache.xhat * scale.col(0).asDiagonal();
  y.rowwise() += offset.col(0).transpose();
  return y;
}

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> layer_norm_backward(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& dy,
                                                                  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& scale,
                                                                  const NormCache<Scalar>& cache,
                                                                  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& dscale,
                                                                  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& doffset) {
  dscale.col(0) += (dy.array() * cache.xhat.array()).colwise().sum().transpose().matrix();
  doffset.col(0) += dy.colwise().sum().transpose();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dxhat = dy * scale.col(0).asDiagonal();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const Scalar m1 = dxhat.row(i).mean();
    const Scalar m2 = (dxhat.row(i).array() * cache.xhat.row(i).array()).mean();
    dx.row(i) = cache.rstd(i) * (dxhat.row(i).array() - m1 - cache.xhat.row(i).array() * m2);
  }
  return dx;
}

template <class Scalar>
Scalar gelu(Scalar u) {
  const Scalar k = Scalar(0.7978845608028654);
  return Scalar(0.5) * u * (Scalar(1) + std::tanh(k * (u + Scalar(0.044715) * u * u * u)));
}

template <class Scalar>
Scalar gelu_grad(Scalar u) {
  const Scalar k = Scalar(0.7978845608028654);
  const Scalar th = std::tanh(k * (u + Scalar(0.044715) * u * u * u));
  return Scalar(0.5) * (Scalar(1) + th) + Scalar(0.5) * u * (Scalar(1) - th * th) * k * (Scalar(1) + Scalar(3 * 0.044715) * u * u);
}

template <class Scalar>
void softmax_rows(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& s) {
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const Scalar m = s.row(i).maxCoeff();
    s.row(i) = (s.row(i).array() - m).exp();
    s.row(i) /= s.row(i).sum();
  }
}

}  // namespace detail

/// Intermediate values kept for the backward pass.
template <class Scalar>
struct ForwardCache {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  struct Block {
    detail::NormCache<Scalar> ln1, ln2;
    Matrix a, q, k, v, p, c, bn, u, g;
  };
  std::vector<int> ids;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> time_feature;
  std::vector<Block> blocks;
  detail::NormCache<Scalar> final_norm;
  Matrix z;
};

/// Logits (n x V) for the active tokens `ids` at time t. Only the active
/// prefix is processed, so PAD positions never enter attention.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> forward(const DenoiserParams<Scalar>& p, std::span<const int> ids, double t,
                                                      ForwardCache<Scalar>* cache = nullptr) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const int n = static_cast<int>(ids.size());
  const int d = p.dim;
  ForwardCache<Scalar> local;
  ForwardCache<Scalar>& c = cache ? *cache : local;
  c.ids.assign(ids.begin(), ids.end());
  c.blocks.resize(p.blocks.size());

  Matrix h(n, d);
  for (int i = 0; i < n; ++i) {
    if (ids[i] < 0 || ids[i] >= p.vocab) throw std::out_of_range("forward: token id out of range");
    h.row(i) = p.token_embedding.row(ids[i]);
    if (p.positional) h.row(i) += detail::sinusoid<Scalar>(static_cast<double>(i), d).transpose();
  }
  c.time_feature = detail::sinusoid<Scalar>(t * detail::kTimeScale, d);
  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> tau = c.time_feature.transpose() * p.time_weight + p.time_bias.col(0).transpose();
  h.rowwise() += tau;

  const Scalar alpha = Scalar(1) / std::sqrt(static_cast<Scalar>(d));
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const auto& w = p.blocks[b];
    auto& bc = c.blocks[b];
    bc.a = detail::layer_norm<Scalar>(h, w.ln1_scale, w.ln1_offset, bc.ln1);
    bc.q = bc.a * w.wq;
    bc.k = bc.a * w.wk;
    bc.v = bc.a * w.wv;
    bc.p = alpha * (bc.q * bc.k.transpose());
    detail::softmax_rows(bc.p);
    bc.c = bc.p * bc.v;
    h += bc.c * w.wo;
    bc.bn = detail::layer_norm<Scalar>(h, w.ln2_scale, w.ln2_offset, bc.ln2);
    bc.u = bc.bn * w.ff1;
    bc.u.rowwise() += w.ff1_bias.col(0).transpose();
    bc.g = bc.u.unaryExpr([](Scalar x) { return detail::gelu(x); });
    h += bc.g * w.ff2;
    h.rowwise() += w.ff2_bias.col(0).transpose();
  }
  c.z = detail::layer_norm<Scalar>(h, p.final_scale, p.final_offset, c.final_norm);
  Matrix logits = c.z * p.output_weight;
  logits.rowwise() += p.output_bias.col(0).transpose();
  return logits;
}

/// Accumulates d(objective)/d(params) into `grad` given d(objective)/d(logits).
template <class Scalar>
void backward(const DenoiserParams<Scalar>& p, const ForwardCache<Scalar>& c,
              const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& dlogits, DenoiserParams<Scalar>& grad) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const int d = p.dim;
  grad.output_weight += c.z.transpose() * dlogits;
  grad.output_bias.col(0) += dlogits.colwise().sum().transpose();
  const Matrix dz = dlogits * p.output_weight.transpose();
  Matrix dh = detail::layer_norm_backward<Scalar>(dz, p.final_scale, c.final_norm, grad.final_scale, grad.final_offset);

  const Scalar alpha = Scalar(1) / std::sqrt(static_cast<Scalar>(d));
  for (int b = static_cast<int>(p.blocks.size()) - 1; b >= 0; --b) {
    const auto& w = p.blocks[b];
    const auto& bc = c.blocks[b];
    auto& gw = grad.blocks[b];

    gw.ff2 += bc.g.transpose() * dh;
    gw.ff2_bias.col(0) += dh.colwise().sum().transpose();
    Matrix du = dh * w.ff2.transpose();
    du.array() *= bc.u.unaryExpr([](Scalar x) { return detail::gelu_grad(x); }).array();
    gw.ff1 += bc.bn.transpose() * du;
    gw.ff1_bias.col(0) += du.colwise().sum().transpose();
    const Matrix dbn = du * w.ff1.transpose();
    dh += detail::layer_norm_backward<Scalar>(dbn, w.ln2_scale, bc.ln2, gw.ln2_scale, gw.ln2_offset);

    gw.wo += bc.c.transpose() * dh;
    const Matrix dc = dh * w.wo.transpose();
    const Matrix dp = dc * bc.v.transpose();
    const Matrix dv = bc.p.transpose() * dc;
    Matrix ds = dp;
    for (Eigen::Index i = 0; i < ds.rows(); ++i) {
      const Scalar dot = (dp.row(i).array() * bc.p.row(i).array()).sum();
      ds.row(i) = bc.p.row(i).array() * (dp.row(i).array() - dot);
    }
    const Matrix dq = alpha * (ds * bc.k);
    const Matrix dk = alpha * (ds.transpose() * bc.q);
    gw.wq += bc.a.transpose() * dq;
    gw.wk += bc.a.transpose() * dk;
    gw.wv += bc.a.transpose() * dv;
    const Matrix da = dq * w.wq.transpose() + dk * w.wk.transpose() + dv * w.wv.transpose();
    dh += detail::layer_norm_backward<Scalar>(da, w.ln1_scale, bc.ln1, gw.ln1_scale, gw.ln1_offset);
  }

  for (std::size_t i = 0; i < c.ids.size(); ++i) grad.token_embedding.row(c.ids[i]) += dh.row(static_cast<Eigen::Index>(i));
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dtau = dh.colwise().sum().transpose();
  grad.time_weight += c.time_feature * dtau.transpose();
  grad.time_bias.col(0) += dtau;
}

/// Row-wise log-softmax.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> log_softmax_rows(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& logits) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const Scalar m = logits.row(i).maxCoeff();
    const Scalar lse = m + std::log((logits.row(i).array() - m).exp().sum());
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

/// The transformer denoiser as a Predictor.
class NeuralDenoiser : public Predictor {
 public:
  explicit NeuralDenoiser(DenoiserParams<double> params) : params_(std::move(params)) {}
  int vocab_size() const override { return params_.vocab; }
  Eigen::MatrixXd log_probs(std::span<const int> xt, double t) const override {
    return log_softmax_rows<double>(forward(params_, xt, t));
  }
  const DenoiserParams<double>& params() const { return params_; }
  DenoiserParams<double>& params() { return params_; }

 private:
  DenoiserParams<double> params_;
};

class ParamsIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kParamsVersion = 1;

/// Flat little-endian file: uint32 V, d, B, version, then every array of
/// arrays() in order as float32, column-major. The position signal flag is
/// not stored; loaded models always use it.
void save_params(const DenoiserParams<double>& p, const std::string& path);
DenoiserParams<double> load_params(const std::string& path);

}  // namespace fragflow
