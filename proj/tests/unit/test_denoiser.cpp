#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>

#include "fragflow/tabular.hpp"
#include "fragflow/training.hpp"

using namespace fragflow;

namespace {

class UniformPredictor : public Predictor {
 public:
  explicit UniformPredictor(int v) : v_(v) {}
  int vocab_size() const override { return v_; }
  Eigen::MatrixXd log_probs(std::span<const int> xt, double) const override {
    return Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(xt.size()), v_, -std::log(static_cast<double>(v_)));
  }

 private:
  int v_;
};

TokenSeq seq(std::vector<int> ids, int capacity = 0) { return make_seq(ids, capacity); }

}  // namespace

TEST(Noise, Endpoints) {
  Rng rng(1);
  const TokenSeq x0 = seq({1, 2, 3, 4}), x1 = seq({5, 6, 7, 8});
  EXPECT_EQ(noise_interpolate(x0, x1, 0.0, rng), x0);
  EXPECT_EQ(noise_interpolate(x0, x1, 1.0, rng), x1);
  EXPECT_THROW(noise_interpolate(x0, seq({1, 2}), 0.5, rng), DenoiserError);
}

TEST(Noise, HalfwayFraction) {
  Rng rng(2);
  std::vector<int> a(1000, 1), b(1000, 2);
  const TokenSeq xt = noise_interpolate(seq(a), seq(b), 0.5, rng);
  int hits = 0;
  for (int id : xt.ids) hits += id == 2;
  EXPECT_NEAR(hits / 1000.0, 0.5, 0.05);
}

TEST(Noise, UniformSourceExcludesPad) {
  Rng rng(3);
  const TokenSeq s = uniform_source(500, 7, 510, rng);
  for (int i = 0; i < 500; ++i) {
    EXPECT_GE(s.ids[i], 1);
    EXPECT_LE(s.ids[i], 6);
  }
  for (int i = 500; i < 510; ++i) EXPECT_EQ(s.ids[i], kPadId);
}

TEST(Forward, ShapeFiniteAndNormalized) {
  Rng rng(4);
  const auto p = init_params<double>(11, 16, 2, rng);
  const std::vector<int> ids{1, 5, 3, 10, 2};
  const Eigen::MatrixXd logits = forward(p, ids, 0.3);
  ASSERT_EQ(logits.rows(), 5);
  ASSERT_EQ(logits.cols(), 11);
  EXPECT_TRUE(logits.allFinite());
  const Eigen::MatrixXd lp = log_softmax_rows<double>(logits);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(lp.row(i).array().exp().sum(), 1.0, 1e-6);
  EXPECT_EQ(forward(p, ids, 0.3), logits);
}

TEST(Forward, PermutationEquivariantWithoutPositions) {
  Rng rng(5);
  const auto p = init_params<double>(9, 8, 2, rng, /*positional=*/false);
  const std::vector<int> a{1, 2, 3, 4}, b{1, 4, 3, 2};
  const Eigen::MatrixXd la = forward(p, a, 0.6), lb = forward(p, b, 0.6);
  EXPECT_LT((la.row(1) - lb.row(3)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((la.row(3) - lb.row(1)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((la.row(0) - lb.row(0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Loss, ClosedForms) {
  EXPECT_DOUBLE_EQ(loss_weight(0.0), 1.0);
  const int V = 13, L = 5;
  const UniformPredictor u(V);
  const TokenSeq x1 = seq({1, 2, 3, 4, 5});
  const TrainExample ex{x1, x1, 0.0};
  EXPECT_NEAR(example_loss(u, ex), L * std::log(static_cast<double>(V)), 1e-12);

  const TabularDenoiser perfect({x1}, V);
  Rng rng(1);
  for (double t : {0.0, 0.4, 0.9}) {
    const TrainExample e{x1, noise_interpolate(uniform_source(L, V, L, rng), x1, t, rng), t};
    EXPECT_NEAR(example_loss(perfect, e), 0.0, 1e-12);
    EXPECT_GE(example_loss(u, e), 0.0);
  }
  EXPECT_EQ(batch_loss(u, std::span<const TrainExample>{}), 0.0);
}

TEST(Grad, EmptyBatchAndPadRows) {
  Rng rng(6);
  const auto p = init_params<double>(10, 8, 1, rng);
  DenoiserParams<double> g = p.zeros_like();
  EXPECT_EQ(loss_and_grad(p, {}, g), 0.0);
  for (const auto* m : g.arrays()) EXPECT_EQ(m->cwiseAbs().maxCoeff(), 0.0);

  std::vector<TrainExample> batch;
  for (int k = 0; k < 4; ++k) batch.push_back(make_example(seq({3, 4, 5, 6}, 8), 10, 0.999, rng));
  loss_and_grad(p, batch, g);
  EXPECT_EQ(g.token_embedding.row(kPadId).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Grad, FiniteDifferences) {
  Rng rng(7);
  auto p = init_params<double>(12, 8, 1, rng);
  std::vector<TrainExample> batch;
  for (int k = 0; k < 3; ++k) {
    std::vector<int> ids(4);
    for (int& id : ids) id = static_cast<int>(rng.uniform_int(1, 11));
    batch.push_back(make_example(seq(ids), 12, 0.999, rng));
  }
  DenoiserParams<double> g = p.zeros_like();
  loss_and_grad(p, batch, g);
  auto pa = p.arrays();
  auto ga = g.arrays();
  const double h = 1e-5;
  for (int k = 0; k < 20; ++k) {
    const std::size_t a = rng.index(pa.size());
    const Eigen::Index i = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(pa[a]->size())));
    double& x = pa[a]->data()[i];
    const double keep = x;
    x = keep + h;
    const double up = batch_loss(NeuralDenoiser(p), batch);
    x = keep - h;
    const double down = batch_loss(NeuralDenoiser(p), batch);
    x = keep;
    const double fd = (up - down) / (2 * h);
    const double an = ga[a]->data()[i];
    EXPECT_LT(std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-5}), 1e-4) << "array " << a << " index " << i;
  }
}

TEST(Train, DeterministicAndImproving) {
  std::vector<TokenSeq> corpus;
  Rng data(8);
  for (int k = 0; k < 40; ++k) corpus.push_back(seq({1, 2, static_cast<int>(data.uniform_int(3, 4)), 5, 6}));
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.batch_size = 8;
  cfg.lr = 3e-3;
  cfg.holdout_fraction = 0.25;
  Rng r1(9), r2(9), init1(10), init2(10);
  auto p1 = init_params<double>(8, 16, 1, init1);
  auto p2 = init_params<double>(8, 16, 1, init2);
  const auto rep = train(p1, corpus, cfg, r1);
  train(p2, corpus, cfg, r2);
  EXPECT_TRUE(p1 == p2);
  EXPECT_LT(rep.final_holdout_loss, rep.initial_holdout_loss);
  EXPECT_EQ(rep.steps, static_cast<long>(rep.batch_losses.size()));
}

TEST(Train, DivergenceCarriesStep) {
  std::vector<TokenSeq> corpus{seq({1, 2, 3})};
  Rng rng(11);
  auto p = init_params<double>(5, 8, 1, rng);
  p.output_bias(0, 0) = std::nan("");
  try {
    train(p, corpus, TrainConfig{}, rng);
    FAIL();
  } catch (const DenoiserError& e) {
    EXPECT_EQ(e.kind(), DenoiserErrorKind::DivergenceDetected);
    EXPECT_EQ(e.step(), 0);
  }
}

TEST(AdamW, DecoupledDecayOnZeroGradient) {
  Rng rng(12);
  auto p = init_params<double>(5, 8, 1, rng);
  const auto before = p;
  AdamW<double> opt(p, {1e-2, 0.99, 0.999, 1e-8, 0.5});
  opt.step(p, p.zeros_like());
  EXPECT_NEAR(p.token_embedding(1, 1), before.token_embedding(1, 1) * (1.0 - 1e-2 * 0.5), 1e-15);
}

TEST(Params, SaveLoadRoundTrip) {
  Rng rng(13);
  const auto p = init_params<double>(7, 8, 2, rng);
  const std::string path = testing::TempDir() + "params_test.bin";
  save_params(p, path);
  const auto q = load_params(path);
  EXPECT_TRUE(q == p.cast<float>().cast<double>());
  EXPECT_EQ(q.vocab, 7);
  EXPECT_EQ(q.dim, 8);
  EXPECT_EQ(q.num_blocks(), 2);
  { std::FILE* f = std::fopen(path.c_str(), "ab"); std::fputc(0, f); std::fclose(f); }
  EXPECT_THROW(load_params(path), ParamsIoError);
  std::remove(path.c_str());
  EXPECT_THROW(load_params(path), ParamsIoError);
}

TEST(Tabular, Posterior) {
  const TokenSeq a = seq({1, 2, 3}), b = seq({3, 2, 1});
  const TabularDenoiser one({a}, 5);
  for (double t : {0.0, 0.5, 0.99}) {
    const Eigen::MatrixXd lp = one.log_probs(b.active(), t);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(std::exp(lp(i, a.ids[i])), 1.0, 1e-12);
  }
  const TabularDenoiser two({a, b}, 5);
  const auto w1 = two.posterior(b.active(), 1.0);
  EXPECT_NEAR(w1[1], 1.0, 1e-12);

  // Brute-force Bayes at t = 0.9 with x_t == a: each position matches with
  // probability t + (1-t)/(V-1), mismatches with (1-t)/(V-1).
  const double t = 0.9, on = t + (1 - t) / 4, off = (1 - t) / 4;
  const double la = on * on * on, lb = off * on * off;
  const auto w = two.posterior(a.active(), t);
  EXPECT_NEAR(w[0], la / (la + lb), 1e-12);
  EXPECT_GT(w[0], w[1]);
}
