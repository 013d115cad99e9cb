#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "fragflow/sampler.hpp"
#include "fragflow/tabular.hpp"

using namespace fragflow;

namespace {

TokenSeq seq(std::vector<int> ids) { return make_seq(ids); }

double tv_to_uniform_dataset(const std::vector<TokenSeq>& data, const std::map<std::vector<int>, int>& counts, int n) {
  std::map<std::vector<int>, double> target;
  for (const auto& d : data) target[std::vector<int>(d.ids.begin(), d.ids.end())] += 1.0 / data.size();
  double tv = 0.0;
  for (const auto& [k, p] : target) {
    auto it = counts.find(k);
    tv += std::abs(p - (it == counts.end() ? 0.0 : static_cast<double>(it->second) / n));
  }
  for (const auto& [k, c] : counts)
    if (!target.count(k)) tv += static_cast<double>(c) / n;
  return tv / 2.0;
}

}  // namespace

TEST(Anneal, PinnedForm) {
  for (double t : {0.0, 0.3, 1.0}) EXPECT_DOUBLE_EQ(anneal_temperature(1.0, t), 1.0);
  EXPECT_DOUBLE_EQ(anneal_temperature(2.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(anneal_temperature(2.0, 0.5), 1.5);
  EXPECT_DOUBLE_EQ(anneal_temperature(3.0, 0.0), 3.0);
}

TEST(VelocityKernel, RowIsDistribution) {
  Eigen::VectorXd p(4);
  p << 0.1, 0.2, 0.3, 0.4;
  for (double t : {0.0, 0.5, 0.98}) {
    const Eigen::VectorXd k = velocity_kernel(p, 2, t, 0.01);
    EXPECT_NEAR(k.sum(), 1.0, 1e-12);
    EXPECT_GE(k.minCoeff(), 0.0);
  }
  const Eigen::VectorXd last = velocity_kernel(p, 2, 0.9, 0.1);
  EXPECT_LT((last - p).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(VelocityStep, TinyStepKeepsState) {
  const TabularDenoiser model({seq({1, 2, 3}), seq({3, 2, 1})}, 5);
  Rng rng(1);
  const TokenSeq x = seq({4, 4, 4});
  int changed = 0;
  for (int k = 0; k < 200; ++k) changed += !(velocity_step(model, x, 0.2, 1e-9, rng) == x);
  EXPECT_EQ(changed, 0);
  EXPECT_THROW(velocity_step(model, x, 0.95, 0.1, rng, /*clamp=*/false), SamplerError);
  EXPECT_NO_THROW(velocity_step(model, x, 0.95, 0.1, rng, /*clamp=*/true));
}

TEST(RefineStep, ArgmaxPredictorOneStep) {
  const TokenSeq y = seq({1, 3, 2, 4});
  const TabularDenoiser model({y}, 6);
  SampleConfig cfg;
  cfg.mode = SampleMode::Refine;
  cfg.h = 0.1;
  Rng rng(2);
  EXPECT_EQ(refine_step(model, seq({5, 5, 5, 5}), 0.0, cfg, rng), y);
}

TEST(RefineStep, ZeroNoiseIsTemperatureSampling) {
  // Two-sequence posterior at t where x_t matches neither: each position is a
  // 50/50 mixture, so temperature-1 sampling hits either token half the time.
  const TabularDenoiser model({seq({1}), seq({2})}, 4);
  SampleConfig cfg;
  cfg.mode = SampleMode::Refine;
  Rng rng(3);
  int ones = 0;
  for (int k = 0; k < 4000; ++k) ones += refine_step(model, seq({3}), 0.5, cfg, rng).ids[0] == 1;
  EXPECT_NEAR(ones / 4000.0, 0.5, 0.03);
}

TEST(Generate, FullMaskReturnsMask) {
  const TabularDenoiser model({seq({1, 2, 3, 4}), seq({4, 3, 2, 1})}, 6);
  for (SampleMode mode : {SampleMode::Velocity, SampleMode::Refine}) {
    SampleConfig cfg;
    cfg.mode = mode;
    cfg.h = 0.1;
    cfg.r = 1.0;
    cfg.mask = ConstraintMask{{5, 5, 1, 2}};
    Rng rng(4);
    const auto res = generate(model, cfg, rng);
    EXPECT_EQ(std::vector<int>(res.seq.ids.begin(), res.seq.ids.end()), (std::vector<int>{5, 5, 1, 2}));
  }
}

TEST(Generate, MaskHeldAtEveryStep) {
  const TabularDenoiser model({seq({1, 2, 3, 4, 1}), seq({4, 3, 2, 1, 2})}, 6);
  SampleConfig cfg;
  cfg.mode = SampleMode::Refine;
  cfg.h = 0.05;
  cfg.r = 1.0;
  cfg.T0 = 2.0;
  cfg.mask = ConstraintMask{{-1, 5, -1, 5, -1}};
  int violations = 0, observed = 0;
  for (int k = 0; k < 50; ++k) {
    Rng rng(100 + k);
    generate(model, cfg, rng, nullptr, [&](int, double, const TokenSeq& s) {
      ++observed;
      violations += !cfg.mask->satisfied_by(s);
    });
  }
  EXPECT_EQ(violations, 0);
  EXPECT_EQ(observed, 50 * 21);
}

TEST(Generate, TabularRecoveryCoarse) {
  const std::vector<TokenSeq> data{seq({1, 2, 3}), seq({3, 1, 2})};
  const TabularDenoiser model(data, 5);
  SampleConfig cfg;
  cfg.h = 0.1;
  cfg.length = 3;
  const int n = 3000;
  std::map<std::vector<int>, int> counts;
  for (const auto& r : generate_many(model, cfg, Rng(5), n)) ++counts[std::vector<int>(r.seq.ids.begin(), r.seq.ids.end())];
  EXPECT_LT(tv_to_uniform_dataset(data, counts, n), 0.05);
}

TEST(Generate, RefineChangesDecline) {
  const std::vector<TokenSeq> data{seq({1, 2, 3, 4, 5, 6}), seq({6, 5, 4, 3, 2, 1}), seq({1, 1, 2, 2, 3, 3})};
  const TabularDenoiser model(data, 8);
  SampleConfig cfg;
  cfg.mode = SampleMode::Refine;
  cfg.h = 0.1;
  cfg.r = 1.0;
  cfg.length = 6;
  double early = 0.0, late = 0.0;
  for (const auto& r : generate_many(model, cfg, Rng(6), 100)) {
    const auto& s = r.stats.steps;
    ASSERT_EQ(s.size(), 10u);
    for (int k = 0; k < 3; ++k) early += s[k].changes;
    for (int k = 7; k < 10; ++k) late += s[k].changes;
  }
  EXPECT_LT(late, early);
}

TEST(Generate, DeterministicAndStepCount) {
  const TabularDenoiser model({seq({1, 2, 3}), seq({3, 2, 1})}, 5);
  SampleConfig cfg;
  cfg.h = 0.01;
  cfg.length = 3;
  Rng a(7), b(7);
  const auto ra = generate(model, cfg, a), rb = generate(model, cfg, b);
  EXPECT_EQ(ra.seq, rb.seq);
  EXPECT_EQ(ra.stats.steps.size(), 100u);
  cfg.t_start = 0.2;
  cfg.h = 0.1;
  EXPECT_EQ(generate(model, cfg, a).stats.steps.size(), 8u);
}

TEST(Config, Validation) {
  SampleConfig cfg;
  cfg.length = 3;
  cfg.h = 0.0;
  EXPECT_THROW(validate(cfg), SamplerError);
  cfg.h = 0.5;
  cfg.t_start = 0.8;
  EXPECT_THROW(validate(cfg), SamplerError);
  cfg.t_start = 0.0;
  cfg.T0 = -1.0;
  EXPECT_THROW(validate(cfg), SamplerError);
  EXPECT_EQ(parse_sample_mode("refine"), SampleMode::Refine);
  EXPECT_THROW(parse_sample_mode("bogus"), SamplerError);
}

TEST(Prompt, MaskFromPrompt) {
  const Vocab v = build_vocab(std::vector<std::string>{"CC C"});
  const ConstraintMask m = mask_from_prompt("C?? ?C", v);
  ASSERT_EQ(m.length(), 6);
  EXPECT_TRUE(m.fixed(0));
  EXPECT_FALSE(m.fixed(1));
  EXPECT_FALSE(m.fixed(2));
  EXPECT_TRUE(m.fixed(3));
  EXPECT_FALSE(m.fixed(4));
  EXPECT_TRUE(m.fixed(5));
  EXPECT_EQ(m.required[3], v.separator_id());
}

TEST(Stats, Csv) {
  TrajectoryStats s;
  s.steps.push_back({1, 0.0, 3, 0.5});
  std::ostringstream out;
  write_stats_csv(out, s);
  EXPECT_EQ(out.str(), "step,t,changes,mean_confidence\n1,0,3,0.5\n");
  EXPECT_EQ(s.total_changes(), 3);
}
