// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "fragflow/corpus.hpp"
#include "fragflow/metrics.hpp"
#include "fragflow/optimizer.hpp"
#include "fragflow/smiles.hpp"
#include "fragflow/tabular.hpp"

using namespace fragflow;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<int> ids_of(const TokenSeq& s) { return {s.ids.begin(), s.ids.begin() + s.length}; }

// ---- shared fixtures ----

const std::vector<std::string>& toy_corpus() {
  static const std::vector<std::string> c = generate_corpus(CorpusOptions{});
  return c;
}

struct ToyModel {
  Vocab vocab;
  LengthDist lengths;
  std::vector<std::string> notation;
  DenoiserParams<double> params;
};

// A small denoiser trained briefly on part of the toy corpus.
const ToyModel& toy_model() {
  static const ToyModel m = [] {
    const auto& smiles = toy_corpus();
    const std::vector<std::string> subset(smiles.begin(), smiles.begin() + 1000);
    auto notation = fragment_corpus(subset, FragRuleSet::defaults(), 1);
    Vocab vocab = build_vocab(notation);
    LengthDist lengths = length_distribution(notation, vocab);
    std::vector<TokenSeq> seqs;
    for (const auto& n : notation) seqs.push_back(encode(n, vocab));
    Rng rng(2);
    auto params = init_params<double>(vocab.size(), 16, 1, rng);
    TrainConfig tc;
    tc.epochs = 30;
    tc.lr = 1e-3;
    train(params, seqs, tc, rng);
    return ToyModel{std::move(vocab), lengths, std::move(notation), std::move(params)};
  }();
  return m;
}

// ---- criteria ----

Outcome tabular_recovery() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<std::vector<int>> data{{1, 2, 3, 4, 5}, {5, 4, 3, 2, 1}, {1, 1, 2, 2, 3}, {7, 6, 5, 4, 3}, {1, 2, 3, 4, 5}};
  std::vector<TokenSeq> seqs;
  for (const auto& d : data) seqs.push_back(make_seq(d));
  const TabularDenoiser model(seqs, 8);
  std::map<std::vector<int>, double> target;
  for (const auto& d : data) target[d] += 1.0 / static_cast<double>(data.size());

  const int n = 10000;
  bool ok = true;
  std::string detail;
  for (double h : {0.1, 0.01}) {
    SampleConfig cfg;
    cfg.h = h;
    cfg.length = 5;
    std::map<std::vector<int>, double> freq;
    for (const auto& r : generate_many(model, cfg, Rng(100), n)) freq[ids_of(r.seq)] += 1.0 / n;
    double tv = 0.0;
    for (const auto& [k, p] : target) tv += std::abs(p - (freq.count(k) ? freq[k] : 0.0));
    for (const auto& [k, q] : freq)
      if (!target.count(k)) tv += q;
    tv /= 2.0;
    ok &= tv < 0.05;
    detail += "h=" + fmt("%g", h) + " TV=" + fmt("%.4f", tv) + "; ";
  }
  const double secs = seconds_since(start);
  ok &= secs < 60.0;
  return {ok, detail + "runtime " + fmt("%.1f", secs) + " s (limit 60)"};
}

// Loss of one example evaluated in long double, independent of the library's
// loss and gradient code.
long double reference_loss(const DenoiserParams<long double>& p, const std::vector<TrainExample>& batch) {
  long double total = 0.0L;
  for (const auto& ex : batch) {
    const auto logits = forward(p, ex.xt.active(), ex.t);
    const auto lp = log_softmax_rows<long double>(logits);
    long double nll = 0.0L;
    for (int i = 0; i < ex.x1.length; ++i) nll -= lp(i, ex.x1.ids[i]);
    total += nll / (1.0L - static_cast<long double>(ex.t) * ex.t);
  }
  return total / static_cast<long double>(batch.size());
}

Outcome gradient_check() {
  Rng rng(7);
  const int V = 20, d = 8, B = 1, L = 4;
  DenoiserParams<double> params = init_params<double>(V, d, B, rng);
  std::vector<TrainExample> batch;
  for (int k = 0; k < 3; ++k) {
    std::vector<int> x1(L);
    for (auto& v : x1) v = static_cast<int>(rng.uniform_int(1, V - 1));
    batch.push_back(make_example(make_seq(x1), V, 0.999, rng));
  }
  DenoiserParams<double> grad = params.zeros_like();
  loss_and_grad(params, batch, grad);

  const auto arrays = params.arrays();
  const auto garrays = grad.arrays();
  std::vector<std::pair<std::size_t, Eigen::Index>> coords;
  std::vector<std::pair<std::size_t, Eigen::Index>> all;
  for (std::size_t a = 0; a < arrays.size(); ++a)
    for (Eigen::Index i = 0; i < arrays[a]->size(); ++i) all.emplace_back(a, i);
  // 20 distinct random coordinates among parameters that the batch touches.
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<std::size_t>(order));
  const long double eps = 1e-6L;
  double worst = 0.0;
  int checked = 0;
  for (std::size_t o : order) {
    if (checked == 20) break;
    const auto [a, i] = all[o];
    const double analytic = garrays[a]->data()[i];
    DenoiserParams<long double> plus = params.cast<long double>(), minus = plus;
    plus.arrays()[a]->data()[i] += eps;
    minus.arrays()[a]->data()[i] -= eps;
    const long double fd = (reference_loss(plus, batch) - reference_loss(minus, batch)) / (2.0L * eps);
    if (analytic == 0.0 && std::abs(static_cast<double>(fd)) < 1e-14) continue;  // untouched coordinate
    const double rel = std::abs(analytic - static_cast<double>(fd)) / std::max(std::abs(analytic), std::abs(static_cast<double>(fd)));
    worst = std::max(worst, rel);
    ++checked;
  }
  return {checked == 20 && worst < 1e-4, std::to_string(checked) + " coordinates, max relative error " + fmt("%.2e", worst) +
                                             " (limit 1e-4)"};
}

// Predicts fixed per-position distributions, whatever the time.
class FrozenPredictor : public Predictor {
 public:
  explicit FrozenPredictor(Eigen::MatrixXd logits) : logits_(std::move(logits)) {}
  int vocab_size() const override { return static_cast<int>(logits_.cols()); }
  Eigen::MatrixXd log_probs(std::span<const int> xt, double) const override {
    return log_softmax_rows<double>(logits_.topRows(static_cast<Eigen::Index>(xt.size())));
  }

 private:
  Eigen::MatrixXd logits_;
};

Outcome loss_law() {
  Rng rng(3);
  Eigen::MatrixXd logits(6, 10);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = rng.normal();
  const FrozenPredictor model(logits);
  const TokenSeq x1 = make_seq(std::vector<int>{1, 4, 2, 8, 5, 7});
  const TokenSeq xt = make_seq(std::vector<int>{3, 4, 9, 8, 1, 7});
  const double base = example_loss(model, {x1, xt, 0.0});
  double worst = 0.0;
  std::string detail;
  for (double t : {0.0, 0.5, 0.9}) {
    const double measured = example_loss(model, {x1, xt, t});
    const double expected = base / (1.0 - t * t);
    const double rel = std::abs(measured - expected) / std::abs(expected);
    worst = std::max(worst, rel);
    detail += "t=" + fmt("%g", t) + " ratio " + fmt("%.6f", measured / base) + "; ";
  }
  return {worst < 1e-6, detail + "max relative deviation " + fmt("%.1e", worst) + " (limit 1e-6)"};
}

Outcome overfit_single_molecule() {
  const auto start = std::chrono::steady_clock::now();
  const std::string smiles = canonical_smiles("CC(=O)Nc1ccc(O)cc1");
  Rng frag_rng(5);
  const std::string notation = to_notation(fragment(parse_smiles(smiles), FragRuleSet::defaults(), frag_rng));
  const Vocab vocab = build_vocab(std::vector<std::string>{notation});
  const TokenSeq x1 = encode(notation, vocab);
  Rng rng(6);
  auto params = init_params<double>(vocab.size(), 16, 1, rng);
  TrainConfig tc;
  tc.epochs = 2000;
  tc.samples_per_sequence = 16;
  tc.lr = 3e-3;
  const std::vector<TokenSeq> corpus{x1};
  train(params, corpus, tc, rng);
  const NeuralDenoiser model(params);

  bool ok = true;
  std::string detail = "target " + notation + "; ";
  for (SampleMode mode : {SampleMode::Velocity, SampleMode::Refine}) {
    SampleConfig cfg;
    cfg.mode = mode;
    cfg.h = 0.01;
    cfg.length = x1.length;
    const auto texts = sample_texts(model, vocab, cfg, 500, 8);
    int hits = 0;
    for (const auto& t : texts)
      if (auto g = decode_molecule(t)) hits += write_smiles(*g) == smiles;
    const double f = static_cast<double>(hits) / static_cast<double>(texts.size());
    ok &= f > 0.99;
    detail += std::string(to_string(mode)) + " " + fmt("%.3f", f) + "; ";
  }
  const double secs = seconds_since(start);
  ok &= secs < 120.0;
  return {ok, detail + "runtime " + fmt("%.1f", secs) + " s (limit 120)"};
}

Outcome refinement_dynamics() {
  const ToyModel& m = toy_model();
  const NeuralDenoiser model(m.params);
  const int runs = 100;
  auto totals = [&](SampleMode mode, double h) {
    SampleConfig cfg;
    cfg.mode = mode;
    cfg.h = h;
    cfg.T0 = 1.0;
    cfg.r = mode == SampleMode::Refine ? 1.0 : 0.0;
    cfg.length = 20;
    std::vector<long> out;
    for (int k = 0; k < runs; ++k) {
      Rng rng = Rng(11).fork(k);  // same seed family for both step sizes
      out.push_back(generate(model, cfg, rng).stats.total_changes());
    }
    return out;
  };
  const auto r_coarse = totals(SampleMode::Refine, 0.1), r_fine = totals(SampleMode::Refine, 0.01);
  int larger = 0;
  for (int k = 0; k < runs; ++k) larger += r_fine[k] > r_coarse[k];
  const auto v_coarse = totals(SampleMode::Velocity, 0.1), v_fine = totals(SampleMode::Velocity, 0.01);
  const double mc = std::accumulate(v_coarse.begin(), v_coarse.end(), 0.0) / runs;
  const double mf = std::accumulate(v_fine.begin(), v_fine.end(), 0.0) / runs;
  const double ratio = std::max(mc, mf) / std::min(mc, mf);
  const double rc = std::accumulate(r_coarse.begin(), r_coarse.end(), 0.0) / runs;
  const double rf = std::accumulate(r_fine.begin(), r_fine.end(), 0.0) / runs;
  return {larger >= 95 && ratio < 1.2,
          "refine: h=0.01 > h=0.1 in " + std::to_string(larger) + "/100 (mean " + fmt("%.1f", rf) + " vs " +
              fmt("%.1f", rc) + "); velocity mean " + fmt("%.2f", mf) + " vs " + fmt("%.2f", mc) + ", ratio " +
              fmt("%.3f", ratio) + " (limit 1.2)"};
}

Outcome round_trips() {
  const auto& smiles = toy_corpus();
  Rng rng(12);
  long smiles_ok = 0, frag_ok = 0;
  for (std::size_t i = 0; i < smiles.size(); ++i) {
    const MolGraph g = parse_smiles(smiles[i]);
    const std::string w = write_smiles(g);
    smiles_ok += w == smiles[i] && write_smiles(parse_smiles(w)) == w;
    Rng r = rng.fork(i);
    const std::string note = to_notation(fragment(g, FragRuleSet::defaults(), r));
    frag_ok += write_smiles(reassemble(parse_notation(note))) == w;
  }
  const auto n = static_cast<long>(smiles.size());
  return {n == 5000 && smiles_ok == n && frag_ok == n,
          "SMILES " + std::to_string(smiles_ok) + "/" + std::to_string(n) + ", fragment/reassemble " +
              std::to_string(frag_ok) + "/" + std::to_string(n)};
}

Outcome rank_sampling() {
  const double kappa = 0.001;
  const int M = 10;
  Population pop(M, 0.7);
  std::vector<Scored> cands;
  const auto& smiles = toy_corpus();
  for (std::size_t i = 0; i < 400; ++i) cands.push_back({smiles[i], 1.0 - static_cast<double>(i) / 400.0});
  pop.update(cands);
  if (static_cast<int>(pop.size()) != M) return {false, "population reached only " + std::to_string(pop.size())};

  std::vector<double> p(M);
  for (int r = 1; r <= M; ++r) p[r - 1] = 1.0 / (r + kappa * M);
  const double z = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= z;
  std::vector<double> second(M, 0.0);  // marginal of the draw without replacement
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j)
      if (j != i) second[j] += p[i] * p[j] / (1.0 - p[i]);

  const int draws = 100000;
  std::vector<double> f1(M, 0.0), f2(M, 0.0);
  Rng rng(13);
  bool distinct = true;
  for (int k = 0; k < draws; ++k) {
    const auto [a, b] = rank_sample_parents(pop, kappa, rng);
    distinct &= a != b;
    f1[a] += 1.0 / draws;
    f2[b] += 1.0 / draws;
  }
  double worst = 0.0;
  for (int i = 0; i < M; ++i) worst = std::max({worst, std::abs(f1[i] - p[i]), std::abs(f2[i] - second[i])});
  return {distinct && worst < 0.01, "max |freq - formula| " + fmt("%.4f", worst) + " over first and second draws (limit 0.01)"};
}

Outcome bandit_convergence() {
  int good = 0;
  std::string modes;
  for (int seed = 0; seed < 10; ++seed) {
    std::vector<int> arms;
    for (int n = 1; n <= 40; ++n) arms.push_back(n);
    Bandit bandit(arms);
    Rng rng(1000 + seed);
    for (int u = 0; u < 500; ++u) {
      const int L = bandit.sample(rng);
      bandit.update(L, std::exp(-(L - 20.0) * (L - 20.0) / 8.0));
    }
    const int mode = bandit.modal_length();
    good += std::abs(mode - 20) <= 2;
    modes += std::to_string(mode) + " ";
  }
  return {good >= 9, std::to_string(good) + "/10 seeds within 2 of 20 (modes: " + modes + ")"};
}

double brute_top10_mean(std::vector<double> seen) {
  std::sort(seen.rbegin(), seen.rend());
  const std::size_t m = std::min<std::size_t>(10, seen.size());
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) s += seen[i];
  return m ? s / static_cast<double>(m) : 0.0;
}

Outcome ppo_sanity() {
  const ToyModel& m = toy_model();
  std::string detail;

  // Zero-variance rewards.
  DenoiserParams<double> params = m.params;
  const DenoiserParams<double> before = params;
  std::vector<PPOSample> samples;
  for (int i = 0; i < 8; ++i) samples.push_back({encode(m.notation[i], m.vocab), 0.25});
  PPOConfig pc;
  Rng rng(14);
  ppo_update(params, before, samples, pc, rng);
  const bool identical = params == before;
  detail += std::string("zero-variance update identical: ") + (identical ? "yes" : "no") + "; ";

  // The denoiser alone rarely yields valid molecules at this scale, so the
  // population is seeded by prescreening held-out corpus molecules; those
  // calls sit outside the budget.
  const auto& corpus = toy_corpus();
  const std::vector<std::string> prescreen(corpus.begin() + 1000, corpus.begin() + 1200);
  bool improved = true, auc_ok = true;
  double worst_auc = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto start = std::chrono::steady_clock::now();
    DenoiserParams<double> p = m.params;
    auto oracle = make_oracle("carbon_fraction");
    OptimizeConfig cfg;
    cfg.budget = 2000;
    cfg.seed = seed;
    cfg.sampling.h = 0.1;
    cfg.prescreen = prescreen;
    const OptimizeResult res = optimize(p, m.vocab, m.lengths, *oracle, cfg);
    std::vector<double> scores;
    std::size_t screened = 0;
    for (const auto& h : res.history) {
      scores.push_back(h.score);
      screened += h.source == "prescreen";
    }
    const std::size_t budgeted = scores.size() - screened;
    if (budgeted < 100) {
      improved = false;
      detail += "seed " + std::to_string(seed) + ": only " + std::to_string(budgeted) + " budgeted calls; ";
      continue;
    }
    // Top-10 over everything scored so far, prescreen included.
    const double at100 = brute_top10_mean({scores.begin(), scores.begin() + screened + 100});
    const double at_end = brute_top10_mean(scores);
    const std::size_t limit = screened + 2000;
    double brute = 0.0;
    for (std::size_t k = 1; k <= limit; ++k) brute += brute_top10_mean({scores.begin(), scores.begin() + std::min(k, scores.size())});
    brute /= static_cast<double>(limit);
    const double err = std::abs(brute - res.auc_top10);
    worst_auc = std::max(worst_auc, err);
    improved &= budgeted == 2000 && at_end > at100;
    auc_ok &= err <= 1e-12;
    detail += "seed " + std::to_string(seed) + ": top10 " + fmt("%.4f", at100) + " -> " + fmt("%.4f", at_end) + " (" +
              std::to_string(budgeted) + " budgeted calls, " + std::to_string(res.ppo_updates) + " PPO updates, " +
              fmt("%.0f", seconds_since(start)) + " s); ";
  }
  detail += "max AUC deviation " + fmt("%.1e", worst_auc);
  return {identical && improved && auc_ok, detail};
}

Outcome mask_fidelity() {
  const ToyModel& m = toy_model();
  const NeuralDenoiser model(m.params);
  std::vector<std::string> pieces;
  for (std::size_t i = 0; i < 200; ++i)
    for (const auto& f : split_fragments(m.notation[i])) pieces.push_back(f);
  Rng rng(15);
  int clean = 0;
  long checks = 0;
  const int runs = 1000;
  for (int k = 0; k < runs; ++k) {
    const std::string a = pieces[rng.index(pieces.size())], b = pieces[rng.index(pieces.size())];
    const int free = 2 + static_cast<int>(rng.index(8));
    std::string prompt;
    switch (k % 3) {
      case 0: prompt = a + " " + std::string(free, '?') + " " + b; break;  // linker
      case 1: prompt = a + " " + std::string(free, '?'); break;            // decoration
      default: prompt = std::string(free, '?') + " " + a; break;
    }
    SampleConfig cfg;
    cfg.mode = k % 2 ? SampleMode::Refine : SampleMode::Velocity;
    cfg.r = cfg.mode == SampleMode::Refine ? 1.0 : 0.0;
    cfg.h = 0.1;
    cfg.mask = mask_from_prompt(prompt, m.vocab);
    cfg.length = cfg.mask->length();
    bool ok = true;
    Rng run_rng = rng.fork(k);
    const auto res = generate(model, cfg, run_rng, nullptr, [&](int, double, const TokenSeq& s) {
      ++checks;
      ok &= cfg.mask->satisfied_by(s);
    });
    ok &= cfg.mask->satisfied_by(res.seq);
    clean += ok;
  }
  return {clean == runs, std::to_string(clean) + "/1000 runs clean over " + std::to_string(checks) + " recorded states"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"exact-posterior recovery (tabular, velocity)", tabular_recovery},
      {"gradient vs finite differences", gradient_check},
      {"loss weight law 1/(1-t^2)", loss_law},
      {"single-molecule overfit", overfit_single_molecule},
      {"refinement dynamics", refinement_dynamics},
      {"round-trips on 5k corpus", round_trips},
      {"rank-based parent sampling", rank_sampling},
      {"bandit convergence", bandit_convergence},
      {"PPO sanity and optimization", ppo_sanity},
      {"constraint mask fidelity", mask_fidelity},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str(),
                seconds_since(start));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
