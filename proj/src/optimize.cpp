#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "fragflow/metrics.hpp"
#include "fragflow/optimizer.hpp"
#include "fragflow/smiles.hpp"
#include "json.hpp"

namespace fragflow {

double lead_score(double docking, double qed, double sa, double sim, double delta) {
  double penalty = std::max(0.0, (0.6 - qed) / 0.6) + std::max(0.0, (sa - 4.0) / 6.0);
  if (delta > 0.0) penalty += std::max(0.0, (delta - sim) / delta);
  penalty = std::min(1.0, penalty);
  return docking / 15.0 * (1.0 - penalty);
}

void validate(const OptimizeConfig& cfg) {
  auto bad = [](const std::string& what) { throw OptimizerError(OptimizerError::Kind::BadConfig, what); };
  if (cfg.budget < 0) bad("budget must be >= 0");
  if (cfg.population_size < 2) bad("population size must be >= 2");
  if (!(cfg.kappa > 0.0)) bad("kappa must be positive");
  if (cfg.min_distance < 0.0 || cfg.min_distance > 1.0) bad("min distance must lie in [0,1]");
  if (cfg.offspring_per_round < 0 || cfg.mutations_per_round < 0 || cfg.offspring_per_round + cfg.mutations_per_round < 1)
    bad("a round needs at least one candidate");
  if (cfg.population_every < 1) bad("population cadence must be >= 1");
  if (cfg.replay_capacity < 0 || cfg.replay_fraction < 0.0 || cfg.replay_fraction >= 1.0) bad("replay settings out of range");
  if (cfg.max_stalled_rounds < 1) bad("max stalled rounds must be >= 1");
  validate(cfg.ppo);
}

namespace {

struct Candidate {
  std::string smiles;
  const char* source;
  std::optional<TokenSeq> x1;
  int length = 0;  // bandit arm, 0 for mutations and prescreen
};

std::optional<TokenSeq> encode_molecule(const MolGraph& g, const Vocab& vocab, const FragRuleSet& rules, Rng& rng) {
  try {
    return encode(to_notation(fragment(g, rules, rng)), vocab);
  } catch (const TokenizerError&) {
    return std::nullopt;
  }
}

// Tokens of the crossover string cut or padded with random tokens to `length`.
std::optional<TokenSeq> crossover_seed(const Population& pop, const OptimizeConfig& cfg, const Vocab& vocab, int length,
                                       Rng& rng) {
  const auto [ia, ib] = rank_sample_parents(pop, cfg.kappa, rng);
  TokenSeq tokens;
  try {
    const auto fa = fragment(parse_smiles(pop.entries()[ia].smiles), cfg.rules, rng);
    const auto fb = fragment(parse_smiles(pop.entries()[ib].smiles), cfg.rules, rng);
    tokens = encode(crossover(fa, fb, rng), vocab);
  } catch (const TokenizerError&) {
    return std::nullopt;
  } catch (const SmilesError&) {
    return std::nullopt;
  }
  TokenSeq x0 = uniform_source(length, vocab.size(), length, rng);
  for (int i = 0; i < std::min(length, tokens.length); ++i) x0.ids[i] = tokens.ids[i];
  return x0;
}

}  // namespace

OptimizeResult optimize(DenoiserParams<double>& params, const Vocab& vocab, const LengthDist& lengths, Oracle& oracle,
                        const OptimizeConfig& cfg) {
  validate(cfg);
  const Rng root(cfg.seed);
  Rng gen_rng = root.fork(1), ga_rng = root.fork(2), mut_rng = root.fork(3), ppo_rng = root.fork(4), frag_rng = root.fork(5),
      replay_rng = root.fork(6);

  OptimizeResult result;
  Population pop(cfg.population_size, cfg.min_distance);
  std::optional<Bandit> bandit;
  if (cfg.use_bandit) bandit = Bandit::from_length_dist(lengths, cfg.bandit);
  const bool replay_on = cfg.use_replay && cfg.prescreen.empty() && cfg.replay_capacity > 0;

  std::map<std::string, double> cache;
  std::vector<Scored> pending_pop;
  std::vector<PPOSample> pending_ppo;
  std::deque<PPOSample> replay;
  DenoiserParams<double> old_params = params;
  long calls = 0;
  // Prescreen calls are recorded but do not count against the budget.
  long limit = std::numeric_limits<long>::max();

  // Scores as much of `batch` as the budget allows, recording every call.
  auto score = [&](std::vector<Candidate>& batch) -> std::vector<double> {
    if (static_cast<long>(batch.size()) > limit - calls) batch.resize(limit - calls);
    if (batch.empty()) return {};
    std::vector<std::string> smiles;
    for (const auto& c : batch) smiles.push_back(c.smiles);
    std::vector<double> scores;
    try {
      scores = oracle.score(smiles);
    } catch (const OracleError& e) {
      throw OracleFailure(calls + 1, std::string("oracle failed at call ") + std::to_string(calls + 1) + ": " + e.what());
    }
    if (scores.size() != batch.size())
      throw OracleFailure(calls + 1, "oracle returned " + std::to_string(scores.size()) + " scores for " +
                                         std::to_string(batch.size()) + " molecules");
    for (std::size_t i = 0; i < batch.size(); ++i) {
      result.history.push_back({++calls, batch[i].smiles, scores[i], batch[i].source});
      cache[batch[i].smiles] = scores[i];
      pending_pop.push_back({batch[i].smiles, scores[i]});
    }
    return scores;
  };

  if (!cfg.prescreen.empty()) {
    std::vector<Candidate> batch;
    std::set<std::string> seen;
    for (const auto& s : cfg.prescreen) {
      try {
        MolGraph g = parse_smiles(s);
        if (!is_valid(g)) continue;
        std::string canon = write_smiles(g);
        if (seen.insert(canon).second) batch.push_back({std::move(canon), "prescreen", std::nullopt, 0});
      } catch (const SmilesError&) {
      }
    }
    score(batch);
    pop.update(pending_pop);
    pending_pop.clear();
  }

  limit = calls + cfg.budget;
  int stalled = 0;
  while (calls < limit) {
    ++result.rounds;
    const NeuralDenoiser model(params);
    std::vector<Candidate> batch;
    std::set<std::string> in_batch;
    std::vector<std::pair<int, double>> feedback;

    const int n_mut = cfg.use_mutation ? std::min<int>(cfg.mutations_per_round, static_cast<int>(pop.size())) : 0;
    const int n_off = cfg.offspring_per_round + cfg.mutations_per_round - n_mut;
    for (int k = 0; k < n_off; ++k) {
      const int L = bandit ? bandit->sample(gen_rng) : sample_length(lengths, gen_rng);
      SampleConfig sc = cfg.sampling;
      sc.length = L;
      sc.length_dist.reset();
      sc.mask.reset();
      sc.capacity = 0;
      std::optional<TokenSeq> x0;
      if (cfg.use_ga && pop.size() >= 2) {
        x0 = crossover_seed(pop, cfg, vocab, L, ga_rng);
        if (!x0) continue;  // attempt spent, no oracle call
      }
      const SampleResult out = generate(model, sc, gen_rng, x0 ? &*x0 : nullptr);
      const auto mol = decode_molecule(decode(out.seq, vocab));
      if (!mol) {
        ++result.invalid_offspring;
        feedback.emplace_back(L, 0.0);
        continue;
      }
      std::string smi = write_smiles(*mol);
      if (auto hit = cache.find(smi); hit != cache.end()) {
        feedback.emplace_back(L, hit->second);
        continue;
      }
      if (!in_batch.insert(smi).second) continue;
      batch.push_back({std::move(smi), "offspring", out.seq, L});
    }
    for (int k = 0; k < n_mut; ++k) {
      const MolGraph m = mutate(parse_smiles(pop.entries()[k].smiles), mut_rng);
      std::string smi = write_smiles(m);
      if (cache.count(smi) || !in_batch.insert(smi).second) continue;
      batch.push_back({std::move(smi), "mutation", encode_molecule(m, vocab, cfg.rules, frag_rng), 0});
    }

    const auto scores = score(batch);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (batch[i].length > 0) feedback.emplace_back(batch[i].length, scores[i]);
      if (batch[i].x1) pending_ppo.push_back({*batch[i].x1, scores[i]});
    }
    if (bandit)
      for (const auto& [L, r] : feedback) bandit->update(L, r);

    if (static_cast<int>(pending_pop.size()) >= cfg.population_every || pop.size() < 2) {
      pop.update(pending_pop);
      pending_pop.clear();
    }

    if (cfg.use_ppo && static_cast<int>(pending_ppo.size()) >= cfg.ppo.cadence) {
      std::vector<PPOSample> samples = pending_ppo;
      if (replay_on && !replay.empty()) {
        const double ratio = cfg.replay_fraction / (1.0 - cfg.replay_fraction);
        const std::size_t k =
            std::min(replay.size(), static_cast<std::size_t>(std::floor(ratio * static_cast<double>(pending_ppo.size()))));
        std::vector<std::size_t> idx(replay.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + replay_rng.index(idx.size() - i)]);
        for (std::size_t i = 0; i < k; ++i) samples.push_back(replay[idx[i]]);
      }
      if (replay_on)
        for (const auto& s : pending_ppo) {
          replay.push_back(s);
          if (static_cast<int>(replay.size()) > cfg.replay_capacity) replay.pop_front();
        }
      ppo_update(params, old_params, samples, cfg.ppo, ppo_rng);
      old_params = params;
      ++result.ppo_updates;
      pending_ppo.clear();
    }

    stalled = scores.empty() ? stalled + 1 : 0;
    if (stalled >= cfg.max_stalled_rounds) {
      result.stalled = true;
      break;
    }
  }

  for (const auto& [smiles, s] : cache) result.ranked.push_back({smiles, s});
  std::stable_sort(result.ranked.begin(), result.ranked.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });
  std::vector<double> scores;
  for (const auto& h : result.history) scores.push_back(h.score);
  result.auc_top10 = auc_top10(scores, static_cast<std::size_t>(std::max<long>(limit, 1)));
  return result;
}

void write_history_jsonl(std::ostream& out, std::span<const HistoryEntry> history) {
  for (const auto& h : history) {
    nlohmann::json j{{"call", h.call}, {"smiles", h.smiles}, {"score", h.score}, {"source", h.source}};
    out << j.dump() << '\n';
  }
}

}  // namespace fragflow
