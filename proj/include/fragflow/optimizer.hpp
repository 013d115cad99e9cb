#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fragflow/fingerprint.hpp"
#include "fragflow/fragments.hpp"
#include "fragflow/oracle.hpp"
#include "fragflow/sampler.hpp"
#include "fragflow/training.hpp"

namespace fragflow {

class OptimizerError : public std::runtime_error {
 public:
  enum class Kind { PopulationTooSmall, UnknownArm, BadConfig };
  OptimizerError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// ---- population -----------------------------------------------------------

struct Scored {
  std::string smiles;  // canonical
  double score = 0.0;
};

struct PopEntry {
  std::string smiles;
  double score = 0.0;
  Fingerprint fp;
};

/// High scorers kept pairwise dissimilar: Tanimoto distance >= min_distance
/// between every two entries, sorted by score descending.
class Population {
 public:
  explicit Population(int max_size = 100, double min_distance = 0.7) : max_size_(max_size), min_distance_(min_distance) {}

  /// Greedy rebuild from the union of entries and candidates in descending
  /// score order. Unparseable candidates are ignored.
  void update(std::span<const Scored> candidates);

  const std::vector<PopEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  int max_size() const { return max_size_; }
  double min_distance() const { return min_distance_; }
  bool contains(const std::string& smiles) const;

  /// Smallest pairwise distance, 1 with fewer than two entries.
  double min_pairwise_distance() const;

 private:
  int max_size_;
  double min_distance_;
  std::vector<PopEntry> entries_;
};

/// First-draw probabilities 1/(rank + kappa M), rank from 1, normalized.
std::vector<double> rank_probabilities(std::size_t size, double kappa);

/// Two distinct entry indices drawn without replacement with rank weights.
std::pair<int, int> rank_sample_parents(const Population& pop, double kappa, Rng& rng);

// ---- mutation -------------------------------------------------------------

enum class MutationKind { ElementSwap, BondOrder, AppendAtom, DeleteAtom };

/// One random edit, re-validated; up to 10 attempts, else a copy of `mol`.
MolGraph mutate(const MolGraph& mol, Rng& rng);

/// A single attempt of the given edit; nullopt when it cannot be applied or
/// the result is invalid.
std::optional<MolGraph> try_mutation(const MolGraph& mol, MutationKind kind, Rng& rng);

// ---- PPO ------------------------------------------------------------------

struct PPOConfig {
  double clip = 0.2;
  int epochs = 10;
  double lr = 1e-4;
  int timesteps = 50;
  double adv_eps = 1e-8;
  int cadence = 100;
  double c_neg = 1.0;  // scale on negative advantages
  double beta = 0.0;   // KL penalty against the old policy
  double t_max = 0.999;
};

void validate(const PPOConfig& cfg);

/// Perturbed states of x1 with t ~ U(0,1), clamped to t_max.
std::vector<TrainExample> perturbations(const TokenSeq& x1, int vocab, int timesteps, double t_max, Rng& rng);

/// Mean over the states of w(t) sum over noised positions (x_t != x1) of
/// log p(x1_i | x_t, t).
double ppo_logprob(const Predictor& model, std::span<const TrainExample> states);

/// Same estimate drawing `timesteps` fresh states.
double ppo_logprob(const Predictor& model, const TokenSeq& x1, int timesteps, Rng& rng, double t_max = 0.999);

/// ppo_logprob for the transformer; adds scale * d(estimate)/d(params) to grad.
double ppo_logprob_grad(const DenoiserParams<double>& params, std::span<const TrainExample> states, double scale,
                        DenoiserParams<double>& grad);

/// (r - mean) / (std + eps) with the population std; all zeros when every
/// reward is equal.
std::vector<double> normalize_advantages(std::span<const double> rewards, double eps);

struct PPOSample {
  TokenSeq x1;
  double reward = 0.0;
};

/// Frozen inputs of one update cycle.
struct PPOBatch {
  std::vector<std::vector<TrainExample>> states;
  std::vector<double> advantages;
  std::vector<double> old_logprobs;
};

PPOBatch make_ppo_batch(const DenoiserParams<double>& old_params, std::span<const PPOSample> samples, const PPOConfig& cfg,
                        Rng& rng);

/// Clipped surrogate averaged over sequences minus beta KL. When `grad` is
/// given it receives the gradient of the objective (reset first).
double ppo_objective(const DenoiserParams<double>& params, const PPOBatch& batch, const PPOConfig& cfg,
                     DenoiserParams<double>* grad = nullptr);

struct PPOReport {
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int steps = 0;
};

/// cfg.epochs ascent steps of a fresh AdamW (no weight decay) on the
/// surrogate. Throws DenoiserError(DivergenceDetected) on a non-finite value.
PPOReport ppo_update(DenoiserParams<double>& params, const DenoiserParams<double>& old_params,
                     std::span<const PPOSample> samples, const PPOConfig& cfg, Rng& rng);

// ---- bandit ---------------------------------------------------------------

struct BanditConfig {
  double q = 0.8;
  double eta_q = 0.05;
  double w_best = 1.0;
  double w_quant = 1.0;
  double sigma = 2.0;
  double c = 0.1;
  double tau = 0.1;
  double floor = 0.01;
};

struct BanditArm {
  int length = 0;
  long visits = 0;
  double best = 0.0;
  double quantile = 0.0;
};

class Bandit {
 public:
  /// `prior` is renormalized; empty means uniform.
  Bandit(std::vector<int> lengths, std::vector<double> prior = {}, BanditConfig config = {});
  /// Arms and prior from a length distribution's support.
  static Bandit from_length_dist(const LengthDist& dist, BanditConfig config = {});

  std::vector<double> scores() const;
  std::vector<double> probabilities() const;
  int sample(Rng& rng) const;
  void update(int length, double reward);

  const std::vector<BanditArm>& arms() const { return arms_; }
  const std::vector<double>& prior() const { return prior_; }
  const BanditConfig& config() const { return config_; }
  std::optional<int> best_length() const { return best_length_; }
  double best_reward() const { return best_reward_; }
  /// Length with the highest sampling probability.
  int modal_length() const;

 private:
  std::vector<BanditArm> arms_;
  std::vector<double> prior_;
  BanditConfig config_;
  std::optional<int> best_length_;
  double best_reward_ = 0.0;
};

// ---- optimization loop ----------------------------------------------------

/// (DS / 15)(1 - penalty), penalty = min(1, relu((0.6 - qed)/0.6) +
/// relu((sa - 4)/6) + relu((delta - sim)/delta)).
double lead_score(double docking, double qed, double sa, double sim, double delta);

struct OptimizeConfig {
  long budget = 10000;
  std::uint64_t seed = 0;
  int population_size = 100;
  double kappa = 0.001;
  double min_distance = 0.7;
  int offspring_per_round = 60;
  int mutations_per_round = 20;
  int population_every = 50;
  int replay_capacity = 300;
  double replay_fraction = 0.5;
  PPOConfig ppo;
  BanditConfig bandit;
  SampleConfig sampling;  // mode and step; length comes from the bandit
  FragRuleSet rules = FragRuleSet::defaults();
  bool use_ppo = true;
  bool use_bandit = true;
  bool use_mutation = true;
  bool use_ga = true;
  bool use_replay = true;
  /// SMILES scored before the loop to seed the population; disables replay.
  std::vector<std::string> prescreen;
  /// Rounds in a row without a new oracle call before giving up.
  int max_stalled_rounds = 50;
};

struct HistoryEntry {
  long call = 0;  // 1-based
  std::string smiles;
  double score = 0.0;
  std::string source;  // offspring, mutation or prescreen
};

struct OptimizeResult {
  std::vector<HistoryEntry> history;
  std::vector<Scored> ranked;  // every scored molecule, best first
  double auc_top10 = 0.0;
  int rounds = 0;
  int ppo_updates = 0;
  int invalid_offspring = 0;
  bool stalled = false;
};

class OracleFailure : public std::runtime_error {
 public:
  OracleFailure(long call, const std::string& what) : std::runtime_error(what), call_(call) {}
  /// 1-based index of the first call of the failing batch.
  long call() const { return call_; }

 private:
  long call_;
};

void validate(const OptimizeConfig& cfg);

/// GA + PPO + bandit loop. `lengths` gives the bandit arms and prior and the
/// length distribution when the bandit is off. `params` is fine-tuned in
/// place when PPO is on.
OptimizeResult optimize(DenoiserParams<double>& params, const Vocab& vocab, const LengthDist& lengths, Oracle& oracle,
                        const OptimizeConfig& cfg);

/// One JSON object per line: {"call","smiles","score","source"}.
void write_history_jsonl(std::ostream& out, std::span<const HistoryEntry> history);

}  // namespace fragflow
