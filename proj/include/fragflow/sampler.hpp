#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "fragflow/denoiser.hpp"
#include "fragflow/tokenizer.hpp"

namespace fragflow {

enum class SampleMode { Velocity, Refine };

const char* to_string(SampleMode mode);
SampleMode parse_sample_mode(std::string_view text);

class SamplerError : public std::runtime_error {
 public:
  enum class Kind { StepTooLarge, BadConfig, BadMask };
  SamplerError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Positions whose token is fixed; `required[i] < 0` marks a free position.
struct ConstraintMask {
  std::vector<int> required;

  int length() const { return static_cast<int>(required.size()); }
  bool fixed(int i) const { return i < length() && required[i] >= 0; }
  void apply(TokenSeq& seq) const;
  /// True iff every fixed position of `seq` holds its required token.
  bool satisfied_by(const TokenSeq& seq) const;
};

/// Builds a mask from prompt text where each `?` is a free position and
/// every other token is fixed; "C?? ?C" fixes positions 0, 3 and 5.
ConstraintMask mask_from_prompt(std::string_view prompt, const Vocab& vocab);

struct SampleConfig {
  SampleMode mode = SampleMode::Velocity;
  double h = 0.01;
  double t_start = 0.0;
  double T0 = 1.0;  // initial softmax temperature (refine mode)
  double r = 0.0;   // Gumbel noise scale (refine mode)
  int length = 0;   // fixed length; 0 draws from length_dist
  std::optional<LengthDist> length_dist;
  std::optional<ConstraintMask> mask;
  int capacity = 0;  // 0 = the active length
  /// Recompute and check every velocity kernel row (nonnegative, sums to 1).
  bool check_kernel = false;
};

void validate(const SampleConfig& cfg);

struct StepStats {
  int step = 0;
  double t = 0.0;            // time of the state the prediction was made from
  int changes = 0;           // positions that differ after the step
  double mean_confidence = 0.0;  // mean p(x1_i = x_t_i | x_t)
};

struct TrajectoryStats {
  std::vector<StepStats> steps;
  long total_changes() const;
};

struct SampleResult {
  TokenSeq seq;
  TrajectoryStats stats;
};

/// Called with the initial state (step 0) and after every step, once the
/// mask has been re-applied.
using TrajectoryObserver = std::function<void(int step, double t, const TokenSeq& state)>;

/// T(t) = 1 + (T0 - 1)(1 - t).
double anneal_temperature(double T0, double t);

/// One Markov kernel row: (1 - a) delta_current + a p with a = h / (1 - t).
Eigen::VectorXd velocity_kernel(const Eigen::VectorXd& p, int current, double t, double h);

/// Per-position probabilities with PAD removed and rows renormalized.
Eigen::MatrixXd sampling_probs(const Predictor& model, std::span<const int> xt, double t);

/// x_{t+h}: each position resampled from p(x1 | x_t) with probability
/// h / (1 - t), otherwise kept. With `clamp` the step is shortened to 1 - t;
/// without it a longer step throws StepTooLarge.
TokenSeq velocity_step(const Predictor& model, const TokenSeq& xt, double t, double h, Rng& rng, bool clamp = true,
                       StepStats* stats = nullptr);

/// x_{t+h}: every position drawn from softmax(log p / T(t) + r (1 - t) g),
/// g standard Gumbel. T(t) = 0 takes the argmax of log p.
TokenSeq refine_step(const Predictor& model, const TokenSeq& xt, double t, const SampleConfig& cfg, Rng& rng,
                     StepStats* stats = nullptr);

/// Simulates the flow from t_start to 1. `init`, when given, replaces the
/// uniform initial state (the mask is still applied on top).
SampleResult generate(const Predictor& model, const SampleConfig& cfg, Rng& rng, const TokenSeq* init = nullptr,
                      const TrajectoryObserver& observer = {});

/// `count` independent trajectories; trajectory i uses rng.fork(i).
std::vector<SampleResult> generate_many(const Predictor& model, const SampleConfig& cfg, const Rng& rng, int count);

/// CSV with columns step,t,changes,mean_confidence.
void write_stats_csv(std::ostream& out, const TrajectoryStats& stats, bool header = true);

}  // namespace fragflow
