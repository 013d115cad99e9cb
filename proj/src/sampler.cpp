#include "fragflow/sampler.hpp"

#include <cmath>
#include <limits>

namespace fragflow {

const char* to_string(SampleMode mode) { return mode == SampleMode::Velocity ? "velocity" : "refine"; }

SampleMode parse_sample_mode(std::string_view text) {
  if (text == "velocity") return SampleMode::Velocity;
  if (text == "refine") return SampleMode::Refine;
  throw SamplerError(SamplerError::Kind::BadConfig, "unknown sampling mode '" + std::string(text) + "'");
}

void ConstraintMask::apply(TokenSeq& seq) const {
  for (int i = 0; i < length() && i < seq.length; ++i)
    if (required[i] >= 0) seq.ids[i] = required[i];
}

bool ConstraintMask::satisfied_by(const TokenSeq& seq) const {
  for (int i = 0; i < length(); ++i)
    if (required[i] >= 0 && (i >= seq.length || seq.ids[i] != required[i])) return false;
  return true;
}

ConstraintMask mask_from_prompt(std::string_view prompt, const Vocab& vocab) {
  ConstraintMask mask;
  std::size_t i = 0;
  while (i < prompt.size()) {
    if (prompt[i] == '?') {
      mask.required.push_back(-1);
      ++i;
      continue;
    }
    std::size_t next = prompt.find('?', i);
    if (next == std::string_view::npos) next = prompt.size();
    const TokenSeq piece = encode(prompt.substr(i, next - i), vocab);
    mask.required.insert(mask.required.end(), piece.ids.begin(), piece.ids.end());
    i = next;
  }
  if (mask.required.empty()) throw SamplerError(SamplerError::Kind::BadMask, "empty prompt");
  return mask;
}

void validate(const SampleConfig& cfg) {
  if (!(cfg.h > 0.0) || !std::isfinite(cfg.h)) throw SamplerError(SamplerError::Kind::BadConfig, "step size h must be > 0");
  if (!(cfg.t_start >= 0.0 && cfg.t_start < 1.0)) throw SamplerError(SamplerError::Kind::BadConfig, "t_start must lie in [0, 1)");
  if (cfg.h > 1.0 - cfg.t_start + 1e-12) throw SamplerError(SamplerError::Kind::BadConfig, "h exceeds 1 - t_start");
  if (!(cfg.T0 >= 0.0) || !std::isfinite(cfg.T0)) throw SamplerError(SamplerError::Kind::BadConfig, "T0 must be finite and >= 0");
  if (!(cfg.r >= 0.0) || !std::isfinite(cfg.r)) throw SamplerError(SamplerError::Kind::BadConfig, "r must be finite and >= 0");
  if (cfg.length < 0) throw SamplerError(SamplerError::Kind::BadConfig, "length must be >= 0");
}

long TrajectoryStats::total_changes() const {
  long total = 0;
  for (const auto& s : steps) total += s.changes;
  return total;
}

double anneal_temperature(double T0, double t) { return 1.0 + (T0 - 1.0) * (1.0 - t); }

Eigen::VectorXd velocity_kernel(const Eigen::VectorXd& p, int current, double t, double h) {
  const double a = h / (1.0 - t);
  Eigen::VectorXd row = a * p;
  row(current) += 1.0 - a;
  return row;
}

Eigen::MatrixXd sampling_probs(const Predictor& model, std::span<const int> xt, double t) {
  Eigen::MatrixXd probs = model.log_probs(xt, t).array().exp();
  probs.col(kPadId).setZero();
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const double s = probs.row(i).sum();
    if (s > 0.0) probs.row(i) /= s;
    else probs.row(i).tail(probs.cols() - 1).setConstant(1.0 / static_cast<double>(probs.cols() - 1));
  }
  return probs;
}

namespace {

double mean_confidence(const Eigen::MatrixXd& probs, const TokenSeq& xt) {
  if (xt.length == 0) return 0.0;
  double total = 0.0;
  for (int i = 0; i < xt.length; ++i) total += probs(i, xt.ids[i]);
  return total / xt.length;
}

std::size_t draw_row(const Eigen::MatrixXd& probs, int i, Rng& rng) {
  const Eigen::VectorXd row = probs.row(i).transpose();
  return rng.categorical(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
}

}  // namespace

TokenSeq velocity_step(const Predictor& model, const TokenSeq& xt, double t, double h, Rng& rng, bool clamp, StepStats* stats) {
  if (h > 1.0 - t + 1e-12) {
    if (!clamp) throw SamplerError(SamplerError::Kind::StepTooLarge, "h = " + std::to_string(h) + " exceeds 1 - t");
    h = 1.0 - t;
  }
  h = std::min(h, 1.0 - t);
  const Eigen::MatrixXd probs = sampling_probs(model, xt.active(), t);
  const double a = h / (1.0 - t);
  TokenSeq next = xt;
  for (int i = 0; i < xt.length; ++i)
    if (rng.uniform() < a) next.ids[i] = static_cast<int>(draw_row(probs, i, rng));
  if (stats) {
    stats->t = t;
    stats->mean_confidence = mean_confidence(probs, xt);
  }
  return next;
}

TokenSeq refine_step(const Predictor& model, const TokenSeq& xt, double t, const SampleConfig& cfg, Rng& rng, StepStats* stats) {
  Eigen::MatrixXd logp = model.log_probs(xt.active(), t);
  logp.col(kPadId).setConstant(-std::numeric_limits<double>::infinity());
  const double temperature = anneal_temperature(cfg.T0, t);
  const double noise = cfg.r * (1.0 - t);
  TokenSeq next = xt;
  Eigen::VectorXd z(logp.cols());
  for (int i = 0; i < xt.length; ++i) {
    if (temperature <= 1e-12) {
      Eigen::Index best = 0;
      logp.row(i).maxCoeff(&best);
      next.ids[i] = static_cast<int>(best);
      continue;
    }
    for (Eigen::Index v = 0; v < z.size(); ++v) {
      const double g = noise > 0.0 ? noise * rng.gumbel() : 0.0;
      z(v) = std::isfinite(logp(i, v)) ? logp(i, v) / temperature + g : -std::numeric_limits<double>::infinity();
    }
    const double m = z.maxCoeff();
    Eigen::VectorXd w = (z.array() - m).exp();
    next.ids[i] = static_cast<int>(rng.categorical(std::span<const double>(w.data(), static_cast<std::size_t>(w.size()))));
  }
  if (stats) {
    stats->t = t;
    double total = 0.0;
    for (int i = 0; i < xt.length; ++i) total += std::exp(logp(i, xt.ids[i]));
    stats->mean_confidence = xt.length ? total / xt.length : 0.0;
  }
  return next;
}

SampleResult generate(const Predictor& model, const SampleConfig& cfg, Rng& rng, const TokenSeq* init, const TrajectoryObserver& observer) {
  validate(cfg);
  const int vocab = model.vocab_size();
  TokenSeq x;
  if (init != nullptr) {
    x = *init;
  } else {
    int n = cfg.length;
    if (n == 0 && cfg.mask) n = cfg.mask->length();
    if (n == 0 && cfg.length_dist) n = sample_length(*cfg.length_dist, rng);
    if (n <= 0) throw SamplerError(SamplerError::Kind::BadConfig, "no sequence length given");
    const int capacity = std::max(cfg.capacity, n);
    std::vector<int> ids(n);
    for (auto& id : ids) id = static_cast<int>(rng.uniform_int(1, vocab - 1));
    x = make_seq(ids, capacity);
  }
  if (cfg.mask) {
    if (cfg.mask->length() > x.length) throw SamplerError(SamplerError::Kind::BadMask, "mask is longer than the sequence");
    for (int id : cfg.mask->required)
      if (id >= vocab) throw SamplerError(SamplerError::Kind::BadMask, "mask token outside the vocabulary");
    cfg.mask->apply(x);
  }
  if (observer) observer(0, cfg.t_start, x);

  SampleResult result;
  const int num_steps = static_cast<int>(std::ceil((1.0 - cfg.t_start) / cfg.h - 1e-9));
  for (int k = 0; k < num_steps; ++k) {
    const double t = cfg.t_start + k * cfg.h;
    const double h = std::min(cfg.h, 1.0 - t);
    StepStats s;
    s.step = k + 1;
    TokenSeq next;
    if (cfg.mode == SampleMode::Velocity) {
      if (cfg.check_kernel) {
        const Eigen::MatrixXd probs = sampling_probs(model, x.active(), t);
        for (int i = 0; i < x.length; ++i) {
          const Eigen::VectorXd row = velocity_kernel(probs.row(i).transpose(), x.ids[i], t, h);
          if (row.minCoeff() < -1e-12 || std::abs(row.sum() - 1.0) > 1e-9)
            throw SamplerError(SamplerError::Kind::StepTooLarge, "velocity kernel row is not a distribution");
        }
      }
      next = velocity_step(model, x, t, h, rng, true, &s);
    } else {
      next = refine_step(model, x, t, cfg, rng, &s);
    }
    if (cfg.mask) cfg.mask->apply(next);
    for (int i = 0; i < x.length; ++i) s.changes += next.ids[i] != x.ids[i];
    x = std::move(next);
    result.stats.steps.push_back(s);
    if (observer) observer(k + 1, std::min(1.0, t + h), x);
  }
  result.seq = std::move(x);
  return result;
}

std::vector<SampleResult> generate_many(const Predictor& model, const SampleConfig& cfg, const Rng& rng, int count) {
  std::vector<SampleResult> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Rng local = rng.fork(static_cast<std::uint64_t>(i));
    out.push_back(generate(model, cfg, local));
  }
  return out;
}

void write_stats_csv(std::ostream& out, const TrajectoryStats& stats, bool header) {
  if (header) out << "step,t,changes,mean_confidence\n";
  for (const auto& s : stats.steps) out << s.step << ',' << s.t << ',' << s.changes << ',' << s.mean_confidence << '\n';
}

}  // namespace fragflow
