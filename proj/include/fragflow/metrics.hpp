#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fragflow/fingerprint.hpp"
#include "fragflow/oracle.hpp"
#include "fragflow/sampler.hpp"

namespace fragflow {

struct EvalReport {
  double validity = 0.0;
  double uniqueness = 0.0;
  double diversity = 0.0;
  double quality = 0.0;
  int n_samples = 0;
  int n_valid = 0;
  int n_unique = 0;
  std::string oracle;  // which property scorer produced `quality`
};

struct EvalOptions {
  int diversity_cap = 1000;
  std::uint64_t seed = 0;
  double qed_threshold = 0.6;
  double sa_threshold = 4.0;
};

/// Fragment notation -> valid molecule, or nullopt.
std::optional<MolGraph> decode_molecule(const std::string& notation);

/// Mean of 1 - tanimoto over unordered pairs; 0 with fewer than two.
double mean_pairwise_distance(std::span<const Fingerprint> fps);

/// Samples are fragment notation strings.
EvalReport evaluate(std::span<const std::string> samples, PropertyScorer& scorer, const EvalOptions& options = {});

/// Mean of the best min(10, k) scores among the first k, for k = 1..n.
std::vector<double> running_top10(std::span<const double> scores);

/// Per-call average of running_top10 over calls 1..budget. Calls beyond the
/// history repeat its last value; budget 0 means the history length.
double auc_top10(std::span<const double> scores, std::size_t budget = 0);

struct ScanRow {
  double T0 = 1.0;
  double r = 0.0;
  double h = 0.01;
  EvalReport report;
  std::uint64_t seed = 0;
};

/// One EvalReport per (h, T0, r). Every grid point samples with the same
/// root seed so rows are paired.
std::vector<ScanRow> quality_diversity_scan(const Predictor& model, const Vocab& vocab,
                                            std::span<const std::pair<double, double>> grid, std::span<const double> steps,
                                            const SampleConfig& base, int n_samples, std::uint64_t seed, PropertyScorer& scorer);

/// Decoded samples of `count` trajectories with root seed `seed`.
std::vector<std::string> sample_texts(const Predictor& model, const Vocab& vocab, const SampleConfig& cfg, int count,
                                      std::uint64_t seed);

/// CSV columns: T0,r,h,validity,uniqueness,diversity,quality,n_samples,seed.
void write_scan_csv(std::ostream& out, std::span<const ScanRow> rows);

}  // namespace fragflow
