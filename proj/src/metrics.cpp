#include "fragflow/metrics.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>

#include "fragflow/fragments.hpp"
#include "fragflow/smiles.hpp"

namespace fragflow {

std::optional<MolGraph> decode_molecule(const std::string& notation) {
  try {
    MolGraph g = reassemble(parse_notation(notation));
    if (!is_valid(g)) return std::nullopt;
    return g;
  } catch (const FragmentError&) {
    return std::nullopt;
  } catch (const GraphError&) {
    return std::nullopt;
  }
}

double mean_pairwise_distance(std::span<const Fingerprint> fps) {
  if (fps.size() < 2) return 0.0;
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < fps.size(); ++i)
    for (std::size_t j = i + 1; j < fps.size(); ++j) {
      total += 1.0 - tanimoto(fps[i], fps[j]);
      ++pairs;
    }
  return total / static_cast<double>(pairs);
}

EvalReport evaluate(std::span<const std::string> samples, PropertyScorer& scorer, const EvalOptions& options) {
  EvalReport report;
  report.n_samples = static_cast<int>(samples.size());
  report.oracle = scorer.name();
  if (samples.empty()) return report;

  std::vector<MolGraph> valid;
  for (const auto& s : samples)
    if (auto g = decode_molecule(s)) valid.push_back(std::move(*g));
  report.n_valid = static_cast<int>(valid.size());
  report.validity = static_cast<double>(valid.size()) / samples.size();
  if (valid.empty()) return report;

  std::set<std::string> distinct;
  for (const auto& g : valid) distinct.insert(write_smiles(g));
  report.n_unique = static_cast<int>(distinct.size());
  report.uniqueness = static_cast<double>(distinct.size()) / valid.size();

  std::vector<std::size_t> pick(valid.size());
  for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
  if (pick.size() > static_cast<std::size_t>(options.diversity_cap)) {
    Rng rng(options.seed);
    for (std::size_t i = 0; i < static_cast<std::size_t>(options.diversity_cap); ++i)
      std::swap(pick[i], pick[i + rng.index(pick.size() - i)]);
    pick.resize(options.diversity_cap);
  }
  std::vector<Fingerprint> fps;
  for (auto i : pick) fps.push_back(morgan_fingerprint(valid[i]));
  report.diversity = mean_pairwise_distance(fps);

  const std::vector<std::string> unique(distinct.begin(), distinct.end());
  const auto props = scorer.qed_sa(unique);
  int good = 0;
  for (const auto& [qed, sa] : props) good += qed >= options.qed_threshold && sa <= options.sa_threshold;
  report.quality = static_cast<double>(good) / samples.size();
  return report;
}

std::vector<double> running_top10(std::span<const double> scores) {
  std::vector<double> out;
  out.reserve(scores.size());
  std::priority_queue<double, std::vector<double>, std::greater<>> best;  // min-heap of the top 10
  double sum = 0.0;
  for (double s : scores) {
    if (best.size() < 10) {
      best.push(s);
      sum += s;
    } else if (s > best.top()) {
      sum += s - best.top();
      best.pop();
      best.push(s);
    }
    out.push_back(sum / static_cast<double>(best.size()));
  }
  return out;
}

double auc_top10(std::span<const double> scores, std::size_t budget) {
  if (scores.empty()) return 0.0;
  if (budget == 0) budget = scores.size();
  const auto curve = running_top10(scores);
  double total = 0.0;
  for (std::size_t k = 0; k < budget; ++k) total += curve[std::min(k, curve.size() - 1)];
  return total / static_cast<double>(budget);
}

std::vector<std::string> sample_texts(const Predictor& model, const Vocab& vocab, const SampleConfig& cfg, int count,
                                      std::uint64_t seed) {
  std::vector<std::string> out;
  for (const auto& r : generate_many(model, cfg, Rng(seed), count)) out.push_back(decode(r.seq, vocab));
  return out;
}

std::vector<ScanRow> quality_diversity_scan(const Predictor& model, const Vocab& vocab,
                                            std::span<const std::pair<double, double>> grid, std::span<const double> steps,
                                            const SampleConfig& base, int n_samples, std::uint64_t seed, PropertyScorer& scorer) {
  std::vector<ScanRow> rows;
  for (double h : steps)
    for (const auto& [T0, r] : grid) {
      SampleConfig cfg = base;
      cfg.mode = SampleMode::Refine;
      cfg.h = h;
      cfg.T0 = T0;
      cfg.r = r;
      const auto texts = sample_texts(model, vocab, cfg, n_samples, seed);
      EvalOptions options;
      options.seed = seed;
      rows.push_back({T0, r, h, evaluate(texts, scorer, options), seed});
    }
  return rows;
}

void write_scan_csv(std::ostream& out, std::span<const ScanRow> rows) {
  out << "T0,r,h,validity,uniqueness,diversity,quality,n_samples,seed\n";
  for (const auto& row : rows)
    out << row.T0 << ',' << row.r << ',' << row.h << ',' << row.report.validity << ',' << row.report.uniqueness << ','
        << row.report.diversity << ',' << row.report.quality << ',' << row.report.n_samples << ',' << row.seed << '\n';
}

}  // namespace fragflow
