#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "fragflow/descriptors.hpp"
#include "fragflow/fingerprint.hpp"
#include "fragflow/molgraph.hpp"

namespace fragflow {

class OracleError : public std::runtime_error {
 public:
  enum class Kind { MissingFrequencyTable, Timeout, ProtocolViolation, ChildExited, RemoteError, SpawnFailed, BadSpec };
  OracleError(Kind kind, const std::string& detail, std::string raw = {})
      : std::runtime_error(detail), kind_(kind), raw_(std::move(raw)) {}
  Kind kind() const { return kind_; }
  /// Offending line from the scorer process, if any.
  const std::string& raw() const { return raw_; }

 private:
  Kind kind_;
  std::string raw_;
};

const char* to_string(OracleError::Kind kind);

/// Counts of bond-centred environments (the two radius-1 atom environments
/// plus the bond order) over a reference corpus.
class FrequencyTable {
 public:
  void add(const MolGraph& g);
  std::uint64_t count(std::uint64_t env) const;
  std::size_t molecules() const { return molecules_; }
  std::size_t size() const { return counts_.size(); }

  void save(const std::string& path) const;
  static FrequencyTable load(const std::string& path);

 private:
  std::unordered_map<std::uint64_t, std::uint64_t> counts_;
  std::size_t molecules_ = 0;
};

std::vector<std::uint64_t> bond_environments(const MolGraph& g);

/// Geometric mean of Gaussian desirabilities (floored at 0.01):
/// MW 300 +- 100, rotatable bonds 3 +- 3, HBD 1 +- 2, HBA 4 +- 3,
/// aromatic rings 1.5 +- 1.5. Not the published QED.
double surrogate_qed(const DescriptorSet& d);

/// clamp(1 + 0.02 heavy + 0.3 rings + 6 mean_rarity, 1, 10) with
/// rarity = 1 / (1 + corpus count) per bond environment. Not the published
/// SA score. Throws MissingFrequencyTable when `table` is null.
double surrogate_sa(const MolGraph& g, const FrequencyTable* table);

/// Share of carbon atom tokens among all tokens of the canonical SMILES
/// (bracket atoms, Cl, Br and %nn labels are single tokens); 0 for
/// unparseable input.
double carbon_fraction(const std::string& smiles);
/// Tanimoto of radius-2, 2048-bit fingerprints; 0 for unparseable input.
double similarity_to_target(const std::string& smiles, const std::string& target);
/// exp(-(n - target)^2 / (2 sigma^2)) over heavy-atom count n.
double length_gaussian(const std::string& smiles, double target, double sigma);

/// Batch scorer of SMILES strings. Per-molecule failures score 0.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual std::string name() const = 0;
  virtual std::vector<double> score(std::span<const std::string> smiles) = 0;
};

/// Wraps a pure per-molecule function.
class FunctionOracle : public Oracle {
 public:
  using Fn = std::function<double(const std::string&)>;
  FunctionOracle(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
  std::string name() const override { return name_; }
  std::vector<double> score(std::span<const std::string> smiles) override;

 private:
  std::string name_;
  Fn fn_;
};

/// QED and SA used by the de novo quality metric.
class PropertyScorer {
 public:
  virtual ~PropertyScorer() = default;
  virtual std::string name() const = 0;
  /// (qed, sa) for each valid canonical SMILES.
  virtual std::vector<std::pair<double, double>> qed_sa(std::span<const std::string> smiles) = 0;
};

class SurrogateProperties : public PropertyScorer {
 public:
  explicit SurrogateProperties(const FrequencyTable* table) : table_(table) {}
  std::string name() const override { return "surrogate"; }
  std::vector<std::pair<double, double>> qed_sa(std::span<const std::string> smiles) override;

 private:
  const FrequencyTable* table_;
};

/// Builds an oracle from a spec string:
///   carbon_fraction | similarity:<smiles> | length_gaussian:<n>:<sigma> |
///   qed | sa | external:<command line>
/// `table` is needed by `sa`.
std::unique_ptr<Oracle> make_oracle(const std::string& spec, const FrequencyTable* table = nullptr);

}  // namespace fragflow
