#include "fragflow/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fragflow/external_oracle.hpp"
#include "fragflow/smiles.hpp"

namespace fragflow {

const char* to_string(OracleError::Kind kind) {
  switch (kind) {
    case OracleError::Kind::MissingFrequencyTable: return "MissingFrequencyTable";
    case OracleError::Kind::Timeout: return "Timeout";
    case OracleError::Kind::ProtocolViolation: return "ProtocolViolation";
    case OracleError::Kind::ChildExited: return "ChildExited";
    case OracleError::Kind::RemoteError: return "RemoteError";
    case OracleError::Kind::SpawnFailed: return "SpawnFailed";
    case OracleError::Kind::BadSpec: return "BadSpec";
  }
  return "Unknown";
}

std::vector<std::uint64_t> bond_environments(const MolGraph& g) {
  const auto layers = morgan_environments(g, 1);
  std::vector<std::uint64_t> envs;
  for (const auto& b : g.bonds()) {
    std::uint64_t x = layers[1][b.a], y = layers[1][b.b];
    if (x > y) std::swap(x, y);
    envs.push_back(hash_combine(hash_combine(hash_mix(x), y), static_cast<std::uint64_t>(b.order)));
  }
  return envs;
}

void FrequencyTable::add(const MolGraph& g) {
  for (auto env : bond_environments(g)) ++counts_[env];
  ++molecules_;
}

std::uint64_t FrequencyTable::count(std::uint64_t env) const {
  auto it = counts_.find(env);
  return it == counts_.end() ? 0 : it->second;
}

void FrequencyTable::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write frequency table " + path);
  out << "molecules " << molecules_ << '\n';
  std::vector<std::pair<std::uint64_t, std::uint64_t>> rows(counts_.begin(), counts_.end());
  std::sort(rows.begin(), rows.end());
  for (const auto& [env, c] : rows) out << env << ' ' << c << '\n';
}

FrequencyTable FrequencyTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw OracleError(OracleError::Kind::MissingFrequencyTable, "cannot read frequency table " + path);
  FrequencyTable table;
  std::string word;
  if (!(in >> word >> table.molecules_) || word != "molecules")
    throw OracleError(OracleError::Kind::MissingFrequencyTable, "malformed frequency table " + path);
  std::uint64_t env = 0, c = 0;
  while (in >> env >> c) table.counts_[env] = c;
  return table;
}

namespace {

double desirability(double x, double mean, double sigma) {
  return std::max(0.01, std::exp(-(x - mean) * (x - mean) / (2.0 * sigma * sigma)));
}

}  // namespace

double surrogate_qed(const DescriptorSet& d) {
  const double terms[] = {
      desirability(d.molecular_weight, 300.0, 100.0), desirability(d.rotatable_bonds, 3.0, 3.0),
      desirability(d.hbond_donors, 1.0, 2.0),          desirability(d.hbond_acceptors, 4.0, 3.0),
      desirability(d.aromatic_rings, 1.5, 1.5),
  };
  double log_sum = 0.0;
  for (double t : terms) log_sum += std::log(t);
  return std::clamp(std::exp(log_sum / 5.0), 0.0, 1.0);
}

double surrogate_sa(const MolGraph& g, const FrequencyTable* table) {
  if (table == nullptr) throw OracleError(OracleError::Kind::MissingFrequencyTable, "SA surrogate needs a frequency table");
  const DescriptorSet d = descriptors(g);
  const auto envs = bond_environments(g);
  double rarity = 0.0;
  for (auto env : envs) rarity += 1.0 / (1.0 + static_cast<double>(table->count(env)));
  if (!envs.empty()) rarity /= static_cast<double>(envs.size());
  return std::clamp(1.0 + 0.02 * d.heavy_atoms + 0.3 * d.rings + 6.0 * rarity, 1.0, 10.0);
}

namespace {

std::optional<MolGraph> try_parse(const std::string& smiles) {
  try {
    MolGraph g = parse_smiles(smiles);
    if (!is_valid(g)) return std::nullopt;
    return g;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

double carbon_fraction(const std::string& smiles) {
  const auto g = try_parse(smiles);
  if (!g) return 0.0;
  const std::string text = write_smiles(*g);
  int tokens = 0, carbon = 0;
  for (std::size_t i = 0; i < text.size(); ++tokens) {
    const char c = text[i];
    if (c == '[') {
      const std::size_t end = text.find(']', i);
      const char e = text[i + 1];
      carbon += (e == 'C' && text[i + 2] != 'l') || e == 'c';
      i = end + 1;
    } else if (c == '%') {
      i += 3;
    } else if ((c == 'C' && i + 1 < text.size() && text[i + 1] == 'l') || (c == 'B' && i + 1 < text.size() && text[i + 1] == 'r')) {
      i += 2;
    } else {
      carbon += c == 'C' || c == 'c';
      ++i;
    }
  }
  return tokens ? static_cast<double>(carbon) / tokens : 0.0;
}

double similarity_to_target(const std::string& smiles, const std::string& target) {
  const auto g = try_parse(smiles);
  const auto t = try_parse(target);
  if (!g || !t) return 0.0;
  return tanimoto(morgan_fingerprint(*g), morgan_fingerprint(*t));
}

double length_gaussian(const std::string& smiles, double target, double sigma) {
  const auto g = try_parse(smiles);
  if (!g) return 0.0;
  const double n = descriptors(*g).heavy_atoms;
  return std::exp(-(n - target) * (n - target) / (2.0 * sigma * sigma));
}

std::vector<double> FunctionOracle::score(std::span<const std::string> smiles) {
  std::vector<double> out;
  out.reserve(smiles.size());
  for (const auto& s : smiles) out.push_back(fn_(s));
  return out;
}

std::vector<std::pair<double, double>> SurrogateProperties::qed_sa(std::span<const std::string> smiles) {
  std::vector<std::pair<double, double>> out;
  for (const auto& s : smiles) {
    const MolGraph g = parse_smiles(s);
    out.emplace_back(surrogate_qed(descriptors(g)), surrogate_sa(g, table_));
  }
  return out;
}

std::unique_ptr<Oracle> make_oracle(const std::string& spec, const FrequencyTable* table) {
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (head == "carbon_fraction") return std::make_unique<FunctionOracle>("carbon_fraction", carbon_fraction);
  if (head == "similarity") {
    if (rest.empty()) throw OracleError(OracleError::Kind::BadSpec, "similarity oracle needs a target SMILES");
    canonical_smiles(rest);  // fail early on a bad target
    return std::make_unique<FunctionOracle>("similarity:" + rest, [rest](const std::string& s) { return similarity_to_target(s, rest); });
  }
  if (head == "length_gaussian") {
    double target = 0.0, sigma = 0.0;
    char sep = 0;
    std::istringstream in(rest);
    if (!(in >> target >> sep >> sigma) || sep != ':' || !(sigma > 0.0))
      throw OracleError(OracleError::Kind::BadSpec, "expected length_gaussian:<n>:<sigma>");
    return std::make_unique<FunctionOracle>(spec, [target, sigma](const std::string& s) { return length_gaussian(s, target, sigma); });
  }
  if (head == "qed")
    return std::make_unique<FunctionOracle>("surrogate_qed", [](const std::string& s) {
      const auto g = try_parse(s);
      return g ? surrogate_qed(descriptors(*g)) : 0.0;
    });
  if (head == "sa") {
    if (table == nullptr) throw OracleError(OracleError::Kind::MissingFrequencyTable, "sa oracle needs a frequency table");
    // Lower SA is better; the oracle reports (10 - SA) / 9 so that it maximizes into [0, 1].
    return std::make_unique<FunctionOracle>("surrogate_sa", [table](const std::string& s) {
      const auto g = try_parse(s);
      return g ? (10.0 - surrogate_sa(*g, table)) / 9.0 : 0.0;
    });
  }
  if (head == "external") {
    if (rest.empty()) throw OracleError(OracleError::Kind::BadSpec, "external oracle needs a command line");
    return std::make_unique<ExternalOracle>(rest);
  }
  throw OracleError(OracleError::Kind::BadSpec, "unknown oracle '" + spec + "'");
}

}  // namespace fragflow
