#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fragflow/molgraph.hpp"

namespace fragflow {

class FingerprintError : public std::invalid_argument {
 public:
  enum class Kind { WidthMismatch, BadWidth, BadRadius };
  FingerprintError(Kind kind, const std::string& what) : std::invalid_argument(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct Fingerprint {
  std::vector<std::uint64_t> words;
  int nbits = 0;
  int radius = 0;

  bool test(int bit) const { return (words[bit >> 6] >> (bit & 63)) & 1U; }
  void set(int bit) { words[bit >> 6] |= std::uint64_t{1} << (bit & 63); }
  int popcount() const;
  std::vector<int> on_bits() const;
  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

Fingerprint empty_fingerprint(int nbits);

/// 64-bit finalizer used for every environment hash (splitmix64 constants).
std::uint64_t hash_mix(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value);

/// Circular (Morgan-style) fingerprint. Environment identifiers start from
/// hashed atom invariants and are updated `radius` times from the sorted
/// (bond order, neighbour identifier) lists; every identifier of every
/// iteration sets bit (id mod nbits). Only heavy atoms and attachment dummies
/// contribute environments.
Fingerprint morgan_fingerprint(const MolGraph& g, int radius = 2, int nbits = 2048);

/// Per-atom environment identifiers of iteration `r`, exposed for the
/// environment-frequency table of the SA surrogate.
std::vector<std::vector<std::uint64_t>> morgan_environments(const MolGraph& g, int radius);

/// |a AND b| / |a OR b|, 1.0 when both are empty.
double tanimoto(const Fingerprint& a, const Fingerprint& b);

}  // namespace fragflow
