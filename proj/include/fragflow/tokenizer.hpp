#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fragflow/rng.hpp"

namespace fragflow {

inline constexpr int kPadId = 0;
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kSeparatorToken = " ";

enum class TokenizerErrorKind { UnrecognizedCharacter, UnknownToken, EmptyCorpus, CapacityExceeded, BadVocabFile };

const char* to_string(TokenizerErrorKind kind);

class TokenizerError : public std::runtime_error {
 public:
  TokenizerError(TokenizerErrorKind kind, const std::string& detail, std::size_t line = 0, std::size_t offset = 0);
  TokenizerErrorKind kind() const { return kind_; }
  std::size_t line() const { return line_; }    // 1-based corpus line, 0 if n/a
  std::size_t offset() const { return offset_; }

 private:
  TokenizerErrorKind kind_;
  std::size_t line_;
  std::size_t offset_;
};

struct VocabOptions {
  /// Always include [1*]..[max_reserved_attachment*] so that crossover
  /// products encode even when a label never occurs in the corpus.
  bool reserve_attachments = true;
  int max_reserved_attachment = 9;
};

class Vocab {
 public:
  /// `tokens[0]` must be the PAD token.
  explicit Vocab(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const { return tokens_.at(id); }
  std::optional<int> find(std::string_view token) const;
  int id(std::string_view token) const;
  int separator_id() const { return id(kSeparatorToken); }
  std::size_t max_token_length() const { return max_length_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// One token per line, line number = id. The separator is stored as an
  /// empty line would be ambiguous, so space is written literally.
  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> index_;
  std::size_t max_length_ = 0;
};

/// Atomic-level lexer: bracket atoms, Cl/Br, organic and aromatic atom
/// letters, bond symbols, branches, ring digits and %nn, and the fragment
/// separator are single tokens.
std::vector<std::string> lex(std::string_view text, std::size_t line = 0);

Vocab build_vocab(std::span<const std::string> corpus, const VocabOptions& options = {});

struct TokenSeq {
  std::vector<int> ids;  // capacity entries, PAD after `length`
  int length = 0;

  int capacity() const { return static_cast<int>(ids.size()); }
  std::span<const int> active() const { return std::span<const int>(ids).first(length); }
  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

TokenSeq make_seq(std::span<const int> active, int capacity = 0);

/// Greedy longest-match tokenization against `vocab`. With capacity 0 the
/// sequence is exactly as long as the text.
TokenSeq encode(std::string_view text, const Vocab& vocab, int capacity = 0);
std::string decode(std::span<const int> ids, const Vocab& vocab);
std::string decode(const TokenSeq& seq, const Vocab& vocab);

struct LengthDist {
  std::vector<double> probs;  // probs[n] = P(length n); probs[0] = 0

  int max_length() const { return static_cast<int>(probs.size()) - 1; }
};

LengthDist length_distribution(std::span<const std::string> corpus, const Vocab& vocab);
LengthDist point_mass(int n);
int sample_length(const LengthDist& d, Rng& rng);

}  // namespace fragflow
