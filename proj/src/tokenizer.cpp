#include "fragflow/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

namespace fragflow {

const char* to_string(TokenizerErrorKind kind) {
  switch (kind) {
    case TokenizerErrorKind::UnrecognizedCharacter: return "UnrecognizedCharacter";
    case TokenizerErrorKind::UnknownToken: return "UnknownToken";
    case TokenizerErrorKind::EmptyCorpus: return "EmptyCorpus";
    case TokenizerErrorKind::CapacityExceeded: return "CapacityExceeded";
    case TokenizerErrorKind::BadVocabFile: return "BadVocabFile";
  }
  return "Unknown";
}

TokenizerError::TokenizerError(TokenizerErrorKind kind, const std::string& detail, std::size_t line, std::size_t offset)
    : std::runtime_error(std::string(to_string(kind)) + (line ? " at line " + std::to_string(line) : std::string()) +
                         " offset " + std::to_string(offset) + ": " + detail),
      kind_(kind),
      line_(line),
      offset_(offset) {}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty() || tokens_[0] != kPadToken)
    throw TokenizerError(TokenizerErrorKind::BadVocabFile, "vocabulary must start with the PAD token");
  for (int i = 0; i < size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second)
      throw TokenizerError(TokenizerErrorKind::BadVocabFile, "duplicate token '" + tokens_[i] + "'");
    if (i > 0) max_length_ = std::max(max_length_, tokens_[i].size());
  }
}

std::optional<int> Vocab::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocab::id(std::string_view token) const {
  if (auto i = find(token)) return *i;
  throw TokenizerError(TokenizerErrorKind::UnknownToken, "'" + std::string(token) + "' is not in the vocabulary");
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocabulary file " + path);
  for (const auto& t : tokens_) out << t << '\n';
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read vocabulary file " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  return Vocab(std::move(tokens));
}

std::vector<std::string> lex(std::string_view text, std::size_t line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto bad = [&](std::size_t at) {
    throw TokenizerError(TokenizerErrorKind::UnrecognizedCharacter,
                         std::string("cannot tokenize '") + text[at] + "'", line, at);
  };
  while (i < text.size()) {
    const char c = text[i];
    if (c == '[') {
      const std::size_t close = text.find(']', i);
      if (close == std::string_view::npos) bad(i);
      out.emplace_back(text.substr(i, close - i + 1));
      i = close + 1;
    } else if ((c == 'C' && i + 1 < text.size() && text[i + 1] == 'l') ||
               (c == 'B' && i + 1 < text.size() && text[i + 1] == 'r')) {
      out.emplace_back(text.substr(i, 2));
      i += 2;
    } else if (c == '%') {
      if (i + 2 >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i + 1])) ||
          !std::isdigit(static_cast<unsigned char>(text[i + 2])))
        bad(i);
      out.emplace_back(text.substr(i, 3));
      i += 3;
    } else if (std::string_view("BCNOPSFIbcnops-=#:()0123456789 ").find(c) != std::string_view::npos) {
      out.emplace_back(1, c);
      ++i;
    } else {
      bad(i);
    }
  }
  return out;
}

Vocab build_vocab(std::span<const std::string> corpus, const VocabOptions& options) {
  if (corpus.empty()) throw TokenizerError(TokenizerErrorKind::EmptyCorpus, "corpus has no lines");
  std::set<std::string> seen{std::string(kSeparatorToken)};
  if (options.reserve_attachments)
    for (int k = 1; k <= options.max_reserved_attachment; ++k) seen.insert("[" + std::to_string(k) + "*]");
  for (std::size_t l = 0; l < corpus.size(); ++l)
    for (auto& t : lex(corpus[l], l + 1)) seen.insert(std::move(t));
  std::vector<std::string> tokens{std::string(kPadToken)};
  tokens.insert(tokens.end(), seen.begin(), seen.end());
  return Vocab(std::move(tokens));
}

TokenSeq make_seq(std::span<const int> active, int capacity) {
  const int n = static_cast<int>(active.size());
  if (capacity == 0) capacity = n;
  if (n > capacity)
    throw TokenizerError(TokenizerErrorKind::CapacityExceeded, std::to_string(n) + " tokens exceed capacity " + std::to_string(capacity));
  TokenSeq seq;
  seq.ids.assign(capacity, kPadId);
  std::copy(active.begin(), active.end(), seq.ids.begin());
  seq.length = n;
  return seq;
}

TokenSeq encode(std::string_view text, const Vocab& vocab, int capacity) {
  std::vector<int> ids;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = std::min(vocab.max_token_length(), text.size() - i);
    std::optional<int> match;
    for (; len > 0; --len)
      if ((match = vocab.find(text.substr(i, len))) && *match != kPadId) break;
    if (len == 0 || !match)
      throw TokenizerError(TokenizerErrorKind::UnknownToken, "no vocabulary token matches '" + std::string(text.substr(i)) + "'", 0, i);
    ids.push_back(*match);
    i += len;
  }
  return make_seq(ids, capacity);
}

std::string decode(std::span<const int> ids, const Vocab& vocab) {
  std::string out;
  for (int id : ids)
    if (id != kPadId) out += vocab.token(id);
  return out;
}

std::string decode(const TokenSeq& seq, const Vocab& vocab) { return decode(seq.active(), vocab); }

LengthDist length_distribution(std::span<const std::string> corpus, const Vocab& vocab) {
  if (corpus.empty()) throw TokenizerError(TokenizerErrorKind::EmptyCorpus, "corpus has no lines");
  std::vector<int> lengths;
  for (const auto& line : corpus) {
    const int n = encode(line, vocab).length;
    if (n > 0) lengths.push_back(n);
  }
  if (lengths.empty()) throw TokenizerError(TokenizerErrorKind::EmptyCorpus, "corpus has only empty lines");
  LengthDist d;
  d.probs.assign(*std::max_element(lengths.begin(), lengths.end()) + 1, 0.0);
  for (int n : lengths) d.probs[n] += 1.0;
  for (auto& p : d.probs) p /= static_cast<double>(lengths.size());
  return d;
}

LengthDist point_mass(int n) {
  LengthDist d;
  d.probs.assign(n + 1, 0.0);
  d.probs[n] = 1.0;
  return d;
}

int sample_length(const LengthDist& d, Rng& rng) { return static_cast<int>(rng.categorical(d.probs)); }

}  // namespace fragflow
