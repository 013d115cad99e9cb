#include <cctype>
#include <map>
#include <optional>
#include <string>

#include "fragflow/elements.hpp"
#include "fragflow/smiles.hpp"

namespace fragflow {

const char* to_string(SmilesErrorKind kind) {
  switch (kind) {
    case SmilesErrorKind::EmptyInput: return "EmptyInput";
    case SmilesErrorKind::NonAscii: return "NonAscii";
    case SmilesErrorKind::UnbalancedBranch: return "UnbalancedBranch";
    case SmilesErrorKind::UnclosedRing: return "UnclosedRing";
    case SmilesErrorKind::UnknownAtom: return "UnknownAtom";
    case SmilesErrorKind::ValenceOverflow: return "ValenceOverflow";
    case SmilesErrorKind::UnsupportedFeature: return "UnsupportedFeature";
    case SmilesErrorKind::MultipleComponents: return "MultipleComponents";
    case SmilesErrorKind::BadSyntax: return "BadSyntax";
  }
  return "Unknown";
}

SmilesError::SmilesError(SmilesErrorKind kind, std::size_t offset, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + " at offset " + std::to_string(offset) +
                         (detail.empty() ? "" : ": " + detail)),
      kind_(kind),
      offset_(offset) {}

namespace {

struct RingOpening {
  int atom;
  std::optional<BondOrder> order;
  std::size_t offset;
};

class Parser {
 public:
  Parser(std::string_view text, const SmilesParseOptions& options) : text_(text), options_(options) {}

  MolGraph run() {
    if (text_.empty()) fail(SmilesErrorKind::EmptyInput, 0, "");
    for (std::size_t i = 0; i < text_.size(); ++i)
      if (static_cast<unsigned char>(text_[i]) > 127) fail(SmilesErrorKind::NonAscii, i, "");

    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '(') {
        if (prev_ < 0) fail(SmilesErrorKind::BadSyntax, pos_, "branch without a preceding atom");
        if (pending_) fail(SmilesErrorKind::BadSyntax, pos_, "bond before branch");
        branches_.push_back({prev_, pos_});
        ++pos_;
      } else if (c == ')') {
        if (branches_.empty()) fail(SmilesErrorKind::UnbalancedBranch, pos_, "unmatched ')'");
        if (pending_) fail(SmilesErrorKind::BadSyntax, pos_, "dangling bond");
        prev_ = branches_.back().first;
        branches_.pop_back();
        ++pos_;
      } else if (c == '-' || c == '=' || c == '#' || c == ':') {
        if (pending_) fail(SmilesErrorKind::BadSyntax, pos_, "two bond symbols in a row");
        if (prev_ < 0) fail(SmilesErrorKind::BadSyntax, pos_, "bond without a preceding atom");
        pending_ = c == '-' ? BondOrder::Single
                   : c == '=' ? BondOrder::Double
                   : c == '#' ? BondOrder::Triple
                              : BondOrder::Aromatic;
        ++pos_;
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        ring_closure();
      } else if (c == '[') {
        add_atom(bracket_atom());
      } else if (c == '.') {
        fail(SmilesErrorKind::MultipleComponents, pos_, "disconnected components are not accepted");
      } else if (c == '/' || c == '\\' || c == '@') {
        fail(SmilesErrorKind::UnsupportedFeature, pos_, "stereochemistry is not supported");
      } else if (c == '*') {
        fail(SmilesErrorKind::UnsupportedFeature, pos_, "wildcard atom outside an attachment");
      } else if (std::isalpha(static_cast<unsigned char>(c))) {
        add_atom(organic_atom());
      } else {
        fail(SmilesErrorKind::BadSyntax, pos_, std::string("unexpected character '") + c + "'");
      }
    }

    if (!branches_.empty()) fail(SmilesErrorKind::UnbalancedBranch, text_.size(), "unclosed '('");
    if (!rings_.empty()) fail(SmilesErrorKind::UnclosedRing, rings_.begin()->second.offset, "ring bond never closed");
    if (pending_) fail(SmilesErrorKind::BadSyntax, text_.size(), "dangling bond");

    // An unmarked bond between two aromatic atoms is aromatic only when it
    // sits on a ring; biaryl links written without '-' become single.
    const RingInfo rings = ring_info(graph_);
    for (int b : implicit_aromatic_)
      if (!rings.bond_in_ring[b]) graph_.set_bond_order(b, BondOrder::Single);

    if (auto bad = infer_implicit_hydrogens(graph_))
      fail(SmilesErrorKind::ValenceOverflow, offsets_[*bad], "atom exceeds its allowed valence");
    for (int i = 0; i < static_cast<int>(graph_.num_atoms()); ++i)
      if (graph_.atom(i).bracket && !atom_valence_ok(graph_, i))
        fail(SmilesErrorKind::ValenceOverflow, offsets_[i], "bracket atom exceeds its allowed valence");

    perceive_aromaticity(graph_);
    return std::move(graph_);
  }

 private:
  [[noreturn]] void fail(SmilesErrorKind kind, std::size_t offset, const std::string& detail) {
    throw SmilesError(kind, offset, detail);
  }

  void add_atom(std::pair<Atom, std::size_t> parsed) {
    const int index = graph_.add_atom(parsed.first);
    offsets_.push_back(parsed.second);
    if (prev_ >= 0) {
      const bool both_aromatic = graph_.atom(prev_).aromatic && parsed.first.aromatic;
      const BondOrder order = pending_.value_or(both_aromatic ? BondOrder::Aromatic : BondOrder::Single);
      const int bond = graph_.add_bond(prev_, index, order);
      if (!pending_ && both_aromatic) implicit_aromatic_.push_back(bond);
    }
    pending_.reset();
    prev_ = index;
  }

  std::pair<Atom, std::size_t> organic_atom() {
    const std::size_t start = pos_;
    const char c = text_[pos_];
    Atom atom;
    if (c == 'C' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'l') {
      atom.element = 17;
      pos_ += 2;
    } else if (c == 'B' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'r') {
      atom.element = 35;
      pos_ += 2;
    } else {
      const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      const ElementInfo* e = element_by_symbol(std::string_view(&upper, 1));
      const bool lower = std::islower(static_cast<unsigned char>(c)) != 0;
      if (e == nullptr || !e->organic || (lower && !e->aromatic_ok))
        fail(SmilesErrorKind::UnknownAtom, pos_, std::string("'") + c + "' is not an organic-subset atom");
      atom.element = e->atomic_number;
      atom.aromatic = lower;
      ++pos_;
    }
    return {atom, start};
  }

  int read_number() {
    int value = 0;
    bool any = false;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      value = value * 10 + (text_[pos_] - '0');
      ++pos_;
      any = true;
      if (value > 999) fail(SmilesErrorKind::BadSyntax, pos_, "number too large");
    }
    return any ? value : -1;
  }

  std::pair<Atom, std::size_t> bracket_atom() {
    const std::size_t start = pos_;
    ++pos_;  // '['
    Atom atom;
    atom.bracket = true;
    const int label = read_number();
    if (pos_ >= text_.size()) fail(SmilesErrorKind::BadSyntax, start, "unterminated bracket atom");

    if (text_[pos_] == '*') {
      if (!options_.allow_attachments)
        fail(SmilesErrorKind::UnsupportedFeature, start, "attachment points are only valid in fragment notation");
      ++pos_;
      atom.element = 0;
      atom.attachment = label < 0 ? 0 : label;
      if (pos_ >= text_.size() || text_[pos_] != ']')
        fail(SmilesErrorKind::BadSyntax, pos_, "expected ']' after attachment");
      ++pos_;
      return {atom, start};
    }
    if (label >= 0) fail(SmilesErrorKind::UnsupportedFeature, start, "isotopes are not supported");

    // Element symbol: uppercase letter with optional lowercase, or an
    // aromatic lowercase symbol.
    std::string symbol;
    const char c = text_[pos_];
    if (std::isupper(static_cast<unsigned char>(c))) {
      symbol.push_back(c);
      ++pos_;
      if (pos_ < text_.size() && std::islower(static_cast<unsigned char>(text_[pos_]))) {
        std::string two = symbol + text_[pos_];
        if (element_by_symbol(two) != nullptr) {
          symbol = two;
          ++pos_;
        }
      }
    } else if (std::islower(static_cast<unsigned char>(c))) {
      atom.aromatic = true;
      if (c == 's' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'e') {
        symbol = "Se";
        pos_ += 2;
      } else {
        symbol.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        ++pos_;
      }
    } else {
      fail(SmilesErrorKind::UnknownAtom, pos_, "expected element symbol");
    }
    const ElementInfo* e = element_by_symbol(symbol);
    if (e == nullptr || e->atomic_number == 0 || (atom.aromatic && !e->aromatic_ok))
      fail(SmilesErrorKind::UnknownAtom, start + 1, "unsupported element '" + symbol + "'");
    atom.element = e->atomic_number;

    if (pos_ < text_.size() && text_[pos_] == '@')
      fail(SmilesErrorKind::UnsupportedFeature, pos_, "stereochemistry is not supported");
    if (pos_ < text_.size() && text_[pos_] == 'H') {
      ++pos_;
      const int h = read_number();
      atom.hydrogens = h < 0 ? 1 : h;
    }
    if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
      const char sign = text_[pos_];
      int magnitude = 0;
      while (pos_ < text_.size() && text_[pos_] == sign) {
        ++magnitude;
        ++pos_;
      }
      if (magnitude == 1) {
        const int n = read_number();
        if (n >= 0) magnitude = n;
      }
      atom.charge = sign == '+' ? magnitude : -magnitude;
    }
    if (pos_ >= text_.size() || text_[pos_] != ']')
      fail(SmilesErrorKind::BadSyntax, pos_, "expected ']'");
    ++pos_;
    return {atom, start};
  }

  void ring_closure() {
    const std::size_t start = pos_;
    int number = 0;
    if (text_[pos_] == '%') {
      if (pos_ + 2 >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2])))
        fail(SmilesErrorKind::BadSyntax, pos_, "'%' must be followed by two digits");
      number = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
      pos_ += 3;
    } else {
      number = text_[pos_] - '0';
      ++pos_;
    }
    if (prev_ < 0) fail(SmilesErrorKind::BadSyntax, start, "ring bond without a preceding atom");

    auto it = rings_.find(number);
    if (it == rings_.end()) {
      rings_[number] = {prev_, pending_, start};
      pending_.reset();
      return;
    }
    const RingOpening opening = it->second;
    rings_.erase(it);
    if (opening.order && pending_ && *opening.order != *pending_)
      fail(SmilesErrorKind::BadSyntax, start, "conflicting ring-closure bond orders");
    if (opening.atom == prev_) fail(SmilesErrorKind::BadSyntax, start, "ring closure onto the same atom");
    if (graph_.find_bond(opening.atom, prev_)) fail(SmilesErrorKind::BadSyntax, start, "duplicate ring bond");
    const bool both_aromatic = graph_.atom(opening.atom).aromatic && graph_.atom(prev_).aromatic;
    const auto explicit_order = opening.order ? opening.order : pending_;
    const BondOrder order = explicit_order.value_or(both_aromatic ? BondOrder::Aromatic : BondOrder::Single);
    graph_.add_bond(opening.atom, prev_, order);
    pending_.reset();
  }

  std::string_view text_;
  SmilesParseOptions options_;
  std::size_t pos_ = 0;
  int prev_ = -1;
  std::optional<BondOrder> pending_;
  std::vector<std::pair<int, std::size_t>> branches_;
  std::map<int, RingOpening> rings_;
  std::vector<std::size_t> offsets_;
  std::vector<int> implicit_aromatic_;
  MolGraph graph_;
};

}  // namespace

MolGraph parse_smiles(std::string_view text, const SmilesParseOptions& options) {
  return Parser(text, options).run();
}

std::string canonical_smiles(std::string_view text) { return write_smiles(parse_smiles(text)); }

}  // namespace fragflow
