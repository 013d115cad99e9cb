#pragma once

#include <optional>
#include <span>
#include <string_view>

namespace fragflow {

struct ElementInfo {
  int atomic_number;
  std::string_view symbol;
  double mass;      // standard atomic weight, Da
  int group;        // IUPAC group (1..18)
  int period;
  bool organic;     // member of the bracket-free organic subset
  bool aromatic_ok; // may be written lowercase
};

/// Look up by atomic number; nullptr when unsupported. Z = 0 is the
/// attachment dummy `*`.
const ElementInfo* element_by_number(int atomic_number);

/// Look up by symbol as written in brackets ("C", "Cl", "Se"); the lowercase
/// aromatic spellings are resolved by the parser before calling this.
const ElementInfo* element_by_symbol(std::string_view symbol);

/// Ascending list of allowed total valences for an element at a formal
/// charge, using the isoelectronic shift for charged main-group atoms
/// (N+ behaves like C, O- like F, ...). Empty when nothing is allowed.
std::span<const int> allowed_valences(int atomic_number, int charge);

}  // namespace fragflow
