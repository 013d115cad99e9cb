#include "fragflow/elements.hpp"

#include <array>

namespace fragflow {
namespace {

constexpr std::array<ElementInfo, 14> kElements{{
    {0, "*", 0.0, 0, 0, false, false},
    {1, "H", 1.008, 1, 1, false, false},
    {5, "B", 10.81, 13, 2, true, true},
    {6, "C", 12.011, 14, 2, true, true},
    {7, "N", 14.007, 15, 2, true, true},
    {8, "O", 15.999, 16, 2, true, true},
    {9, "F", 18.998, 17, 2, true, false},
    {14, "Si", 28.085, 14, 3, false, false},
    {15, "P", 30.974, 15, 3, true, true},
    {16, "S", 32.06, 16, 3, true, true},
    {17, "Cl", 35.45, 17, 3, true, false},
    {34, "Se", 78.971, 16, 4, false, true},
    {35, "Br", 79.904, 17, 4, true, false},
    {53, "I", 126.904, 17, 5, true, false},
}};

constexpr std::array<int, 1> kV0{0};
constexpr std::array<int, 1> kV1{1};
constexpr std::array<int, 1> kV2{2};
constexpr std::array<int, 1> kV3{3};
constexpr std::array<int, 1> kV4{4};
constexpr std::array<int, 2> kV35{3, 5};
constexpr std::array<int, 3> kV246{2, 4, 6};
constexpr std::array<int, 3> kDummy{1, 2, 3};

// Valences by effective group. Halogens stay monovalent in every period;
// only periods >= 3 get the expanded-octet valences for groups 15 and 16.
std::span<const int> by_group(int group, int period) {
  switch (group) {
    case 13: return kV3;
    case 14: return kV4;
    case 15: return period >= 3 ? std::span<const int>(kV35) : std::span<const int>(kV3);
    case 16: return period >= 3 ? std::span<const int>(kV246) : std::span<const int>(kV2);
    case 17: return kV1;
    case 18: return kV0;
    default: return {};
  }
}

}  // namespace

const ElementInfo* element_by_number(int atomic_number) {
  for (const auto& e : kElements)
    if (e.atomic_number == atomic_number) return &e;
  return nullptr;
}

const ElementInfo* element_by_symbol(std::string_view symbol) {
  for (const auto& e : kElements)
    if (e.symbol == symbol) return &e;
  return nullptr;
}

std::span<const int> allowed_valences(int atomic_number, int charge) {
  if (atomic_number == 0) return kDummy;
  if (atomic_number == 1) return charge == 0 ? std::span<const int>(kV1) : std::span<const int>(kV0);
  const ElementInfo* e = element_by_number(atomic_number);
  if (e == nullptr) return {};
  return by_group(e->group - charge, e->period);
}

}  // namespace fragflow
