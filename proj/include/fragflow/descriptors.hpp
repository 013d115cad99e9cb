#pragma once

#include "fragflow/molgraph.hpp"

namespace fragflow {

struct DescriptorSet {
  double molecular_weight = 0.0;  // Da, implicit hydrogens included
  int rings = 0;                  // cyclomatic number
  int aromatic_rings = 0;
  int rotatable_bonds = 0;
  int hbond_donors = 0;
  int hbond_acceptors = 0;
  int heavy_atoms = 0;
};

DescriptorSet descriptors(const MolGraph& g);

}  // namespace fragflow
