#include <gtest/gtest.h>

#include <numeric>

#include "fragflow/corpus.hpp"
#include "fragflow/descriptors.hpp"
#include "fragflow/fingerprint.hpp"
#include "fragflow/smiles.hpp"

using namespace fragflow;

namespace {

SmilesErrorKind error_kind(const std::string& text, std::size_t* offset = nullptr) {
  try {
    parse_smiles(text);
  } catch (const SmilesError& e) {
    if (offset) *offset = e.offset();
    return e.kind();
  }
  ADD_FAILURE() << text << " parsed";
  return SmilesErrorKind::BadSyntax;
}

}  // namespace

TEST(Smiles, Methane) {
  const MolGraph g = parse_smiles("C");
  EXPECT_EQ(g.num_atoms(), 1u);
  EXPECT_EQ(g.num_bonds(), 0u);
  EXPECT_EQ(g.atom(0).hydrogens, 4);
  EXPECT_EQ(write_smiles(g), "C");
}

TEST(Smiles, BenzeneCounts) {
  const MolGraph g = parse_smiles("c1ccccc1");
  ASSERT_EQ(g.num_atoms(), 6u);
  ASSERT_EQ(g.num_bonds(), 6u);
  for (const auto& a : g.atoms()) {
    EXPECT_TRUE(a.aromatic);
    EXPECT_EQ(a.hydrogens, 1);
  }
  for (const auto& b : g.bonds()) EXPECT_EQ(b.order, BondOrder::Aromatic);
}

TEST(Smiles, KekuleBenzenePerceivedAromatic) {
  EXPECT_EQ(canonical_smiles("C1=CC=CC=C1"), canonical_smiles("c1ccccc1"));
}

TEST(Smiles, Errors) {
  std::size_t off = 0;
  EXPECT_EQ(error_kind("C(C", &off), SmilesErrorKind::UnbalancedBranch);
  EXPECT_EQ(off, 3u);
  EXPECT_EQ(error_kind("C1CC", &off), SmilesErrorKind::UnclosedRing);
  EXPECT_EQ(off, 1u);
  EXPECT_EQ(error_kind("CC)"), SmilesErrorKind::UnbalancedBranch);
  EXPECT_EQ(error_kind("CXC", &off), SmilesErrorKind::UnknownAtom);
  EXPECT_EQ(off, 1u);
  EXPECT_EQ(error_kind("C(C)(C)(C)(C)C"), SmilesErrorKind::ValenceOverflow);
  EXPECT_EQ(error_kind("CC.O"), SmilesErrorKind::MultipleComponents);
  EXPECT_EQ(error_kind("C/C=C/C"), SmilesErrorKind::UnsupportedFeature);
  EXPECT_EQ(error_kind("[13C]"), SmilesErrorKind::UnsupportedFeature);
  EXPECT_EQ(error_kind(""), SmilesErrorKind::EmptyInput);
}

TEST(Smiles, BracketAtomsAndCharges) {
  const MolGraph g = parse_smiles("C[N+](C)(C)C");
  ASSERT_EQ(g.num_atoms(), 5u);
  EXPECT_EQ(g.atom(1).charge, 1);
  EXPECT_EQ(g.atom(1).hydrogens, 0);
  EXPECT_TRUE(validate_valence(g));
  const MolGraph o = parse_smiles("C[O-]");
  EXPECT_EQ(o.atom(1).charge, -1);
  EXPECT_EQ(write_smiles(o), "C[O-]");
  EXPECT_EQ(parse_smiles("[NH4+]").atom(0).hydrogens, 4);
}

TEST(Smiles, RingClosureForms) {
  EXPECT_EQ(canonical_smiles("C%10CCCCC%10"), canonical_smiles("C1CCCCC1"));
  EXPECT_EQ(canonical_smiles("C=1CCCCC1"), canonical_smiles("C1CCCCC=1"));
}

TEST(Smiles, EquivalentEncodingsAgree) {
  EXPECT_EQ(canonical_smiles("OCC"), canonical_smiles("CCO"));
  EXPECT_EQ(canonical_smiles("C(C)(C)O"), canonical_smiles("CC(O)C"));
  EXPECT_EQ(canonical_smiles("c1ccncc1"), canonical_smiles("n1ccccc1"));
}

TEST(Smiles, BenzeneTwoOrderings) {
  MolGraph a, b;
  Atom c;
  c.aromatic = true;
  c.hydrogens = 1;
  for (int i = 0; i < 6; ++i) {
    a.add_atom(c);
    b.add_atom(c);
  }
  for (int i = 0; i < 6; ++i) a.add_bond(i, (i + 1) % 6, BondOrder::Aromatic);
  const int order[] = {0, 3, 1, 5, 2, 4};  // same ring visited in a scrambled order
  for (int i = 0; i < 6; ++i) b.add_bond(order[i], order[(i + 1) % 6], BondOrder::Aromatic);
  EXPECT_EQ(write_smiles(a), write_smiles(b));
}

TEST(Smiles, CanonicalStableUnderPermutation) {
  Rng rng(7);
  for (const char* s : {"CC(=O)Nc1ccc(O)cc1", "C1CCN(CC1)c1ccc(C#N)cc1", "OC(=O)C1CCOCC1", "CC(C)(C)S(=O)(=O)N"}) {
    const MolGraph g = parse_smiles(s);
    const std::string ref = write_smiles(g);
    std::vector<int> order(g.num_atoms());
    std::iota(order.begin(), order.end(), 0);
    for (int k = 0; k < 100; ++k) {
      rng.shuffle(std::span<int>(order));
      ASSERT_EQ(write_smiles(permute_atoms(g, order)), ref) << s;
    }
  }
}

TEST(Smiles, RoundTripIsomorphic) {
  CorpusOptions o;
  o.count = 500;
  o.seed = 11;
  for (const auto& s : generate_corpus(o)) {
    const MolGraph g = parse_smiles(s);
    const MolGraph back = parse_smiles(write_smiles(g));
    ASSERT_TRUE(are_isomorphic(g, back)) << s;
    ASSERT_EQ(write_smiles(back), write_smiles(g)) << s;
  }
}

TEST(Valence, Table) {
  EXPECT_TRUE(validate_valence(parse_smiles("C")));
  EXPECT_TRUE(validate_valence(parse_smiles("O=C=O")));
  EXPECT_TRUE(validate_valence(parse_smiles("CS(=O)(=O)C")));
  EXPECT_TRUE(validate_valence(parse_smiles("OP(=O)(O)O")));
  MolGraph g;
  const int c = g.add_atom(Atom{});
  for (int i = 0; i < 5; ++i) g.add_bond(c, g.add_atom(Atom{}), BondOrder::Single);
  EXPECT_FALSE(validate_valence(g));
}

TEST(Graph, StructuralInvariants) {
  MolGraph g;
  g.add_atom(Atom{});
  g.add_atom(Atom{});
  g.add_bond(0, 1, BondOrder::Single);
  EXPECT_THROW(g.add_bond(0, 1, BondOrder::Single), GraphError);
  EXPECT_THROW(g.add_bond(0, 0, BondOrder::Single), GraphError);
  EXPECT_THROW(g.add_bond(0, 5, BondOrder::Single), GraphError);
}

TEST(Fingerprint, Basics) {
  EXPECT_EQ(morgan_fingerprint(parse_smiles("C"), 0).popcount(), 1);
  const auto a = morgan_fingerprint(parse_smiles("CCO"));
  EXPECT_EQ(a, morgan_fingerprint(parse_smiles("OCC")));
  EXPECT_NE(a, morgan_fingerprint(parse_smiles("CCN")));
  EXPECT_EQ(a.nbits, 2048);
  EXPECT_DOUBLE_EQ(tanimoto(a, a), 1.0);
}

TEST(Fingerprint, Tanimoto) {
  Fingerprint a = empty_fingerprint(64), b = empty_fingerprint(64);
  EXPECT_DOUBLE_EQ(tanimoto(a, b), 1.0);
  for (int i : {1, 2, 3}) a.set(i);
  for (int i : {2, 3, 4}) b.set(i);
  EXPECT_DOUBLE_EQ(tanimoto(a, b), 0.5);
  Fingerprint c = empty_fingerprint(64);
  c.set(10);
  EXPECT_DOUBLE_EQ(tanimoto(a, c), 0.0);
  EXPECT_THROW(tanimoto(a, empty_fingerprint(128)), FingerprintError);
  EXPECT_THROW(empty_fingerprint(100), FingerprintError);
}

TEST(Fingerprint, TanimotoProperties) {
  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    Fingerprint a = empty_fingerprint(256), b = empty_fingerprint(256);
    for (int i = 0; i < 256; ++i) {
      if (rng.bernoulli(0.1)) a.set(i);
      if (rng.bernoulli(0.1)) b.set(i);
    }
    const double t = tanimoto(a, b);
    EXPECT_GE(t, 0.0);
    EXPECT_LE(t, 1.0);
    EXPECT_DOUBLE_EQ(t, tanimoto(b, a));
    EXPECT_DOUBLE_EQ(tanimoto(a, a), 1.0);
  }
}

TEST(Fingerprint, GoldenBits) {
  // Frozen output of the pinned hash; guards against accidental drift.
  const auto fp = morgan_fingerprint(parse_smiles("CCO"), 2, 2048);
  const std::vector<int> bits = fp.on_bits();
  EXPECT_EQ(static_cast<int>(bits.size()), fp.popcount());
  EXPECT_EQ(bits, (std::vector<int>{344, 378, 911, 918, 1162, 1322, 1464, 1486, 1692}));
}

TEST(Descriptors, Examples) {
  const DescriptorSet m = descriptors(parse_smiles("C"));
  EXPECT_NEAR(m.molecular_weight, 16.04, 0.01);
  EXPECT_EQ(m.heavy_atoms, 1);
  EXPECT_EQ(m.rings + m.aromatic_rings + m.rotatable_bonds + m.hbond_donors + m.hbond_acceptors, 0);
  const DescriptorSet bz = descriptors(parse_smiles("c1ccccc1"));
  EXPECT_EQ(bz.aromatic_rings, 1);
  EXPECT_EQ(bz.rotatable_bonds, 0);
  EXPECT_EQ(descriptors(parse_smiles("CCCC")).rotatable_bonds, 1);
  const DescriptorSet e = descriptors(parse_smiles("CCO"));
  EXPECT_EQ(e.hbond_donors, 1);
  EXPECT_EQ(e.hbond_acceptors, 1);
  EXPECT_NEAR(e.molecular_weight, 46.07, 0.01);
}
