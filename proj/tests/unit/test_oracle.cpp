#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "fragflow/corpus.hpp"
#include "fragflow/descriptors.hpp"
#include "fragflow/external_oracle.hpp"
#include "fragflow/oracle.hpp"
#include "fragflow/smiles.hpp"
#include "json.hpp"

using namespace fragflow;

namespace {

std::string fake(const std::string& args) { return std::string(FAKE_SCORER_PATH) + " " + args; }

OracleError::Kind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const OracleError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no OracleError thrown";
  return OracleError::Kind::BadSpec;
}

std::string temp_path(const std::string& name) { return testing::TempDir() + "fragflow_" + name; }

}  // namespace

// ---- surrogates ----

TEST(SurrogateQed, PinnedCurves) {
  const double methane = surrogate_qed(descriptors(parse_smiles("C")));
  EXPECT_LT(methane, 0.4);
  const double drug = surrogate_qed(descriptors(parse_smiles("CC(=O)Nc1ccc(cc1)C(=O)NCCN1CCOCC1")));
  const double chain = surrogate_qed(descriptors(parse_smiles(std::string(60, 'C'))));
  EXPECT_LT(chain, drug);
  EXPECT_GE(chain, 0.0);
  EXPECT_LE(drug, 1.0);
}

TEST(SurrogateQed, DecreasingInWeightPastPeak) {
  DescriptorSet d = descriptors(parse_smiles("c1ccccc1CCO"));
  d.molecular_weight = 350.0;
  const double a = surrogate_qed(d);
  d.molecular_weight = 450.0;
  const double b = surrogate_qed(d);
  d.molecular_weight = 600.0;
  EXPECT_GT(a, b);
  EXPECT_GT(b, surrogate_qed(d));
}

TEST(SurrogateSa, PinnedFormula) {
  FrequencyTable table;
  for (int k = 0; k < 50; ++k) table.add(parse_smiles("CCCCCC"));
  EXPECT_LE(surrogate_sa(parse_smiles("C"), &table), 2.0);
  const double common = surrogate_sa(parse_smiles("CCCCCC"), &table);
  const double novel = surrogate_sa(parse_smiles("CCOCNC"), &table);
  EXPECT_LT(common, novel);
  const double huge = surrogate_sa(parse_smiles(std::string(200, 'C').replace(100, 1, "O")), &table);
  EXPECT_GE(huge, 1.0);
  EXPECT_LE(huge, 10.0);
  EXPECT_EQ(kind_of([] { surrogate_sa(parse_smiles("CC"), nullptr); }), OracleError::Kind::MissingFrequencyTable);
}

TEST(FrequencyTable, SaveLoad) {
  FrequencyTable table;
  table.add(parse_smiles("CCO"));
  table.add(parse_smiles("c1ccccc1N"));
  const std::string path = temp_path("freq.txt");
  table.save(path);
  const FrequencyTable back = FrequencyTable::load(path);
  EXPECT_EQ(back.molecules(), 2u);
  EXPECT_EQ(back.size(), table.size());
  for (auto env : bond_environments(parse_smiles("c1ccccc1N"))) EXPECT_EQ(back.count(env), table.count(env));
  std::remove(path.c_str());
  EXPECT_EQ(kind_of([&] { FrequencyTable::load(path); }), OracleError::Kind::MissingFrequencyTable);
}

// ---- toy oracles ----

TEST(ToyOracles, Examples) {
  EXPECT_DOUBLE_EQ(similarity_to_target("CC(=O)Oc1ccccc1", "CC(=O)Oc1ccccc1"), 1.0);
  EXPECT_DOUBLE_EQ(carbon_fraction("O"), 0.0);
  EXPECT_DOUBLE_EQ(carbon_fraction("CCO"), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(carbon_fraction("CCCC"), 1.0);
  EXPECT_DOUBLE_EQ(carbon_fraction("c1ccccc1"), 6.0 / 8.0);
  EXPECT_DOUBLE_EQ(carbon_fraction("CC(C)C"), 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(carbon_fraction("CCl"), 1.0 / 2.0);
  EXPECT_DOUBLE_EQ(carbon_fraction("C[NH3+]"), 1.0 / 2.0);
  EXPECT_DOUBLE_EQ(carbon_fraction("[CH3-]"), 1.0);
  EXPECT_DOUBLE_EQ(length_gaussian("CCCCC", 5, 2), 1.0);
  EXPECT_DOUBLE_EQ(carbon_fraction("C(("), 0.0);
  EXPECT_DOUBLE_EQ(similarity_to_target("C((", "CC"), 0.0);
}

TEST(ToyOracles, RangeAndPurityOverCorpus) {
  CorpusOptions o;
  o.count = 200;
  const auto smiles = generate_corpus(o);
  FrequencyTable table;
  for (const auto& s : smiles) table.add(parse_smiles(s));
  for (const std::string spec : {"carbon_fraction", "similarity:c1ccccc1O", "length_gaussian:20:4", "qed", "sa"}) {
    auto oracle = make_oracle(spec, &table);
    const auto a = oracle->score(smiles);
    const auto b = oracle->score(smiles);
    ASSERT_EQ(a.size(), smiles.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_TRUE(std::isfinite(a[i]));
      EXPECT_GE(a[i], 0.0) << spec;
      EXPECT_LE(a[i], 1.0) << spec;
      EXPECT_EQ(a[i], b[i]);
    }
  }
}

TEST(MakeOracle, Specs) {
  EXPECT_EQ(make_oracle("carbon_fraction")->name(), "carbon_fraction");
  EXPECT_EQ(kind_of([] { make_oracle("nope"); }), OracleError::Kind::BadSpec);
  EXPECT_EQ(kind_of([] { make_oracle("length_gaussian:5"); }), OracleError::Kind::BadSpec);
  EXPECT_EQ(kind_of([] { make_oracle("similarity:"); }), OracleError::Kind::BadSpec);
  EXPECT_EQ(kind_of([] { make_oracle("sa"); }), OracleError::Kind::MissingFrequencyTable);
  EXPECT_THROW(make_oracle("similarity:C(("), SmilesError);
  auto ext = make_oracle("external:" + fake("const 0.25"));
  EXPECT_EQ(ext->score(std::vector<std::string>{"CC"})[0], 0.25);
}

// ---- external protocol ----

TEST(External, EchoConstant) {
  OracleClient client(fake("const 0.5"));
  const auto s = client.score(std::vector<std::string>{"CCO", "CCN", "c1ccccc1"});
  ASSERT_EQ(s.size(), 3u);
  for (const auto& v : s) EXPECT_EQ(v, 0.5);
  EXPECT_EQ(client.requests_sent(), 1);
}

TEST(External, ThousandMoleculesKeepOrder) {
  OracleClient client(fake("length"));
  std::vector<std::string> batch;
  for (int i = 0; i < 1000; ++i) batch.push_back(std::string(1 + i % 37, 'C') + std::string(i % 5, 'O'));
  const auto s = client.score(batch);
  ASSERT_EQ(s.size(), batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) EXPECT_EQ(*s[i], static_cast<double>(batch[i].size())) << i;
  OracleClient indexed(fake("index"));
  const auto idx = indexed.score(batch);
  for (std::size_t i = 0; i < batch.size(); ++i) EXPECT_EQ(*idx[i], static_cast<double>(i));
}

TEST(External, NullScores) {
  OracleClient client(fake("nullodd"));
  const auto s = client.score(std::vector<std::string>{"A", "B", "C"});
  EXPECT_EQ(s[0], 1.0);
  EXPECT_FALSE(s[1]);
  EXPECT_EQ(s[2], 1.0);
  ExternalOracle oracle(fake("null"));
  EXPECT_EQ(oracle.score(std::vector<std::string>{"CC"})[0], 0.0);
}

TEST(External, ProtocolViolations) {
  for (const std::string mode : {"malformed", "wrongid", "wrongcount", "badscore"}) {
    OracleClient client(fake(mode));
    try {
      client.score(std::vector<std::string>{"CC", "CO"});
      ADD_FAILURE() << mode;
    } catch (const OracleError& e) {
      EXPECT_EQ(e.kind(), OracleError::Kind::ProtocolViolation) << mode;
      EXPECT_FALSE(e.raw().empty()) << mode;
    }
  }
  OracleClient client(fake("malformed"));
  try {
    client.score(std::vector<std::string>{"CC"});
  } catch (const OracleError& e) {
    EXPECT_EQ(e.raw(), "this is not json");
  }
}

TEST(External, RemoteErrorAndExit) {
  OracleClient err(fake("error"));
  EXPECT_EQ(kind_of([&] { err.score(std::vector<std::string>{"CC"}); }), OracleError::Kind::RemoteError);
  OracleClient gone(fake("exit"));
  EXPECT_EQ(kind_of([&] { gone.score(std::vector<std::string>{"CC"}); }), OracleError::Kind::ChildExited);
  EXPECT_EQ(kind_of([&] { gone.score(std::vector<std::string>{"CC"}); }), OracleError::Kind::ChildExited);
}

TEST(External, Timeout) {
  OracleClient slow(fake("sleep 5"), 0.3);
  EXPECT_EQ(kind_of([&] { slow.score(std::vector<std::string>{"CC"}); }), OracleError::Kind::Timeout);
}

TEST(External, IdsIncreaseByOne) {
  const std::string log = temp_path("scorer_log.jsonl");
  std::remove(log.c_str());
  {
    OracleClient client("FAKE_SCORER_LOG=" + log + " " + fake("const 1"));
    for (int k = 0; k < 5; ++k) client.score(std::vector<std::string>(k + 1, "C"));
    EXPECT_EQ(client.requests_sent(), 5);
  }
  std::ifstream in(log);
  std::string line;
  long expected = 1;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("id").get<long>(), expected);
    EXPECT_EQ(j.at("smiles").size(), static_cast<std::size_t>(expected));
    ++expected;
  }
  EXPECT_EQ(expected, 6);
  std::remove(log.c_str());
}

TEST(External, EmptyBatchSendsNothing) {
  const std::string log = temp_path("scorer_empty.jsonl");
  std::remove(log.c_str());
  {
    OracleClient client("FAKE_SCORER_LOG=" + log + " " + fake("const 1"));
    EXPECT_TRUE(client.score(std::vector<std::string>{}).empty());
  }
  std::ifstream in(log);
  std::string line;
  EXPECT_FALSE(std::getline(in, line));
}
