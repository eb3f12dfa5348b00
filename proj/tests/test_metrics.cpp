#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "keysig/metrics.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace keysig;

namespace {

KeyphraseSet predicted(std::vector<std::string> texts) {
  KeyphraseSet set;
  for (std::size_t i = 0; i < texts.size(); ++i) set.phrases.push_back({texts[i], 1.0, i});
  set.k_requested = texts.size();
  return set;
}

RecallAtK recall(const std::vector<std::string>& pred, const std::vector<std::string>& gold,
                 std::size_t k, double eps = 0.7) {
  return recall_at_k(predicted(pred), std::span<const std::string>(gold), k, {eps});
}

void expect_prf(const RougeScore& s, double p, double r, double f, double tol = 1e-12) {
  EXPECT_NEAR(s.precision, p, tol);
  EXPECT_NEAR(s.recall, r, tol);
  EXPECT_NEAR(s.f1, f, tol);
}

std::string random_sentence(std::mt19937_64& gen, const std::vector<std::string>& vocab) {
  std::string s;
  const std::size_t n = synth::below(gen, 11);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += synth::below(gen, 4) == 0 ? ", " : " ";
    s += vocab[synth::below(gen, vocab.size())];
  }
  return s;
}

Dataset two_docs() {
  Dataset ds;
  ds.records = {{"d1", "src", "the cat sat on the mat", {}}, {"d2", "src", "a b c d", {}}};
  return ds;
}

std::filesystem::path temp(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST(Rouge1, HandFixtures) {
  expect_prf(rouge1("the cat sat", "the cat sat"), 1, 1, 1);
  expect_prf(rouge1("the cat sat", "the cat"), 2.0 / 3.0, 1.0, 0.8);
  expect_prf(rouge1("red blue", "green yellow"), 0, 0, 0);
  expect_prf(rouge1("", "the cat"), 0, 0, 0);
  expect_prf(rouge1("the the the", "the cat"), 1.0 / 3.0, 0.5, 0.4);
}

TEST(RougeL, HandFixtures) {
  expect_prf(rougeL("a b c d", "a b c d"), 1, 1, 1);
  expect_prf(rougeL("a b c d", "a c"), 0.5, 1.0, 2.0 / 3.0);
  expect_prf(rougeL("", "a c"), 0, 0, 0);
  expect_prf(rougeL("d c b a", "a b c d"), 0.25, 0.25, 0.25);
}

TEST(Rouge, TokenizationIgnoresCaseAndPunctuation) {
  EXPECT_EQ(rouge_tokens("The CAT, sat... (on) mat-2"),
            (std::vector<std::string>{"the", "cat", "sat", "on", "mat", "2"}));
  EXPECT_EQ(rouge_tokens("café naïve"), (std::vector<std::string>{"café", "naïve"}));
}

TEST(Rouge, SwappingArgumentsSwapsPrecisionAndRecall) {
  std::mt19937_64 gen(41);
  const auto vocab = synth::vocabulary(gen, 6);
  for (int i = 0; i < 200; ++i) {
    const std::string a = random_sentence(gen, vocab), b = random_sentence(gen, vocab);
    for (auto fn : {&rouge1, &rougeL}) {
      const auto ab = fn(a, b), ba = fn(b, a);
      EXPECT_DOUBLE_EQ(ab.precision, ba.recall);
      EXPECT_DOUBLE_EQ(ab.recall, ba.precision);
      EXPECT_LE(ab.precision, 1.0);
      EXPECT_LE(ab.recall, 1.0);
      EXPECT_LE(ab.f1, std::max(ab.precision, ab.recall) + 1e-15);
    }
  }
}

TEST(Rouge, MatchesBruteForceOnRandomPairs) {
  std::mt19937_64 gen(42);
  const auto vocab = synth::vocabulary(gen, 5);
  for (int i = 0; i < 200; ++i) {
    const std::string a = random_sentence(gen, vocab), b = random_sentence(gen, vocab);
    const auto o1 = oracle::rouge1(a, b), ol = oracle::rougeL(a, b);
    expect_prf(rouge1(a, b), o1.p, o1.r, o1.f);
    expect_prf(rougeL(a, b), ol.p, ol.r, ol.f);
  }
}

TEST(RecallAtKTest, HandFixtures) {
  EXPECT_DOUBLE_EQ(recall({"alpha", "omega", "delta"}, {"alpha", "omega"}, 15).recall, 1.0);
  const auto half = recall({"alpha"}, {"alpha", "omega"}, 15);
  EXPECT_DOUBLE_EQ(half.recall, 0.5);
  EXPECT_EQ(half.matched, 1u);
  EXPECT_EQ(half.total, 2u);
  EXPECT_DOUBLE_EQ(recall({"quarterly revenue"}, {"quarterly revenues"}, 15).recall, 1.0);
}

TEST(RecallAtKTest, OnlyTheFirstKPredictionsCount) {
  EXPECT_DOUBLE_EQ(recall({"beta", "alpha"}, {"alpha"}, 1).recall, 0.0);
  EXPECT_DOUBLE_EQ(recall({"beta", "alpha"}, {"alpha"}, 2).recall, 1.0);
}

TEST(RecallAtKTest, EmptyOracleIsFlagged) {
  const auto r = recall({"alpha"}, {}, 15);
  EXPECT_TRUE(r.empty_oracle);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
  EXPECT_EQ(r.total, 0u);
}

TEST(RecallAtKTest, MatchesOracleAndIsMonotoneInK) {
  std::mt19937_64 gen(43);
  for (int trial = 0; trial < 200; ++trial) {
    const auto vocab = synth::vocabulary(gen, 8);
    std::vector<std::string> pred, gold;
    for (std::size_t i = 0, n = synth::below(gen, 10); i < n; ++i)
      pred.push_back(vocab[synth::below(gen, vocab.size())]);
    for (std::size_t i = 0, n = 1 + synth::below(gen, 6); i < n; ++i)
      gold.push_back(vocab[synth::below(gen, vocab.size())] + (synth::below(gen, 2) ? "s" : ""));
    double prev = 0.0;
    for (std::size_t k = 1; k <= 12; ++k) {
      const double r = recall(pred, gold, k).recall;
      EXPECT_DOUBLE_EQ(r, oracle::recall_at_k(pred, gold, k, 0.7));
      EXPECT_GE(r, prev);
      prev = r;
    }
  }
}

TEST(Evaluate, PerfectRunScoresOne) {
  const Dataset ds = two_docs();
  const std::vector<RunOutputRecord> out{{"d1", "the cat sat on the mat"}, {"d2", "a b c d"}};
  const auto rep = evaluate_run(std::span<const RunOutputRecord>(out), ds);
  expect_prf(rep.r1, 1, 1, 1);
  expect_prf(rep.rl, 1, 1, 1);
  EXPECT_EQ(rep.n, 2u);
}

TEST(Evaluate, TwoDocumentHandFixture) {
  const std::vector<RunOutputRecord> out{{"d1", "the cat sat"}, {"d2", "d c b a"}};
  const auto rep = evaluate_run(std::span<const RunOutputRecord>(out), two_docs());
  expect_prf(rep.r1, 1.0, 0.75, 5.0 / 6.0, 1e-9);
  expect_prf(rep.rl, 0.625, 0.375, 11.0 / 24.0, 1e-9);
  EXPECT_NEAR(rep.mean_len_words, 3.5, 1e-9);
  ASSERT_EQ(rep.per_doc.size(), 2u);
  expect_prf(rep.per_doc[1].rl, 0.25, 0.25, 0.25, 1e-9);
}

TEST(Evaluate, UnknownIdsAreListed) {
  const std::vector<RunOutputRecord> out{{"d1", "x"}, {"zz", "y"}, {"qq", "z"}};
  try {
    evaluate_run(std::span<const RunOutputRecord>(out), two_docs());
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("zz, qq"), std::string::npos);
  }
}

TEST(Evaluate, ReportJsonRoundTripsFloats) {
  const std::vector<RunOutputRecord> out{{"d1", "the cat sat"}, {"d2", "d c b a"}};
  const auto rep = evaluate_run(std::span<const RunOutputRecord>(out), two_docs());
  const Json back = Json::parse(to_json(rep).dump());
  EXPECT_EQ(back.at("r1").at("f").get<double>(), rep.r1.f1);
  EXPECT_EQ(back.at("rl").at("p").get<double>(), rep.rl.precision);
  EXPECT_EQ(back.at("mean_len_words").get<double>(), rep.mean_len_words);
  EXPECT_EQ(back.dump(), to_json(rep).dump());
}

TEST(Evaluate, RecallFromKeyphraseFiles) {
  const auto kp = temp("keysig_eval_kp.jsonl"), orc = temp("keysig_eval_oracle.jsonl");
  write_keyphrases(std::vector<KeyphraseRecord>{{"d1", {"alpha", "beta", "gamma"}, {}},
                                                {"d2", {"omega"}, {}}},
                   kp);
  write_keyphrases(std::vector<KeyphraseRecord>{{"d1", {"gamma", "delta"}, {}}, {"d2", {}, {}}},
                   orc);
  EvalOptions opts;
  opts.keyphrases = kp;
  opts.oracle = orc;
  opts.ks = {1, 15};
  const auto rep = evaluate_run(std::span<const RunOutputRecord>(), two_docs(), opts);
  ASSERT_EQ(rep.recall.size(), 2u);
  EXPECT_DOUBLE_EQ(rep.recall[0].mean_recall, (0.0 + 1.0) / 2.0);
  EXPECT_DOUBLE_EQ(rep.recall[1].mean_recall, (0.5 + 1.0) / 2.0);
  EXPECT_EQ(rep.recall[1].matched, 1u);
  EXPECT_EQ(rep.recall[1].total, 2u);
  EXPECT_EQ(rep.flags, (std::vector<std::string>{"empty_oracle:d2"}));
  EXPECT_NE(format_table(rep).find("R@15"), std::string::npos);

  opts.oracle.reset();
  EXPECT_THROW(evaluate_run(std::span<const RunOutputRecord>(), two_docs(), opts), UsageError);
  std::filesystem::remove(kp);
  std::filesystem::remove(orc);
}

TEST(Evaluate, EmptyReferenceIsFlagged) {
  Dataset ds;
  ds.records = {{"d", "src", "...", {}}};
  const std::vector<RunOutputRecord> out{{"d", "words"}};
  const auto rep = evaluate_run(std::span<const RunOutputRecord>(out), ds);
  EXPECT_EQ(rep.flags, (std::vector<std::string>{"empty_reference:d"}));
  expect_prf(rep.r1, 0, 0, 0);
}
