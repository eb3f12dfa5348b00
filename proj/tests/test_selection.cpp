#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "keysig/selection.hpp"
#include "support/synthetic.hpp"

using namespace keysig;

namespace {

std::vector<std::string> texts(const KeyphraseSet& set) {
  std::vector<std::string> out;
  for (const auto& p : set.phrases) out.push_back(p.text);
  return out;
}

// Candidates drawn from a tiny vocabulary with plural variants, so that
// fuzzy duplicates are common.
std::vector<Candidate> random_candidates(std::mt19937_64& gen) {
  const auto vocab = synth::vocabulary(gen, 6);
  const std::size_t n = 1 + synth::below(gen, 30);
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string text;
    const std::size_t words = 1 + synth::below(gen, 3);
    for (std::size_t w = 0; w < words; ++w) {
      if (w) text += ' ';
      text += vocab[synth::below(gen, vocab.size())];
      if (synth::below(gen, 4) == 0) text += 's';
    }
    const double score = static_cast<double>(synth::below(gen, 256)) / 32.0 - 4.0;
    out.push_back({text, score, i * 10});
  }
  return out;
}

}  // namespace

TEST(Select, DuplicatePairResolvedToLongerForm) {
  const auto set = select_top_k(
      {{"climate change", 0.9, 0}, {"climate changes", 0.8, 20}, {"ocean", 0.5, 40}}, 2, {0.7});
  EXPECT_EQ(texts(set), (std::vector<std::string>{"climate changes", "ocean"}));
  EXPECT_DOUBLE_EQ(set.phrases[0].score, 0.9);
  EXPECT_EQ(set.phrases[0].start, 20u);
  EXPECT_EQ(set.k_requested, 2u);
}

TEST(Select, DistinctPhrasesAllKeptInScoreOrder) {
  const auto set = select_top_k({{"ocean", 0.2, 0}, {"volcano", 0.9, 10}, {"glacier", 0.5, 20}},
                                10, {0.7});
  EXPECT_EQ(texts(set), (std::vector<std::string>{"volcano", "glacier", "ocean"}));
}

TEST(Select, MutualDuplicatesCollapseToLongest) {
  const auto set = select_top_k(
      {{"interest rate", 0.9, 0}, {"interest rates", 0.3, 10}, {"interest rated", 0.5, 20},
       {"interest ratess", 0.1, 30}},
      5, {0.7});
  EXPECT_EQ(texts(set), (std::vector<std::string>{"interest ratess"}));
}

TEST(Select, CandidateMatchingSeveralRetainedIsDropped) {
  const auto set =
      select_top_k({{"abcd", 0.9, 0}, {"efgh", 0.8, 5}, {"abcdefgh", 0.1, 10}}, 5, {0.5});
  EXPECT_EQ(texts(set), (std::vector<std::string>{"abcd", "efgh"}));
}

TEST(Select, EqualScoresBreakTiesByPosition) {
  const auto set = select_top_k({{"zeta", 1.0, 30}, {"alpha", 1.0, 10}, {"mu", 1.0, 20}}, 2, {0.7});
  EXPECT_EQ(texts(set), (std::vector<std::string>{"alpha", "mu"}));
}

TEST(Select, RejectsZeroKAndSkipsBlankText) {
  EXPECT_THROW(select_top_k({{"a", 1.0, 0}}, 0, {0.7}), UsageError);
  EXPECT_EQ(select_top_k({{"  ", 1.0, 0}, {"b", 0.5, 1}}, 3, {0.7}).size(), 1u);
  EXPECT_TRUE(select_top_k({}, 3, {0.7}).empty());
}

TEST(Select, InvariantsOnRandomSets) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 300; ++trial) {
    const auto candidates = random_candidates(gen);
    const std::size_t k = 1 + synth::below(gen, 10);
    const double eps = 0.5 + 0.1 * static_cast<double>(synth::below(gen, 6));
    const auto set = select_top_k(candidates, k, {eps});
    EXPECT_LE(set.size(), k);
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (i) { EXPECT_GE(set.phrases[i - 1].score, set.phrases[i].score); }
      for (std::size_t j = i + 1; j < set.size(); ++j)
        EXPECT_LT(fuzz(set.phrases[i].text, set.phrases[j].text), eps);
    }
  }
}

TEST(Select, AffineRescalingKeepsSelection) {
  std::mt19937_64 gen(32);
  for (int trial = 0; trial < 300; ++trial) {
    auto candidates = random_candidates(gen);
    const auto base = select_top_k(candidates, 5, {0.7});
    for (auto& c : candidates) c.score = 2.5 * c.score + 7.0;
    EXPECT_EQ(texts(select_top_k(candidates, 5, {0.7})), texts(base));
  }
}

TEST(Select, LargerKKeepsAFuzzyCounterpartOfEveryPhrase) {
  std::mt19937_64 gen(33);
  for (int trial = 0; trial < 300; ++trial) {
    const auto candidates = random_candidates(gen);
    for (std::size_t k = 1; k < 8; ++k) {
      const auto small = select_top_k(candidates, k, {0.7});
      const auto large = select_top_k(candidates, k + 1, {0.7});
      EXPECT_GE(large.size(), small.size());
      for (const auto& p : small.phrases) {
        bool found = false;
        for (const auto& q : large.phrases) found = found || fuzz(p.text, q.text) >= 0.7;
        EXPECT_TRUE(found) << p.text << " (k=" << k << ")";
      }
    }
  }
}

TEST(Select, FromSpansUsesSurfaceFormAndMeanScore) {
  const std::string text = "Rates rose on Tuesday";
  const auto sw = StopwordSet::english();
  const auto tokens = tokenize(text, sw);
  const auto spans = segment_tokens(text, tokens, Granularity::phrase);
  TokenScoreMap scores;
  scores.scores = {{0, 5, 1.0}, {6, 10, 0.0}, {14, 21, 0.9}};
  const auto set = select_keyphrases(spans, scores, 15, {0.7});
  EXPECT_EQ(texts(set), (std::vector<std::string>{"Tuesday", "Rates rose"}));
  EXPECT_DOUBLE_EQ(set.phrases[1].score, 0.5);
}

TEST(KeyphraseRecords, PositionOrderAndJsonRoundTrip) {
  KeyphraseSet set;
  set.phrases = {{"late", 0.9, 50}, {"early", 0.5, 3}};
  const auto by_position = to_record("d", set, PhraseOrder::position);
  EXPECT_EQ(by_position.keyphrases, (std::vector<std::string>{"early", "late"}));
  EXPECT_EQ(by_position.scores, (std::vector<double>{0.5, 0.9}));
  const auto rec = to_record("d", set);
  EXPECT_EQ(dump_line(to_json(rec)), "{\"id\":\"d\",\"keyphrases\":[\"late\",\"early\"],\"scores\":[0.9,0.5]}\n");
  EXPECT_EQ(keyphrase_record_from_json(to_json(rec), 1), rec);

  const auto path = std::filesystem::temp_directory_path() / "keysig_kp.jsonl";
  write_keyphrases(std::vector<KeyphraseRecord>{rec, by_position}, path);
  const auto back = load_keyphrases(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1], by_position);
  std::filesystem::remove(path);
}

TEST(KeyphraseRecords, ValidatesShape) {
  EXPECT_THROW(keyphrase_record_from_json(Json::parse(R"({"id":"d","keyphrases":["a"],"scores":[1,2]})"), 1),
               SchemaError);
  EXPECT_THROW(keyphrase_record_from_json(Json::parse(R"({"id":"d","keyphrases":"a"})"), 1),
               SchemaError);
  const auto rec = keyphrase_record_from_json(Json::parse(R"({"id":"d","keyphrases":["a","b"]})"), 1);
  EXPECT_TRUE(rec.scores.empty());
  EXPECT_EQ(to_keyphrase_set(rec).size(), 2u);
}

TEST(KeyphraseRecords, OrderNamesParse) {
  EXPECT_EQ(parse_phrase_order("score"), PhraseOrder::score);
  EXPECT_EQ(parse_phrase_order("position"), PhraseOrder::position);
  EXPECT_THROW(parse_phrase_order("random"), UsageError);
}
