#include <gtest/gtest.h>

#include <set>

#include <sparsembed/synthetic.hpp>
#include <sparsembed/textprep.hpp>

using namespace sparsembed;

TEST(LetterCode, Examples) {
  EXPECT_EQ(letter_code(0), "a");
  EXPECT_EQ(letter_code(25), "z");
  EXPECT_EQ(letter_code(26), "ba");
  EXPECT_EQ(letter_code(27), "bb");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < 2000; ++i) EXPECT_TRUE(seen.insert(letter_code(i)).second);
}

TEST(PlantedEmbedding, ShapeGroupsAndDeterminism) {
  PlantedSpec spec;
  spec.groups = 4;
  spec.group_size = 6;
  spec.fillers = 10;
  spec.dim = 5;
  const auto a = make_planted_embedding(spec);
  EXPECT_EQ(a.dense.size(), 34u);
  EXPECT_EQ(a.dense.dim(), 5u);
  ASSERT_EQ(a.groups.size(), 4u);
  ASSERT_EQ(a.categories.groups.size(), 4u);
  for (std::size_t g = 0; g < 4; ++g) {
    EXPECT_EQ(a.groups[g].size(), 6u);
    EXPECT_EQ(a.categories.groups.at("group" + std::to_string(g)), a.groups[g]);
    for (const auto& w : a.groups[g]) EXPECT_TRUE(a.dense.find(w).has_value());
  }
  for (double c : a.centroids.data()) EXPECT_TRUE(c == 1.0 || c == -1.0);
  const auto b = make_planted_embedding(spec);
  EXPECT_EQ(a.dense.words(), b.dense.words());
  EXPECT_EQ(a.dense.values(), b.dense.values());
  spec.seed = 43;
  EXPECT_NE(make_planted_embedding(spec).dense.values(), a.dense.values());
}

TEST(PlantedEmbedding, MembersSitNearTheirCentroid) {
  PlantedSpec spec;
  spec.noise = 0.1;
  const auto fx = make_planted_embedding(spec);
  for (std::size_t g = 0; g < fx.groups.size(); ++g)
    for (const auto& w : fx.groups[g])
      EXPECT_GT(cosine_similarity(fx.dense.row(*fx.dense.find(w)), fx.centroids.row(g)), 0.9);
}

TEST(PlantedEmbedding, WordsSurviveNormalization) {
  const auto fx = make_planted_embedding({});
  for (const auto& w : fx.dense.words()) EXPECT_EQ(normalize_text(w), w);
}

TEST(SyntheticBenchmark, ScoresInRangeOverKnownWords) {
  const auto fx = make_planted_embedding({});
  const auto b = make_similarity_benchmark(fx, 300, 0.5, 9);
  ASSERT_EQ(b.pairs.size(), 300u);
  for (const auto& p : b.pairs) {
    EXPECT_NE(p.first, p.second);
    EXPECT_TRUE(fx.dense.find(p.first).has_value());
    EXPECT_TRUE(fx.dense.find(p.second).has_value());
    EXPECT_GE(p.score, 0.0);
    EXPECT_LE(p.score, 10.0);
  }
}

TEST(SyntheticCorpus, LabelsFollowContentGroups) {
  const auto fx = make_planted_embedding({});
  const auto c = make_labeled_corpus(fx, 3, 30, 3, 2, 5);
  ASSERT_EQ(c.samples.size(), 30u);
  EXPECT_EQ(c.label_set, (std::vector<std::string>{"class0", "class1", "class2"}));
  for (const auto& s : c.samples) {
    ASSERT_EQ(s.tokens.size(), 5u);
    const std::size_t cls = static_cast<std::size_t>(s.label.back() - '0');
    for (std::size_t t = 0; t < 3; ++t) {
      const auto& group = fx.groups[cls];
      EXPECT_NE(std::find(group.begin(), group.end(), s.tokens[t]), group.end());
    }
    for (std::size_t t = 3; t < 5; ++t) EXPECT_EQ(s.tokens[t].rfind("filler", 0), 0u);
  }
}

TEST(SyntheticCorpus, RawLinesNormalizeToVocabulary) {
  const auto fx = make_planted_embedding({});
  const auto lines = make_raw_corpus(fx, 50, 3);
  ASSERT_EQ(lines.size(), 50u);
  bool saw_upper = false, saw_digit = false;
  for (const auto& l : lines) {
    for (char ch : l) {
      saw_upper = saw_upper || (ch >= 'A' && ch <= 'Z');
      saw_digit = saw_digit || (ch >= '1' && ch <= '9');
    }
    for (const auto& tok : split_whitespace(normalize_text(l))) {
      if (tok != "0") {
        EXPECT_TRUE(fx.dense.find(tok).has_value()) << tok;
      }
    }
  }
  EXPECT_TRUE(saw_upper);
  EXPECT_TRUE(saw_digit);
  EXPECT_EQ(make_raw_corpus(fx, 50, 3), lines);
}
