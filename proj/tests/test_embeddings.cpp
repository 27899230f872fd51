#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "newscnn/embeddings.hpp"
#include "newscnn/error.hpp"
#include "support/test_support.hpp"

using namespace newscnn;
using newscnn::testing::TempDir;

namespace {

EmbeddingTable table_from(const std::vector<std::vector<double>>& rows, EmbeddingMode mode = EmbeddingMode::kNonStatic) {
  Matrix m(rows.size() + 1, rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), m.row(i + 1).begin());
  return EmbeddingTable(std::move(m), mode);
}

}  // namespace

TEST(EmbeddingMode, ParsesNames) {
  EXPECT_EQ(parse_embedding_mode("static"), EmbeddingMode::kStatic);
  EXPECT_EQ(parse_embedding_mode("non_static"), EmbeddingMode::kNonStatic);
  EXPECT_EQ(parse_embedding_mode("self_learnt"), EmbeddingMode::kSelfLearnt);
  EXPECT_THROW(parse_embedding_mode("frozen"), Error);
  EXPECT_STREQ(to_string(EmbeddingMode::kNonStatic), "non_static");
}

TEST(EmbeddingTable, PaddingRowMustBeZero) {
  Matrix m(2, 2);
  m(0, 1) = 1.0;
  EXPECT_THROW(EmbeddingTable(m, EmbeddingMode::kSelfLearnt), Error);
}

TEST(InitSelfLearnt, ShapeStatisticsAndDeterminism) {
  TokenList toks;
  for (int i = 0; i < 400; ++i) toks.push_back("w" + std::to_string(i));
  auto v = Vocabulary::build({toks});
  auto t = init_self_learnt(v, 25, 0.5, 2.0, 9);
  EXPECT_EQ(t.rows(), 401u);
  EXPECT_EQ(t.dim(), 25u);
  for (double x : t.row(0)) EXPECT_EQ(x, 0.0);
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 1; r < t.rows(); ++r) {
    for (double x : t.row(r)) {
      sum += x;
      sq += x * x;
      ++n;
    }
  }
  double mean = sum / static_cast<double>(n);
  double sd = std::sqrt(sq / static_cast<double>(n) - mean * mean);
  EXPECT_NEAR(mean, 0.5, 0.05);
  EXPECT_NEAR(sd, 2.0, 0.05);
  EXPECT_EQ(init_self_learnt(v, 25, 0.5, 2.0, 9), t);
  EXPECT_THROW(init_self_learnt(v, 25, 0.0, 0.0, 9), Error);
  EXPECT_THROW(init_self_learnt(v, 25, 0.0, -1.0, 9), Error);
}

TEST(LoadPretrained, HitsMissesAndStatistics) {
  TempDir dir;
  auto path = dir.write("vec.txt",
                        "3 2\n"
                        "profit 1.0 2.0\n"
                        "Loss   -1.0    0.5  \n"
                        "\n"
                        "other 3.0 -2.5\n");
  auto v = Vocabulary::build({{"profit", "loss", "missing"}});
  auto t = load_pretrained(v, path, EmbeddingMode::kStatic, 2, 1);
  EXPECT_EQ(t.mode(), EmbeddingMode::kStatic);
  EXPECT_FALSE(t.trainable());
  EXPECT_EQ(t.pretrained_hit_count(), 2u);
  EXPECT_EQ(std::vector<double>(t.row(1).begin(), t.row(1).end()), (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(std::vector<double>(t.row(2).begin(), t.row(2).end()), (std::vector<double>{-1.0, 0.5}));
  for (double x : t.row(0)) EXPECT_EQ(x, 0.0);

  auto stats = pretrained_statistics(path);
  EXPECT_EQ(stats.vectors, 3u);
  EXPECT_EQ(stats.dim, 2u);
  EXPECT_NEAR(stats.mean, 0.5, 1e-15);  // (1+2-1+0.5+3-2.5)/6
  EXPECT_EQ(load_pretrained(v, path, EmbeddingMode::kStatic, 2, 1), t);
}

TEST(LoadPretrained, Errors) {
  TempDir dir;
  auto v = Vocabulary::build({{"a"}});
  auto ok = dir.write("ok.txt", "1 3\na 1 2 3\n");
  EXPECT_THROW(load_pretrained(v, ok, EmbeddingMode::kNonStatic, 300, 1), Error);  // dim mismatch
  EXPECT_THROW(load_pretrained(v, ok, EmbeddingMode::kSelfLearnt, 3, 1), Error);
  try {
    load_pretrained(v, dir.write("short.txt", "2 3\na 1 2 3\nb 1 2\n"), EmbeddingMode::kStatic, 3, 1);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(load_pretrained(v, dir.write("bad.txt", "1 3\na 1 x 3\n"), EmbeddingMode::kStatic, 3, 1), ParseError);
  EXPECT_THROW(load_pretrained(v, dir.write("hdr.txt", "three 3\n"), EmbeddingMode::kStatic, 3, 1), ParseError);
  EXPECT_THROW(load_pretrained(v, dir.write("cnt.txt", "2 3\na 1 2 3\n"), EmbeddingMode::kStatic, 3, 1), ParseError);
  EXPECT_THROW(load_pretrained(v, dir / "absent.txt", EmbeddingMode::kStatic, 3, 1), Error);
}

TEST(LoadPretrained, Word2vecRoundTrip) {
  auto v = Vocabulary::build({{"a", "b"}});
  auto t = init_self_learnt(v, 4, 0.0, 1.0, 3);
  TempDir dir;
  auto p = dir.write("w.txt", to_word2vec_text(t, v));
  auto back = load_pretrained(v, p, EmbeddingMode::kNonStatic, 4, 0);
  EXPECT_EQ(back.matrix(), t.matrix());
  EXPECT_EQ(back.pretrained_hit_count(), 2u);
}

TEST(LookupConcat, ConcatenatesRowsAndPadsWithZero) {
  auto t = table_from({{1, 2}, {3, 4}});
  EncodedHeadline e{{2, 1, 0}, 2};
  EXPECT_EQ(lookup_concat(e, t), (std::vector<double>{3, 4, 1, 2, 0, 0}));
  EncodedHeadline bad{{3}, 1};
  EXPECT_THROW(lookup_concat(bad, t), Error);
}

TEST(Cosine, KnownValuesAndErrors) {
  std::vector<double> a{1, 0}, b{0, 1}, c{2, 0}, d{-1, 0};
  EXPECT_DOUBLE_EQ(cosine_similarity(a, b), 0.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, c), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, d), -1.0);
  std::vector<double> z{0, 0};
  EXPECT_THROW(cosine_similarity(a, z), Error);
  std::vector<double> three{1, 2, 3};
  EXPECT_THROW(cosine_similarity(a, three), Error);
}

TEST(NearestNeighbors, ToyTable) {
  auto v = Vocabulary::build({{"a", "b", "c"}});
  auto t = table_from({{1, 0}, {0.9, 0.1}, {0, 1}});
  auto r = nearest_neighbors("a", 1, t, v);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].first, "b");
  auto all = nearest_neighbors("a", 10, t, v);
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[1].first, "c");
  EXPECT_THROW(nearest_neighbors("zzz", 1, t, v), Error);
  auto solo_v = Vocabulary::build({{"only"}});
  EXPECT_TRUE(nearest_neighbors("only", 3, table_from({{1, 1}}), solo_v).empty());
}

TEST(NearestNeighbors, TiesBreakByIndexAndZeroRowsSkipped) {
  auto v = Vocabulary::build({{"q", "x", "y", "zero"}});
  auto t = table_from({{1, 0}, {2, 0}, {3, 0}, {0, 0}});
  auto r = nearest_neighbors("q", 5, t, v);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].first, "x");
  EXPECT_EQ(r[1].first, "y");
}

TEST(NearestNeighbors, MatchesBruteForceAcrossVocabularySizes) {
  std::mt19937_64 rng(17);
  for (std::size_t n : {2u, 5u, 40u, 300u, 1000u}) {
    TokenList toks;
    for (std::size_t i = 0; i < n; ++i) toks.push_back("t" + std::to_string(i));
    auto v = Vocabulary::build({toks});
    Matrix m(n + 1, 3);
    std::uniform_int_distribution<int> small(-2, 2);  // coarse values create ties
    for (std::size_t r = 1; r <= n; ++r) {
      for (auto& x : m.row(r)) x = small(rng);
    }
    m(1, 0) = 1.0;  // query row is never zero
    EmbeddingTable t(m, EmbeddingMode::kNonStatic);
    for (std::size_t k : {std::size_t{1}, std::size_t{7}, n}) {
      EXPECT_EQ(nearest_neighbors("t0", k, t, v), newscnn::testing::naive_neighbors("t0", k, t, v));
    }
  }
}
