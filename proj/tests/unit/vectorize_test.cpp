#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "triage/error.hpp"
#include "triage/vectorize.hpp"

namespace triage {
namespace {

std::vector<TokenList> two_docs() { return {{"a", "b"}, {"a", "c"}}; }

TEST(FitTfidf, SmoothedIdf) {
  const auto model = fit_tfidf(two_docs());
  ASSERT_EQ(model.dim(), 3u);
  EXPECT_EQ(model.documents, 2u);
  const auto idf = [&](const char* t) { return model.idf[model.vocab.lookup(t) - Vocabulary::kFirstToken]; };
  EXPECT_NEAR(idf("a"), 1.0, 1e-12);
  EXPECT_NEAR(idf("b"), std::log(1.5) + 1.0, 1e-12);
  EXPECT_NEAR(idf("c"), 1.405465, 1e-6);
}

TEST(FitTfidf, SingleDocumentHasUnitIdf) {
  const std::vector<TokenList> docs{{"x", "y", "x"}};
  for (double v : fit_tfidf(docs).idf) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(FitTfidf, VocabularyOnlyTokenHasZeroDocumentFrequency) {
  const auto model = fit_tfidf(two_docs(), Vocabulary({"a", "b", "c", "unseen"}));
  EXPECT_NEAR(model.idf[3], std::log(3.0) + 1.0, 1e-12);
}

TEST(FitTfidf, EmptyCorpusIsAnError) {
  EXPECT_THROW(fit_tfidf(std::vector<TokenList>{}), ValidationError);
}

TEST(TransformTfidf, NormalizedWeights) {
  const auto model = fit_tfidf(two_docs());
  const TokenList doc{"a", "b"};
  const auto v = transform_tfidf(model, doc);
  ASSERT_EQ(v.nnz(), 2u);
  EXPECT_EQ(v.indices[0], 0u);
  EXPECT_EQ(v.indices[1], 1u);
  EXPECT_NEAR(v.values[0], 0.5797, 1e-4);
  EXPECT_NEAR(v.values[1], 0.8148, 1e-4);
  const double b = std::log(1.5) + 1.0;
  EXPECT_NEAR(v.values[0], 1.0 / std::hypot(1.0, b), 1e-12);
  EXPECT_NEAR(v.squared_norm(), 1.0, 1e-12);
}

TEST(TransformTfidf, NoKnownTokensGivesEmptyVector) {
  const auto model = fit_tfidf(two_docs());
  const TokenList doc{"q", "r"};
  const auto v = transform_tfidf(model, doc);
  EXPECT_EQ(v.nnz(), 0u);
  EXPECT_EQ(v.dim, 3u);
}

TEST(TransformTfidf, RepeatedTokenNormalizesToOne) {
  const auto model = fit_tfidf(two_docs());
  const TokenList doc{"a", "a"};
  const auto v = transform_tfidf(model, doc);
  ASSERT_EQ(v.nnz(), 1u);
  EXPECT_DOUBLE_EQ(v.values[0], 1.0);
}

TEST(CountVector, RawCounts) {
  const Vocabulary vocab({"a", "b", "c"});
  const TokenList doc{"c", "a", "c", "zzz"};
  const auto v = count_vector(vocab, doc);
  EXPECT_EQ(v.indices, (std::vector<std::uint32_t>{0, 2}));
  EXPECT_EQ(v.values, (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(v.to_dense(), (std::vector<double>{1.0, 0.0, 2.0}));
}

TEST(SparseVector, Products) {
  const SparseVector a{{0, 2}, {1.0, 2.0}, 4};
  const SparseVector b{{1, 2, 3}, {5.0, 3.0, 1.0}, 4};
  EXPECT_DOUBLE_EQ(dot(a, b), 6.0);
  const std::vector<double> dense{1.0, 1.0, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(a.dot(dense), 3.0);
  EXPECT_DOUBLE_EQ(b.squared_norm(), 35.0);
}

}  // namespace
}  // namespace triage
