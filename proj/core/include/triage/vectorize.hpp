#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "triage/textprep.hpp"

namespace triage {

/// (index, weight) pairs sorted by index, no explicit zeros. Feature index i
/// corresponds to vocabulary id i + Vocabulary::kFirstToken.
struct SparseVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
  std::size_t dim = 0;

  std::size_t nnz() const noexcept { return indices.size(); }
  double dot(std::span<const double> dense) const;
  double squared_norm() const;
  std::vector<double> to_dense() const;

  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

using FeatureMatrix = std::vector<SparseVector>;

double dot(const SparseVector& a, const SparseVector& b);

/// Smoothed inverse document frequencies over a feature vocabulary.
struct TfidfModel {
  Vocabulary vocab;
  std::vector<double> idf;  // one entry per real token
  std::size_t documents = 0;

  std::size_t dim() const noexcept { return idf.size(); }
};

/// idf(t) = ln((1 + N) / (1 + df(t))) + 1. The one-argument form builds the
/// vocabulary from the corpus itself (min_freq 1).
TfidfModel fit_tfidf(std::span<const TokenList> corpus_tokens);
TfidfModel fit_tfidf(std::span<const TokenList> corpus_tokens, Vocabulary vocab);

/// count(t) * idf(t), L2-normalized; unknown tokens are dropped.
SparseVector transform_tfidf(const TfidfModel& model, std::span<const std::string> tokens);

/// Raw term counts over the vocabulary (the multinomial naive Bayes input).
SparseVector count_vector(const Vocabulary& vocab, std::span<const std::string> tokens);

}  // namespace triage
