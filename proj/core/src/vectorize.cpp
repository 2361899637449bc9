#include "triage/vectorize.hpp"

#include <cmath>
#include <map>
#include <set>

#include "triage/error.hpp"

namespace triage {

double SparseVector::dot(std::span<const double> dense) const {
  double sum = 0.0;
  for (std::size_t k = 0; k < indices.size(); ++k) sum += values[k] * dense[indices[k]];
  return sum;
}

double SparseVector::squared_norm() const {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return sum;
}

std::vector<double> SparseVector::to_dense() const {
  std::vector<double> out(dim, 0.0);
  for (std::size_t k = 0; k < indices.size(); ++k) out[indices[k]] = values[k];
  return out;
}

double dot(const SparseVector& a, const SparseVector& b) {
  double sum = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.indices.size() && j < b.indices.size()) {
    if (a.indices[i] < b.indices[j]) {
      ++i;
    } else if (a.indices[i] > b.indices[j]) {
      ++j;
    } else {
      sum += a.values[i++] * b.values[j++];
    }
  }
  return sum;
}

TfidfModel fit_tfidf(std::span<const TokenList> corpus_tokens) {
  return fit_tfidf(corpus_tokens, build_vocab(corpus_tokens, 1));
}

TfidfModel fit_tfidf(std::span<const TokenList> corpus_tokens, Vocabulary vocab) {
  if (corpus_tokens.empty()) throw ValidationError("cannot fit TF-IDF on an empty corpus");
  TfidfModel model;
  model.documents = corpus_tokens.size();
  std::vector<std::size_t> df(vocab.token_count(), 0);
  for (const auto& doc : corpus_tokens) {
    std::set<TokenId> seen;
    for (const auto& t : doc) {
      const auto id = vocab.lookup(t);
      if (id != Vocabulary::kOov) seen.insert(id);
    }
    for (auto id : seen) ++df[static_cast<std::size_t>(id - Vocabulary::kFirstToken)];
  }
  const double n = static_cast<double>(model.documents);
  model.idf.resize(df.size());
  for (std::size_t i = 0; i < df.size(); ++i) {
    model.idf[i] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[i]))) + 1.0;
  }
  model.vocab = std::move(vocab);
  return model;
}

namespace {

std::map<std::uint32_t, double> term_counts(const Vocabulary& vocab,
                                            std::span<const std::string> tokens) {
  std::map<std::uint32_t, double> counts;
  for (const auto& t : tokens) {
    const auto id = vocab.lookup(t);
    if (id != Vocabulary::kOov) counts[static_cast<std::uint32_t>(id - Vocabulary::kFirstToken)] += 1.0;
  }
  return counts;
}

}  // namespace

SparseVector transform_tfidf(const TfidfModel& model, std::span<const std::string> tokens) {
  SparseVector out;
  out.dim = model.dim();
  double norm2 = 0.0;
  for (const auto& [index, count] : term_counts(model.vocab, tokens)) {
    const double w = count * model.idf[index];
    out.indices.push_back(index);
    out.values.push_back(w);
    norm2 += w * w;
  }
  if (norm2 > 0.0) {
    const double norm = std::sqrt(norm2);
    for (double& v : out.values) v /= norm;
  }
  return out;
}

SparseVector count_vector(const Vocabulary& vocab, std::span<const std::string> tokens) {
  SparseVector out;
  out.dim = vocab.token_count();
  for (const auto& [index, count] : term_counts(vocab, tokens)) {
    out.indices.push_back(index);
    out.values.push_back(count);
  }
  return out;
}

}  // namespace triage
