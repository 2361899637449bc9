#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "triage/classic.hpp"
#include "triage/corpus.hpp"
#include "triage/neural.hpp"
#include "triage/textprep.hpp"
#include "triage/vectorize.hpp"

namespace triage {

/// Hyperparameters for every model kind. Defaults are the documented baseline
/// settings; the experiment runner and the CLI share them.
struct ModelConfig {
  // CNN-LSTM
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::size_t max_len = 200;
  /// Shrink max_len to the longest training document when that is shorter.
  /// No token is ever dropped by this; it only removes trailing padding.
  bool fit_max_len = true;
  std::size_t embed_dim = 100;
  std::size_t conv_filters = 128;
  std::size_t kernel_width = 5;
  std::size_t pool_width = 2;
  std::size_t lstm_units = 128;
  double dropout = 0.0;
  double learning_rate = 1e-3;
  double clip_norm = 1.0;

  // classical
  double nb_alpha = 1.0;
  /// Feed MNB TF-IDF weights instead of raw term counts.
  bool nb_tfidf = false;
  LogregOptions logreg;
  double lsvc_c = 1.0;
  std::size_t lsvc_epochs = 50;
  double svm_c = 1.0;
  double svm_gamma = 0.0;
  std::size_t tree_max_depth = 0;
  std::size_t forest_trees = 100;
  std::size_t mlp_hidden = 100;

  /// Stable FNV-1a digest (hex) of every field, for provenance in model files.
  std::string digest() const;
};

enum class FeatureKind { counts, tfidf, sequence };

std::string_view to_string(FeatureKind kind) noexcept;
FeatureKind parse_feature_kind(std::string_view name);

/// Preprocessing state fitted on the training documents.
struct TextPipeline {
  FeatureKind features = FeatureKind::tfidf;
  TfidfModel tfidf;   // vocabulary for every feature kind; idf only used by tfidf
  std::size_t max_len = 0;  // sequence features only

  /// Report text -> tokens: header stripping, clean(), whitespace split.
  static TokenList tokens(std::string_view raw_text);
  FeatureMatrix vectorize(std::span<const TokenList> docs) const;
  std::vector<TokenSequence> encode(std::span<const TokenList> docs) const;
};

struct Prediction {
  int label = 0;
  std::vector<int> labels;      // column order of scores
  std::vector<double> scores;
};

/// A trained model together with the preprocessing it was trained with.
struct TextClassifier {
  ModelKind kind = ModelKind::mnb;
  LabelScheme scheme = LabelScheme::four_class;
  std::vector<int> labels;  // ascending
  TextPipeline pipeline;
  std::variant<ClassifierModel, TrainedModel> model;
  std::uint64_t seed = 0;
  std::string config_digest;

  /// [docs, labels]; probabilities for probabilistic kinds, otherwise scores.
  Tensor scores(std::span<const TokenList> docs) const;
  std::vector<int> predict(std::span<const TokenList> docs) const;
  /// Throws ValidationError("empty document") when no text remains.
  Prediction predict_text(std::string_view raw_text) const;
  bool probabilistic() const noexcept;
  /// Per-epoch (neural, MLP) or per-iteration (LR) training loss, else empty.
  std::vector<double> loss_history() const;
};

/// Fits the preprocessing on `train` and trains one model of `kind`. Every
/// scheme label must be present. All randomness derives from `seed`.
TextClassifier fit_classifier(ModelKind kind, const LabeledCorpus& train, const ModelConfig& config,
                              std::uint64_t seed);
/// Same, on documents that are already tokenized.
TextClassifier fit_classifier(ModelKind kind, LabelScheme scheme, std::span<const TokenList> docs,
                              std::span<const int> labels, const ModelConfig& config, std::uint64_t seed);

}  // namespace triage
