#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "triage/classic.hpp"
#include "triage/corpus.hpp"
#include "triage/pipeline.hpp"

namespace triage {

// --- splitting ------------------------------------------------------------------

struct SplitResult {
  LabeledCorpus train;
  LabeledCorpus test;
};

/// Per class, round(n_c * test_frac) documents (at least one, at most n_c - 1)
/// go to the test side after a seeded shuffle. Corpus order is kept on each side.
SplitResult stratified_split(const LabeledCorpus& corpus, double test_frac, std::uint64_t seed);

/// k-fold assignment by document index.
struct FoldPlan {
  std::size_t k = 0;
  LabelScheme scheme = LabelScheme::four_class;
  bool balanced = false;
  std::uint64_t seed = 0;
  std::vector<std::size_t> fold_of;              // per document
  std::vector<std::vector<std::size_t>> folds;   // ascending document indices

  std::vector<std::size_t> train_indices(std::size_t fold) const;
  const std::vector<std::size_t>& test_indices(std::size_t fold) const { return folds.at(fold); }
};

/// Stratified: each class is shuffled, the class lists are concatenated and
/// dealt round-robin, so per-class and overall fold sizes differ by at most one.
FoldPlan kfold(const LabeledCorpus& corpus, std::size_t k, std::uint64_t seed);

struct OversampleResult {
  LabeledCorpus corpus;
  /// For every output document, the index of the input document it copies.
  std::vector<std::size_t> source;
};

/// Random oversampling with replacement up to the majority count. Inputs keep
/// their order and come first; duplicates follow, class by class, with ids
/// suffixed "#dupN".
OversampleResult oversample(const LabeledCorpus& train, std::uint64_t seed);

LabeledCorpus subset(const LabeledCorpus& corpus, std::span<const std::size_t> indices);

// --- metrics ------------------------------------------------------------------

struct ConfusionMatrix {
  std::vector<int> labels;                         // ascending
  std::vector<std::vector<std::size_t>> counts;    // [true][predicted]

  std::size_t total() const noexcept;
  std::size_t tp(std::size_t c) const;
  std::size_t fp(std::size_t c) const;
  std::size_t fn(std::size_t c) const;
  std::size_t tn(std::size_t c) const;
};

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred,
                                 std::span<const int> labels);

struct ClassMetrics {
  int label = 0;
  std::size_t support = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
};

struct MetricsReport {
  int fold = -1;  // -1 for aggregates
  double accuracy = 0.0;
  double precision = 0.0;  // support-weighted
  double recall = 0.0;     // support-weighted; equals accuracy
  double f_measure = 0.0;  // support-weighted
  std::optional<double> roc_auc;
  std::vector<ClassMetrics> per_class;
  std::vector<std::string> warnings;
};

/// Labels must belong to the scheme. A class that is never predicted gets
/// precision 0 and a warning.
MetricsReport compute_metrics(std::span<const int> y_true, std::span<const int> y_pred, LabelScheme scheme);

/// Mann-Whitney AUC with average ranks for ties. Documents whose label equals
/// `positive` are positives, all others negatives; both must be present.
double roc_auc(std::span<const int> y_true, std::span<const double> scores, int positive = 1);

// --- experiment -------------------------------------------------------------------

struct ExperimentConfig {
  std::vector<LabelScheme> schemes{LabelScheme::two_class, LabelScheme::four_class};
  std::vector<bool> balance_modes{true, false};
  std::vector<ModelKind> models{all_model_kinds().begin(), all_model_kinds().end()};
  std::size_t k = 5;
  /// Oversample the whole corpus before splitting instead of each training fold.
  bool paper_mode = false;
  std::uint64_t seed = 0;
  ModelConfig model;
  std::string corpus_name;  // echoed into the report
};

struct ModelResult {
  ModelKind kind = ModelKind::mnb;
  std::vector<MetricsReport> folds;
  MetricsReport mean;  // fold-wise mean of each aggregate metric
};

struct CellResult {
  LabelScheme scheme = LabelScheme::four_class;
  bool balanced = false;
  std::vector<ModelResult> models;
  std::vector<std::size_t> fold_sizes;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::size_t documents = 0;
  std::vector<CellResult> cells;

  const CellResult& cell(LabelScheme scheme, bool balanced) const;
  const ModelResult& result(LabelScheme scheme, bool balanced, ModelKind kind) const;
};

/// Called after each (cell, model, fold) finishes; useful for progress output.
using ExperimentProgress = void (*)(const CellResult&, ModelKind, std::size_t fold, void* user);

/// `corpus` carries four-class labels; two-class cells merge them. Each cell,
/// fold and model draws its seeds from (seed, cell, fold, model) only.
ExperimentReport run_experiment(const LabeledCorpus& corpus, const ExperimentConfig& config,
                                ExperimentProgress progress = nullptr, void* user = nullptr);

/// Per-fold values of one metric ("accuracy", "precision", "recall",
/// "f_measure", "roc_auc").
std::vector<double> metric_values(const ModelResult& result, std::string_view metric);

nlohmann::json to_json(const MetricsReport& report);
nlohmann::json to_json(const ExperimentReport& report);
/// Aligned tables, one per cell. Values are percentages with one decimal.
std::string to_text(const ExperimentReport& report);

std::string cell_name(LabelScheme scheme, bool balanced);

}  // namespace triage
