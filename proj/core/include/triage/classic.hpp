#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "triage/neural.hpp"
#include "triage/tensor.hpp"
#include "triage/vectorize.hpp"

namespace triage {

/// Every classifier in the comparison, in report row order.
enum class ModelKind { mnb, logreg, lsvc, mlp, svm_rbf, dtree, rforest, cnn_lstm };

std::string_view to_string(ModelKind kind) noexcept;
/// Row label used in report tables (NB, LR, LSVC, MLP, SVM, DT, RF, CNN-LSTM).
std::string_view display_name(ModelKind kind) noexcept;
/// Accepts the canonical names above plus a few aliases ("svm", "rf", "dt", "lr", "nb").
ModelKind parse_model_kind(std::string_view name);
std::span<const ModelKind> all_model_kinds() noexcept;

struct MnbParams {
  double alpha = 1.0;
  std::vector<double> log_prior;  // [classes]
  Tensor log_likelihood;          // [classes, dim]
};

/// Softmax regression weights, or one-vs-rest margin weights for the linear SVC.
struct LinearParams {
  Tensor weight;             // [classes, dim]
  std::vector<double> bias;  // [classes]
  std::vector<double> loss_history;
};

struct KernelSvmParams {
  double gamma = 0.0;
  std::vector<SparseVector> support;  // union of support vectors over all classes
  Tensor coef;                        // [classes, support]: alpha_i * y_i per one-vs-rest machine
  std::vector<double> bias;           // [classes]
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;   // x[feature] <= threshold
  int right = -1;
  std::vector<double> class_counts;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // root at 0

  std::size_t leaf_for(const SparseVector& x) const;
  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct ForestParams {
  std::vector<DecisionTree> trees;
};

using ClassifierParams =
    std::variant<MnbParams, LinearParams, KernelSvmParams, DecisionTree, ForestParams, MlpModel>;

struct ClassifierModel {
  ModelKind kind = ModelKind::mnb;
  std::vector<int> labels;  // ascending; class index i <-> labels[i]
  std::size_t dim = 0;
  ClassifierParams params;

  std::size_t num_classes() const noexcept { return labels.size(); }
};

// --- trainers ---------------------------------------------------------------

/// Multinomial naive Bayes with Laplace smoothing. `declared_classes`, when
/// non-empty, fixes the label set; a declared class without samples is an error.
ClassifierModel train_mnb(const FeatureMatrix& X, std::span<const int> y, double alpha = 1.0,
                          std::span<const int> declared_classes = {});

struct LogregOptions {
  double l2 = 1e-4;
  double learning_rate = 1.0;
  std::size_t max_iter = 500;
  double tol = 1e-6;
};

/// Multinomial logistic regression by full-batch gradient descent on
/// mean cross-entropy + (l2 / 2) * ||W||^2 (bias unregularized).
ClassifierModel train_logreg(const FeatureMatrix& X, std::span<const int> y,
                             const LogregOptions& options = {});

/// Objective and gradient for softmax regression; exposed for gradient checks.
/// `classes` are 0-based indices.
double logreg_objective(const LinearParams& params, const FeatureMatrix& X,
                        std::span<const int> classes, double l2, LinearParams* gradient);

struct LsvcOptions {
  double C = 1.0;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
};

/// One-vs-rest linear SVMs trained by seeded Pegasos SGD on the regularized
/// hinge loss; the bias is an extra constant feature.
ClassifierModel train_lsvc(const FeatureMatrix& X, std::span<const int> y, const LsvcOptions& options = {});

struct SvmOptions {
  double C = 1.0;
  double gamma = 0.0;  // <= 0 selects "scale": 1 / (dim * Var(X))
  double tol = 1e-3;
  std::size_t max_passes = 10;
  std::uint64_t seed = 0;
};

/// Result of one binary SMO solve.
struct SmoSolution {
  std::vector<double> alpha;
  double bias = 0.0;
  std::size_t sweeps = 0;
};

/// Simplified SMO on a precomputed kernel matrix (row-major n x n) with
/// targets in {-1, +1}.
SmoSolution smo_solve(std::span<const double> kernel, std::span<const int> targets, double C,
                      double tol, std::size_t max_passes, std::uint64_t seed);

double rbf_scale_gamma(const FeatureMatrix& X);

/// RBF-kernel SVM, one-vs-rest, each machine solved by smo_solve.
ClassifierModel train_svm_rbf(const FeatureMatrix& X, std::span<const int> y, const SvmOptions& options = {});

struct TreeOptions {
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_samples_split = 2;
  std::uint64_t seed = 0;
};

/// CART with Gini impurity. Thresholds are midpoints between consecutive
/// distinct values; ties go to the lowest feature, then the lowest threshold.
ClassifierModel train_dtree(const FeatureMatrix& X, std::span<const int> y, const TreeOptions& options = {});

struct ForestOptions {
  std::size_t n_trees = 100;
  std::size_t max_features = 0;  // 0 = floor(sqrt(dim)), at least 1
  bool bootstrap = true;
  std::size_t max_depth = 0;
  std::size_t min_samples_split = 2;
  std::uint64_t seed = 0;
};

ClassifierModel train_rforest(const FeatureMatrix& X, std::span<const int> y,
                              const ForestOptions& options = {});

struct MlpOptions {
  std::size_t hidden_units = 100;
  TrainOptions train;
};

ClassifierModel train_mlp(const FeatureMatrix& X, std::span<const int> y, const MlpOptions& options = {});

// --- inference ----------------------------------------------------------------

std::vector<int> predict(const ClassifierModel& model, const FeatureMatrix& X);

/// [n, classes]. Probabilities for mnb, logreg, mlp; vote or leaf fractions for
/// trees and forests; one-vs-rest decision values for lsvc and svm_rbf.
Tensor predict_scores(const ClassifierModel& model, const FeatureMatrix& X);

/// Per-sample vote counts over the forest's trees, [n][classes].
std::vector<std::vector<std::size_t>> forest_votes(const ClassifierModel& model, const FeatureMatrix& X);

/// Lowest index among maximal entries.
std::size_t argmax_first(std::span<const double> values) noexcept;

}  // namespace triage
