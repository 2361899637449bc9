#include "triage/classic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "triage/error.hpp"
#include "triage/random.hpp"

namespace triage {
namespace {

struct KindInfo {
  ModelKind kind;
  std::string_view name;
  std::string_view display;
};

constexpr std::array<KindInfo, 8> kKinds{{
    {ModelKind::mnb, "mnb", "NB"},
    {ModelKind::logreg, "logreg", "LR"},
    {ModelKind::lsvc, "lsvc", "LSVC"},
    {ModelKind::mlp, "mlp", "MLP"},
    {ModelKind::svm_rbf, "svm_rbf", "SVM"},
    {ModelKind::dtree, "dtree", "DT"},
    {ModelKind::rforest, "rforest", "RF"},
    {ModelKind::cnn_lstm, "cnn_lstm", "CNN-LSTM"},
}};

constexpr std::array<ModelKind, 8> kOrder{ModelKind::mnb,     ModelKind::logreg, ModelKind::lsvc,
                                          ModelKind::mlp,     ModelKind::svm_rbf, ModelKind::dtree,
                                          ModelKind::rforest, ModelKind::cnn_lstm};

struct Encoded {
  std::vector<int> labels;   // sorted unique
  std::vector<int> classes;  // per-sample class index
};

Encoded encode_labels(std::span<const int> y) {
  Encoded e;
  std::set<int> unique(y.begin(), y.end());
  e.labels.assign(unique.begin(), unique.end());
  e.classes.reserve(y.size());
  for (int label : y) {
    e.classes.push_back(static_cast<int>(
        std::lower_bound(e.labels.begin(), e.labels.end(), label) - e.labels.begin()));
  }
  return e;
}

std::size_t check_inputs(const FeatureMatrix& X, std::span<const int> y, std::size_t min_classes,
                         std::string_view who) {
  if (X.empty()) throw ValidationError(std::string(who) + ": no training samples");
  if (X.size() != y.size()) throw ValidationError(std::string(who) + ": X and y differ in length");
  const std::size_t dim = X.front().dim;
  for (const auto& x : X) {
    if (x.dim != dim) throw ValidationError(std::string(who) + ": inconsistent feature dimension");
  }
  const std::set<int> unique(y.begin(), y.end());
  if (unique.size() < min_classes) {
    throw ValidationError(std::string(who) + ": needs at least " + std::to_string(min_classes) +
                          " classes");
  }
  return dim;
}

void check_dim(const ClassifierModel& model, const FeatureMatrix& X) {
  for (const auto& x : X) {
    if (x.dim != model.dim) {
      throw ValidationError("feature dimension " + std::to_string(x.dim) +
                            " does not match the model's " + std::to_string(model.dim));
    }
  }
}

// ---------------------------------------------------------------------------
// CART

// Column-major dense copy of the features for split scans.
struct DenseColumns {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> values;  // [dim][n]

  explicit DenseColumns(const FeatureMatrix& X) : n(X.size()), dim(X.front().dim), values(n * dim, 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < X[i].nnz(); ++k) values[X[i].indices[k] * n + i] = X[i].values[k];
    }
  }
  double at(std::size_t feature, std::size_t sample) const { return values[feature * n + sample]; }
};

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double score = -1.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const DenseColumns& cols, std::span<const int> classes, std::size_t num_classes,
              std::size_t max_features, std::size_t max_depth, std::size_t min_split, Rng* rng)
      : cols_(cols), classes_(classes), num_classes_(num_classes), max_features_(max_features),
        max_depth_(max_depth), min_split_(std::max<std::size_t>(2, min_split)), rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> samples) {
    tree_.nodes.clear();
    grow(samples, 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t>& samples, std::size_t depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    std::vector<double> counts(num_classes_, 0.0);
    for (auto s : samples) counts[static_cast<std::size_t>(classes_[s])] += 1.0;
    const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
    const bool depth_limited = max_depth_ > 0 && depth >= max_depth_;
    SplitChoice split;
    if (!pure && !depth_limited && samples.size() >= min_split_) split = best_split(samples, counts);
    if (split.feature < 0) {
      tree_.nodes[id].class_counts = std::move(counts);
      return id;
    }
    std::vector<std::size_t> left, right;
    for (auto s : samples) {
      (cols_.at(static_cast<std::size_t>(split.feature), s) <= split.threshold ? left : right).push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();
    tree_.nodes[id].feature = split.feature;
    tree_.nodes[id].threshold = split.threshold;
    tree_.nodes[id].class_counts = std::move(counts);
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> features(cols_.dim);
    std::iota(features.begin(), features.end(), std::size_t{0});
    if (rng_ != nullptr && max_features_ < cols_.dim) rng_->shuffle(std::span<std::size_t>(features));
    return features;
  }

  // Maximizes sum over children of sum_c n_c^2 / n_child, which is equivalent
  // to maximizing Gini gain at a fixed parent.
  SplitChoice best_split(const std::vector<std::size_t>& samples, const std::vector<double>& counts) {
    const auto order = candidate_features();
    const std::size_t first_batch = std::min(max_features_, order.size());
    SplitChoice best;
    std::vector<std::size_t> batch(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(first_batch));
    std::sort(batch.begin(), batch.end());
    for (auto f : batch) scan_feature(f, samples, counts, best);
    // Keep drawing features until one of them can split the node.
    for (std::size_t k = first_batch; best.feature < 0 && k < order.size(); ++k) {
      scan_feature(order[k], samples, counts, best);
    }
    return best;
  }

  void scan_feature(std::size_t feature, const std::vector<std::size_t>& samples,
                    const std::vector<double>& counts, SplitChoice& best) {
    pairs_.clear();
    for (auto s : samples) pairs_.emplace_back(cols_.at(feature, s), classes_[s]);
    std::sort(pairs_.begin(), pairs_.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (pairs_.front().first == pairs_.back().first) return;
    left_.assign(num_classes_, 0.0);
    const double m = static_cast<double>(pairs_.size());
    for (std::size_t i = 0; i + 1 < pairs_.size(); ++i) {
      left_[static_cast<std::size_t>(pairs_[i].second)] += 1.0;
      if (pairs_[i].first == pairs_[i + 1].first) continue;
      const double nl = static_cast<double>(i + 1);
      const double nr = m - nl;
      double sl = 0.0, sr = 0.0;
      for (std::size_t c = 0; c < num_classes_; ++c) {
        sl += left_[c] * left_[c];
        const double rc = counts[c] - left_[c];
        sr += rc * rc;
      }
      const double score = sl / nl + sr / nr;
      if (score > best.score) {
        double threshold = 0.5 * (pairs_[i].first + pairs_[i + 1].first);
        if (threshold >= pairs_[i + 1].first) threshold = pairs_[i].first;
        best = {static_cast<int>(feature), threshold, score};
      }
    }
  }

  const DenseColumns& cols_;
  std::span<const int> classes_;
  std::size_t num_classes_;
  std::size_t max_features_;
  std::size_t max_depth_;
  std::size_t min_split_;
  Rng* rng_;
  DecisionTree tree_;
  std::vector<std::pair<double, int>> pairs_;
  std::vector<double> left_;
};

const TreeNode& leaf_node(const DecisionTree& tree, const SparseVector& x) {
  return tree.nodes[tree.leaf_for(x)];
}

double feature_value(const SparseVector& x, int feature) {
  const auto f = static_cast<std::uint32_t>(feature);
  const auto it = std::lower_bound(x.indices.begin(), x.indices.end(), f);
  if (it == x.indices.end() || *it != f) return 0.0;
  return x.values[static_cast<std::size_t>(it - x.indices.begin())];
}

// ---------------------------------------------------------------------------
// kernels

double rbf(const SparseVector& a, double norm_a, const SparseVector& b, double norm_b, double gamma) {
  const double dist = std::max(0.0, norm_a + norm_b - 2.0 * dot(a, b));
  return std::exp(-gamma * dist);
}

std::vector<double> softmax(std::vector<double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return z;
}

std::vector<double> linear_scores(const LinearParams& p, const SparseVector& x) {
  const std::size_t C = p.bias.size();
  std::vector<double> z(C);
  for (std::size_t c = 0; c < C; ++c) {
    z[c] = p.bias[c] + x.dot(std::span<const double>(p.weight.row(c), p.weight.dim(1)));
  }
  return z;
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.name;
  }
  return "unknown";
}

std::string_view display_name(ModelKind kind) noexcept {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.display;
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (const auto& k : kKinds) {
    if (k.name == name) return k.kind;
  }
  static const std::map<std::string_view, ModelKind> aliases{
      {"nb", ModelKind::mnb},       {"lr", ModelKind::logreg},   {"svm", ModelKind::svm_rbf},
      {"dt", ModelKind::dtree},     {"rf", ModelKind::rforest},  {"cnn-lstm", ModelKind::cnn_lstm},
      {"cnnlstm", ModelKind::cnn_lstm}};
  if (auto it = aliases.find(name); it != aliases.end()) return it->second;
  std::string valid;
  for (const auto& k : kKinds) valid += (valid.empty() ? "" : ", ") + std::string(k.name);
  throw ValidationError("unknown model '" + std::string(name) + "' (valid: " + valid + ")");
}

std::span<const ModelKind> all_model_kinds() noexcept { return kOrder; }

std::size_t argmax_first(std::span<const double> values) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t DecisionTree::leaf_for(const SparseVector& x) const {
  std::size_t node = 0;
  while (nodes[node].feature >= 0) {
    const auto& n = nodes[node];
    node = static_cast<std::size_t>(feature_value(x, n.feature) <= n.threshold ? n.left : n.right);
  }
  return node;
}

// --- MNB ---------------------------------------------------------------------

ClassifierModel train_mnb(const FeatureMatrix& X, std::span<const int> y, double alpha,
                          std::span<const int> declared_classes) {
  if (!(alpha > 0.0)) throw ValidationError("MNB: alpha must be positive");
  const std::size_t dim = check_inputs(X, y, 1, "MNB");
  Encoded enc = encode_labels(y);
  if (!declared_classes.empty()) {
    std::set<int> declared(declared_classes.begin(), declared_classes.end());
    for (int label : enc.labels) {
      if (!declared.count(label)) throw ValidationError("MNB: label " + std::to_string(label) + " not declared");
    }
    for (int label : declared) {
      if (!std::binary_search(enc.labels.begin(), enc.labels.end(), label)) {
        throw ValidationError("MNB: declared class " + std::to_string(label) + " has no samples");
      }
    }
  }
  const std::size_t C = enc.labels.size();
  MnbParams p;
  p.alpha = alpha;
  p.log_prior.assign(C, 0.0);
  p.log_likelihood = Tensor({C, dim});
  Tensor counts({C, dim});
  std::vector<double> class_docs(C, 0.0);
  for (std::size_t i = 0; i < X.size(); ++i) {
    const auto c = static_cast<std::size_t>(enc.classes[i]);
    class_docs[c] += 1.0;
    for (std::size_t k = 0; k < X[i].nnz(); ++k) {
      if (X[i].values[k] < 0.0) throw ValidationError("MNB: feature values must be non-negative");
      counts(c, X[i].indices[k]) += X[i].values[k];
    }
  }
  const double n = static_cast<double>(X.size());
  for (std::size_t c = 0; c < C; ++c) {
    p.log_prior[c] = std::log(class_docs[c] / n);
    double total = 0.0;
    for (std::size_t f = 0; f < dim; ++f) total += counts(c, f);
    const double denom = std::log(total + alpha * static_cast<double>(dim));
    for (std::size_t f = 0; f < dim; ++f) p.log_likelihood(c, f) = std::log(counts(c, f) + alpha) - denom;
  }
  return {ModelKind::mnb, std::move(enc.labels), dim, std::move(p)};
}

// --- logistic regression ----------------------------------------------------------

double logreg_objective(const LinearParams& params, const FeatureMatrix& X,
                        std::span<const int> classes, double l2, LinearParams* gradient) {
  const std::size_t C = params.bias.size();
  const std::size_t dim = params.weight.dim(1);
  const double inv_n = 1.0 / static_cast<double>(X.size());
  if (gradient != nullptr) {
    gradient->weight = Tensor({C, dim});
    gradient->bias.assign(C, 0.0);
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    auto z = linear_scores(params, X[i]);
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - m);
    const double lse = m + std::log(sum);
    const auto target = static_cast<std::size_t>(classes[i]);
    loss += lse - z[target];
    if (gradient == nullptr) continue;
    for (std::size_t c = 0; c < C; ++c) {
      const double r = (std::exp(z[c] - lse) - (c == target ? 1.0 : 0.0)) * inv_n;
      gradient->bias[c] += r;
      double* g = gradient->weight.row(c);
      for (std::size_t k = 0; k < X[i].nnz(); ++k) g[X[i].indices[k]] += r * X[i].values[k];
    }
  }
  loss *= inv_n;
  double sq = 0.0;
  for (double w : params.weight.values()) sq += w * w;
  loss += 0.5 * l2 * sq;
  if (gradient != nullptr) {
    for (std::size_t i = 0; i < params.weight.size(); ++i) gradient->weight[i] += l2 * params.weight[i];
  }
  return loss;
}

ClassifierModel train_logreg(const FeatureMatrix& X, std::span<const int> y, const LogregOptions& options) {
  const std::size_t dim = check_inputs(X, y, 2, "LR");
  Encoded enc = encode_labels(y);
  const std::size_t C = enc.labels.size();
  LinearParams p;
  p.weight = Tensor({C, dim});
  p.bias.assign(C, 0.0);
  LinearParams grad;
  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    p.loss_history.push_back(logreg_objective(p, X, enc.classes, options.l2, &grad));
    double inf_norm = 0.0;
    for (double g : grad.weight.values()) inf_norm = std::max(inf_norm, std::abs(g));
    for (double g : grad.bias) inf_norm = std::max(inf_norm, std::abs(g));
    if (inf_norm < options.tol) break;
    for (std::size_t i = 0; i < p.weight.size(); ++i) p.weight[i] -= options.learning_rate * grad.weight[i];
    for (std::size_t c = 0; c < C; ++c) p.bias[c] -= options.learning_rate * grad.bias[c];
  }
  return {ModelKind::logreg, std::move(enc.labels), dim, std::move(p)};
}

// --- linear SVC -----------------------------------------------------------------

ClassifierModel train_lsvc(const FeatureMatrix& X, std::span<const int> y, const LsvcOptions& options) {
  if (!(options.C > 0.0)) throw ValidationError("LSVC: C must be positive");
  const std::size_t dim = check_inputs(X, y, 2, "LSVC");
  Encoded enc = encode_labels(y);
  const std::size_t C = enc.labels.size();
  const std::size_t n = X.size();
  const double lambda = 1.0 / (options.C * static_cast<double>(n));
  LinearParams p;
  p.weight = Tensor({C, dim});
  p.bias.assign(C, 0.0);
  std::vector<std::size_t> order(n);
  std::vector<double> v(dim + 1);  // w = scale * v; last entry is the bias weight
  for (std::size_t c = 0; c < C; ++c) {
    std::fill(v.begin(), v.end(), 0.0);
    double scale = 1.0;
    std::uint64_t t = 0;
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
      Rng rng(derive_seed(options.seed, "lsvc.epoch", c * 1000003ULL + epoch));
      rng.shuffle(std::span<std::size_t>(order));
      for (auto i : order) {
        ++t;
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const double target = enc.classes[i] == static_cast<int>(c) ? 1.0 : -1.0;
        const double margin = target * scale * (X[i].dot(std::span<const double>(v.data(), dim)) + v[dim]);
        const double shrink = 1.0 - eta * lambda;
        if (shrink <= 0.0) {
          std::fill(v.begin(), v.end(), 0.0);
          scale = 1.0;
        } else {
          scale *= shrink;
        }
        if (margin < 1.0) {
          const double step = eta * target / scale;
          for (std::size_t k = 0; k < X[i].nnz(); ++k) v[X[i].indices[k]] += step * X[i].values[k];
          v[dim] += step;
        }
        if (scale < 1e-150) {
          for (double& e : v) e *= scale;
          scale = 1.0;
        }
      }
    }
    for (std::size_t f = 0; f < dim; ++f) p.weight(c, f) = scale * v[f];
    p.bias[c] = scale * v[dim];
  }
  return {ModelKind::lsvc, std::move(enc.labels), dim, std::move(p)};
}

// --- RBF SVM ----------------------------------------------------------------------

SmoSolution smo_solve(std::span<const double> kernel, std::span<const int> targets, double C,
                      double tol, std::size_t max_passes, std::uint64_t seed) {
  const std::size_t n = targets.size();
  if (kernel.size() != n * n) throw ValidationError("SMO: kernel matrix must be n x n");
  if (!(C > 0.0)) throw ValidationError("SMO: C must be positive");
  for (int t : targets) {
    if (t != 1 && t != -1) throw ValidationError("SMO: targets must be +1 or -1");
  }
  SmoSolution sol;
  sol.alpha.assign(n, 0.0);
  if (n < 2) return sol;
  auto K = [&](std::size_t i, std::size_t j) { return kernel[i * n + j]; };
  std::vector<double> f(n, 0.0);  // decision values without the bias
  double& b = sol.bias;
  auto& alpha = sol.alpha;
  Rng rng(seed);
  // Simplified SMO gives up after max_passes clean sweeps; the cap bounds
  // pathological inputs that keep making tiny progress.
  const std::size_t max_sweeps = 200 + 20 * n;
  std::size_t passes = 0;
  while (passes < max_passes && sol.sweeps < max_sweeps) {
    ++sol.sweeps;
    std::size_t changed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double yi = targets[i];
      const double Ei = f[i] + b - yi;
      if (!((yi * Ei < -tol && alpha[i] < C) || (yi * Ei > tol && alpha[i] > 0.0))) continue;
      std::size_t j = static_cast<std::size_t>(rng.below(n - 1));
      if (j >= i) ++j;
      const double yj = targets[j];
      const double Ej = f[j] + b - yj;
      const double ai_old = alpha[i];
      const double aj_old = alpha[j];
      double lo, hi;
      if (yi != yj) {
        lo = std::max(0.0, aj_old - ai_old);
        hi = std::min(C, C + aj_old - ai_old);
      } else {
        lo = std::max(0.0, ai_old + aj_old - C);
        hi = std::min(C, ai_old + aj_old);
      }
      if (lo >= hi) continue;
      const double eta = 2.0 * K(i, j) - K(i, i) - K(j, j);
      if (eta >= 0.0) continue;
      double aj = std::clamp(aj_old - yj * (Ei - Ej) / eta, lo, hi);
      if (std::abs(aj - aj_old) < 1e-5) continue;
      double ai = std::clamp(ai_old + yi * yj * (aj_old - aj), 0.0, C);
      const double di = ai - ai_old;
      const double dj = aj - aj_old;
      const double b1 = b - Ei - yi * di * K(i, i) - yj * dj * K(i, j);
      const double b2 = b - Ej - yi * di * K(i, j) - yj * dj * K(j, j);
      if (ai > 0.0 && ai < C) {
        b = b1;
      } else if (aj > 0.0 && aj < C) {
        b = b2;
      } else {
        b = 0.5 * (b1 + b2);
      }
      alpha[i] = ai;
      alpha[j] = aj;
      for (std::size_t k = 0; k < n; ++k) f[k] += yi * di * K(i, k) + yj * dj * K(j, k);
      ++changed;
    }
    passes = changed == 0 ? passes + 1 : 0;
  }
  return sol;
}

double rbf_scale_gamma(const FeatureMatrix& X) {
  if (X.empty()) throw ValidationError("gamma: empty feature matrix");
  const double dim = static_cast<double>(X.front().dim);
  const double count = dim * static_cast<double>(X.size());
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& x : X) {
    for (double v : x.values) {
      sum += v;
      sum_sq += v * v;
    }
  }
  const double mean = sum / count;
  const double var = sum_sq / count - mean * mean;
  return var > 0.0 ? 1.0 / (dim * var) : 1.0;
}

ClassifierModel train_svm_rbf(const FeatureMatrix& X, std::span<const int> y, const SvmOptions& options) {
  const std::size_t dim = check_inputs(X, y, 2, "SVM");
  Encoded enc = encode_labels(y);
  const std::size_t C = enc.labels.size();
  const std::size_t n = X.size();
  KernelSvmParams p;
  p.gamma = options.gamma > 0.0 ? options.gamma : rbf_scale_gamma(X);
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = X[i].squared_norm();
  std::vector<double> kernel(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    kernel[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      kernel[i * n + j] = kernel[j * n + i] = rbf(X[i], norms[i], X[j], norms[j], p.gamma);
    }
  }
  std::vector<std::vector<double>> coef_full(C);
  std::vector<int> targets(n);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < n; ++i) targets[i] = enc.classes[i] == static_cast<int>(c) ? 1 : -1;
    auto sol = smo_solve(kernel, targets, options.C, options.tol, options.max_passes,
                         derive_seed(options.seed, "svm.smo", c));
    coef_full[c].resize(n);
    for (std::size_t i = 0; i < n; ++i) coef_full[c][i] = sol.alpha[i] * targets[i];
    p.bias.push_back(sol.bias);
  }
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < C; ++c) {
      if (coef_full[c][i] != 0.0) {
        support.push_back(i);
        break;
      }
    }
  }
  p.coef = Tensor({C, support.size()});
  for (std::size_t s = 0; s < support.size(); ++s) {
    p.support.push_back(X[support[s]]);
    for (std::size_t c = 0; c < C; ++c) p.coef(c, s) = coef_full[c][support[s]];
  }
  return {ModelKind::svm_rbf, std::move(enc.labels), dim, std::move(p)};
}

// --- trees ------------------------------------------------------------------------

ClassifierModel train_dtree(const FeatureMatrix& X, std::span<const int> y, const TreeOptions& options) {
  const std::size_t dim = check_inputs(X, y, 1, "DT");
  Encoded enc = encode_labels(y);
  const DenseColumns cols(X);
  TreeBuilder builder(cols, enc.classes, enc.labels.size(), dim, options.max_depth,
                      options.min_samples_split, nullptr);
  std::vector<std::size_t> samples(X.size());
  std::iota(samples.begin(), samples.end(), std::size_t{0});
  return {ModelKind::dtree, std::move(enc.labels), dim, builder.build(std::move(samples))};
}

ClassifierModel train_rforest(const FeatureMatrix& X, std::span<const int> y, const ForestOptions& options) {
  if (options.n_trees < 1) throw ValidationError("RF: n_trees must be at least 1");
  const std::size_t dim = check_inputs(X, y, 1, "RF");
  Encoded enc = encode_labels(y);
  const DenseColumns cols(X);
  const std::size_t max_features =
      options.max_features > 0
          ? std::min(options.max_features, dim)
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(dim))));
  ForestParams forest;
  const std::size_t n = X.size();
  for (std::size_t t = 0; t < options.n_trees; ++t) {
    Rng rng(derive_seed(options.seed, "forest.tree", t));
    std::vector<std::size_t> samples(n);
    if (options.bootstrap) {
      for (auto& s : samples) s = static_cast<std::size_t>(rng.below(n));
      std::sort(samples.begin(), samples.end());
    } else {
      std::iota(samples.begin(), samples.end(), std::size_t{0});
    }
    TreeBuilder builder(cols, enc.classes, enc.labels.size(), max_features, options.max_depth,
                        options.min_samples_split, &rng);
    forest.trees.push_back(builder.build(std::move(samples)));
  }
  return {ModelKind::rforest, std::move(enc.labels), dim, std::move(forest)};
}

// --- MLP --------------------------------------------------------------------------

ClassifierModel train_mlp(const FeatureMatrix& X, std::span<const int> y, const MlpOptions& options) {
  const std::size_t dim = check_inputs(X, y, 2, "MLP");
  Encoded enc = encode_labels(y);
  MlpSpec spec{dim, options.hidden_units, enc.labels.size()};
  MlpModel model = build_mlp(spec, derive_seed(options.train.seed, "mlp.init"));
  model = train(std::move(model), X, enc.classes, options.train);
  return {ModelKind::mlp, std::move(enc.labels), dim, std::move(model)};
}

// --- inference --------------------------------------------------------------------

Tensor predict_scores(const ClassifierModel& model, const FeatureMatrix& X) {
  check_dim(model, X);
  const std::size_t C = model.num_classes();
  Tensor scores({X.size(), C});
  if (X.empty()) return scores;
  if (const auto* mlp = std::get_if<MlpModel>(&model.params)) return forward(*mlp, X);
  for (std::size_t i = 0; i < X.size(); ++i) {
    const auto& x = X[i];
    std::vector<double> row(C, 0.0);
    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, MnbParams>) {
            for (std::size_t c = 0; c < C; ++c) {
              row[c] = p.log_prior[c] + x.dot(std::span<const double>(p.log_likelihood.row(c), model.dim));
            }
            row = softmax(std::move(row));
          } else if constexpr (std::is_same_v<P, LinearParams>) {
            row = linear_scores(p, x);
            if (model.kind == ModelKind::logreg) row = softmax(std::move(row));
          } else if constexpr (std::is_same_v<P, KernelSvmParams>) {
            const double nx = x.squared_norm();
            std::vector<double> k(p.support.size());
            for (std::size_t s = 0; s < k.size(); ++s) {
              k[s] = rbf(x, nx, p.support[s], p.support[s].squared_norm(), p.gamma);
            }
            for (std::size_t c = 0; c < C; ++c) {
              double sum = p.bias[c];
              for (std::size_t s = 0; s < k.size(); ++s) sum += p.coef(c, s) * k[s];
              row[c] = sum;
            }
          } else if constexpr (std::is_same_v<P, DecisionTree>) {
            const auto& counts = leaf_node(p, x).class_counts;
            const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
            for (std::size_t c = 0; c < C; ++c) row[c] = counts[c] / total;
          } else if constexpr (std::is_same_v<P, ForestParams>) {
            for (const auto& tree : p.trees) row[argmax_first(leaf_node(tree, x).class_counts)] += 1.0;
            for (double& v : row) v /= static_cast<double>(p.trees.size());
          }
        },
        model.params);
    std::copy(row.begin(), row.end(), scores.row(i));
  }
  return scores;
}

std::vector<int> predict(const ClassifierModel& model, const FeatureMatrix& X) {
  std::vector<int> out;
  out.reserve(X.size());
  if (const auto* tree = std::get_if<DecisionTree>(&model.params)) {
    check_dim(model, X);
    for (const auto& x : X) out.push_back(model.labels[argmax_first(leaf_node(*tree, x).class_counts)]);
    return out;
  }
  if (model.kind == ModelKind::rforest) {
    for (const auto& votes : forest_votes(model, X)) {
      std::vector<double> v(votes.begin(), votes.end());
      out.push_back(model.labels[argmax_first(v)]);
    }
    return out;
  }
  const Tensor scores = predict_scores(model, X);
  const std::size_t C = model.num_classes();
  for (std::size_t i = 0; i < X.size(); ++i) {
    out.push_back(model.labels[argmax_first(std::span<const double>(scores.row(i), C))]);
  }
  return out;
}

std::vector<std::vector<std::size_t>> forest_votes(const ClassifierModel& model, const FeatureMatrix& X) {
  const auto* forest = std::get_if<ForestParams>(&model.params);
  if (forest == nullptr) throw ValidationError("forest_votes: model is not a random forest");
  check_dim(model, X);
  std::vector<std::vector<std::size_t>> votes(X.size(), std::vector<std::size_t>(model.num_classes(), 0));
  for (std::size_t i = 0; i < X.size(); ++i) {
    for (const auto& tree : forest->trees) ++votes[i][argmax_first(leaf_node(tree, X[i]).class_counts)];
  }
  return votes;
}

}  // namespace triage
