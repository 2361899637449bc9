#include "triage/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "triage/error.hpp"
#include "triage/random.hpp"

namespace triage {
namespace {

using json = nlohmann::json;

std::map<int, std::vector<std::size_t>> indices_by_label(const LabeledCorpus& corpus) {
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < corpus.size(); ++i) by_label[corpus.documents[i].label].push_back(i);
  return by_label;
}

std::vector<int> scheme_labels(LabelScheme scheme) {
  std::vector<int> labels(static_cast<std::size_t>(label_count(scheme)));
  std::iota(labels.begin(), labels.end(), 1);
  return labels;
}

double safe_ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

MetricsReport mean_report(const std::vector<MetricsReport>& folds) {
  MetricsReport mean;
  const double k = static_cast<double>(folds.size());
  bool has_auc = !folds.empty();
  double auc = 0.0;
  for (const auto& f : folds) {
    mean.accuracy += f.accuracy / k;
    mean.precision += f.precision / k;
    mean.recall += f.recall / k;
    mean.f_measure += f.f_measure / k;
    if (f.roc_auc) {
      auc += *f.roc_auc / k;
    } else {
      has_auc = false;
    }
  }
  if (has_auc) mean.roc_auc = auc;
  return mean;
}

json summary_json(const MetricsReport& r) {
  json j = {{"accuracy", r.accuracy}, {"precision", r.precision}, {"recall", r.recall}, {"f_measure", r.f_measure}};
  if (r.roc_auc) j["roc_auc"] = *r.roc_auc;
  return j;
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

}  // namespace

// --- splitting --------------------------------------------------------------------

LabeledCorpus subset(const LabeledCorpus& corpus, std::span<const std::size_t> indices) {
  LabeledCorpus out;
  out.scheme = corpus.scheme;
  out.documents.reserve(indices.size());
  for (auto i : indices) out.documents.push_back(corpus.documents.at(i));
  return out;
}

SplitResult stratified_split(const LabeledCorpus& corpus, double test_frac, std::uint64_t seed) {
  if (!(test_frac > 0.0 && test_frac < 1.0)) throw ValidationError("test fraction must lie in (0, 1)");
  std::vector<bool> is_test(corpus.size(), false);
  for (auto& [label, members] : indices_by_label(corpus)) {
    if (members.size() < 2) {
      throw ValidationError("class " + std::to_string(label) + " has fewer than 2 documents");
    }
    Rng rng(derive_seed(seed, "split", static_cast<std::uint64_t>(label)));
    rng.shuffle(std::span<std::size_t>(members));
    auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(members.size()) * test_frac + 0.5));
    n_test = std::clamp<std::size_t>(n_test, 1, members.size() - 1);
    for (std::size_t i = 0; i < n_test; ++i) is_test[members[i]] = true;
  }
  SplitResult out;
  out.train.scheme = out.test.scheme = corpus.scheme;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    (is_test[i] ? out.test : out.train).documents.push_back(corpus.documents[i]);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
  if (fold >= k) throw ValidationError("fold index out of range");
  std::vector<std::size_t> out;
  out.reserve(fold_of.size());
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) out.push_back(i);
  }
  return out;
}

FoldPlan kfold(const LabeledCorpus& corpus, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("k must be at least 2");
  FoldPlan plan;
  plan.k = k;
  plan.scheme = corpus.scheme;
  plan.seed = seed;
  plan.fold_of.assign(corpus.size(), 0);
  plan.folds.assign(k, {});
  std::size_t dealt = 0;
  for (auto& [label, members] : indices_by_label(corpus)) {
    if (members.size() < k) {
      throw ValidationError("class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                            " documents, fewer than k = " + std::to_string(k));
    }
    Rng rng(derive_seed(seed, "kfold", static_cast<std::uint64_t>(label)));
    rng.shuffle(std::span<std::size_t>(members));
    for (auto i : members) plan.fold_of[i] = dealt++ % k;
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) plan.folds[plan.fold_of[i]].push_back(i);
  return plan;
}

OversampleResult oversample(const LabeledCorpus& train, std::uint64_t seed) {
  OversampleResult out;
  out.corpus = train;
  out.source.resize(train.size());
  std::iota(out.source.begin(), out.source.end(), std::size_t{0});
  const auto by_label = indices_by_label(train);
  std::size_t majority = 0;
  for (const auto& [label, members] : by_label) majority = std::max(majority, members.size());
  for (const auto& [label, members] : by_label) {
    Rng rng(derive_seed(seed, "oversample", static_cast<std::uint64_t>(label)));
    for (std::size_t n = members.size(), dup = 1; n < majority; ++n, ++dup) {
      const std::size_t src = members[static_cast<std::size_t>(rng.below(members.size()))];
      Document copy = train.documents[src];
      copy.id += "#dup" + std::to_string(dup);
      out.corpus.documents.push_back(std::move(copy));
      out.source.push_back(src);
    }
  }
  return out;
}

// --- metrics ----------------------------------------------------------------------

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t sum = 0;
  for (const auto& row : counts) sum += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return sum;
}

std::size_t ConfusionMatrix::tp(std::size_t c) const { return counts.at(c).at(c); }

std::size_t ConfusionMatrix::fp(std::size_t c) const {
  std::size_t sum = 0;
  for (std::size_t r = 0; r < counts.size(); ++r) {
    if (r != c) sum += counts[r].at(c);
  }
  return sum;
}

std::size_t ConfusionMatrix::fn(std::size_t c) const {
  const auto& row = counts.at(c);
  return std::accumulate(row.begin(), row.end(), std::size_t{0}) - row[c];
}

std::size_t ConfusionMatrix::tn(std::size_t c) const { return total() - tp(c) - fp(c) - fn(c); }

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred,
                                 std::span<const int> labels) {
  if (y_true.size() != y_pred.size()) throw ValidationError("y_true and y_pred differ in length");
  ConfusionMatrix cm;
  cm.labels.assign(labels.begin(), labels.end());
  std::sort(cm.labels.begin(), cm.labels.end());
  cm.counts.assign(cm.labels.size(), std::vector<std::size_t>(cm.labels.size(), 0));
  auto index = [&](int label) {
    const auto it = std::lower_bound(cm.labels.begin(), cm.labels.end(), label);
    if (it == cm.labels.end() || *it != label) {
      throw ValidationError("label " + std::to_string(label) + " is not in the label set");
    }
    return static_cast<std::size_t>(it - cm.labels.begin());
  };
  for (std::size_t i = 0; i < y_true.size(); ++i) ++cm.counts[index(y_true[i])][index(y_pred[i])];
  return cm;
}

MetricsReport compute_metrics(std::span<const int> y_true, std::span<const int> y_pred, LabelScheme scheme) {
  if (y_true.size() != y_pred.size()) throw ValidationError("y_true and y_pred differ in length");
  if (y_true.empty()) throw ValidationError("cannot compute metrics on empty input");
  const auto labels = scheme_labels(scheme);
  const ConfusionMatrix cm = confusion_matrix(y_true, y_pred, labels);
  const std::size_t n = cm.total();
  const double total = static_cast<double>(n);
  MetricsReport r;
  std::size_t correct = 0;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    ClassMetrics m;
    m.label = labels[c];
    m.support = cm.tp(c) + cm.fn(c);
    const std::size_t predicted = cm.tp(c) + cm.fp(c);
    if (predicted == 0 && m.support > 0) {
      r.warnings.push_back("label " + std::to_string(m.label) + " was never predicted; precision set to 0");
    }
    m.precision = safe_ratio(cm.tp(c), predicted);
    m.recall = safe_ratio(cm.tp(c), m.support);
    const double pr = m.precision + m.recall;
    m.f_measure = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
    const double w = static_cast<double>(m.support) / total;
    r.precision += w * m.precision;
    r.f_measure += w * m.f_measure;
    correct += cm.tp(c);
    r.per_class.push_back(m);
  }
  // Support-weighted recall sums to TP / N; computing it that way keeps it
  // bit-identical to accuracy.
  r.accuracy = static_cast<double>(correct) / total;
  r.recall = r.accuracy;
  return r;
}

double roc_auc(std::span<const int> y_true, std::span<const double> scores, int positive) {
  if (y_true.size() != scores.size()) throw ValidationError("labels and scores differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1 .. j
    for (std::size_t t = i; t < j; ++t) {
      if (y_true[order[t]] == positive) {
        positive_rank_sum += rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = y_true.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ValidationError("ROC-AUC needs both positive and negative samples");
  const double p = static_cast<double>(n_pos);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(n_neg));
}

// --- experiment -----------------------------------------------------------------------

std::string cell_name(LabelScheme scheme, bool balanced) {
  return std::string(to_string(scheme)) + (balanced ? "/balanced" : "/imbalanced");
}

const CellResult& ExperimentReport::cell(LabelScheme scheme, bool balanced) const {
  for (const auto& c : cells) {
    if (c.scheme == scheme && c.balanced == balanced) return c;
  }
  throw ValidationError("report has no cell " + cell_name(scheme, balanced));
}

const ModelResult& ExperimentReport::result(LabelScheme scheme, bool balanced, ModelKind kind) const {
  for (const auto& m : cell(scheme, balanced).models) {
    if (m.kind == kind) return m;
  }
  throw ValidationError("report has no " + std::string(to_string(kind)) + " row in " + cell_name(scheme, balanced));
}

ExperimentReport run_experiment(const LabeledCorpus& corpus, const ExperimentConfig& config,
                                ExperimentProgress progress, void* user) {
  validate(corpus);
  if (config.models.empty()) throw ValidationError("no models selected");
  if (config.schemes.empty() || config.balance_modes.empty()) throw ValidationError("empty experiment grid");
  ExperimentReport report;
  report.config = config;
  report.documents = corpus.size();

  for (LabelScheme scheme : config.schemes) {
    LabeledCorpus data;
    if (scheme == corpus.scheme) {
      data = corpus;
    } else if (scheme == LabelScheme::two_class) {
      data = merge_labels(corpus);
    } else {
      throw ValidationError("a two-class corpus cannot be evaluated in the four-class scheme");
    }
    for (bool balanced : config.balance_modes) {
      const std::string cell_id = cell_name(scheme, balanced);
      CellResult cell;
      cell.scheme = scheme;
      cell.balanced = balanced;

      LabeledCorpus pool = data;
      if (balanced && config.paper_mode) pool = oversample(data, derive_seed(config.seed, "oversample." + cell_id)).corpus;
      std::vector<TokenList> tokens;
      tokens.reserve(pool.size());
      for (const auto& d : pool.documents) tokens.push_back(preprocess(d.body_text));
      const std::vector<int> labels = pool.labels();

      // Folds depend on the scheme only, so balanced and imbalanced cells share them.
      const FoldPlan plan = kfold(pool, config.k, derive_seed(config.seed, "kfold." + std::string(to_string(scheme))));
      for (const auto& f : plan.folds) cell.fold_sizes.push_back(f.size());

      struct FoldData {
        std::vector<TokenList> train_docs;
        std::vector<int> train_labels;
        std::vector<TokenList> test_docs;
        std::vector<int> test_labels;
      };
      std::vector<FoldData> folds(config.k);
      for (std::size_t f = 0; f < config.k; ++f) {
        std::vector<std::size_t> train_idx = plan.train_indices(f);
        if (balanced && !config.paper_mode) {
          const auto over = oversample(subset(pool, train_idx), derive_seed(config.seed, "oversample." + cell_id, f));
          std::vector<std::size_t> mapped;
          mapped.reserve(over.source.size());
          for (auto s : over.source) mapped.push_back(train_idx[s]);
          train_idx = std::move(mapped);
        }
        for (auto i : train_idx) {
          folds[f].train_docs.push_back(tokens[i]);
          folds[f].train_labels.push_back(labels[i]);
        }
        for (auto i : plan.test_indices(f)) {
          folds[f].test_docs.push_back(tokens[i]);
          folds[f].test_labels.push_back(labels[i]);
        }
      }

      for (ModelKind kind : config.models) {
        ModelResult result;
        result.kind = kind;
        for (std::size_t f = 0; f < config.k; ++f) {
          const auto& fd = folds[f];
          const std::uint64_t seed =
              derive_seed(config.seed, cell_id + "/" + std::string(to_string(kind)), f);
          const TextClassifier model =
              fit_classifier(kind, scheme, fd.train_docs, fd.train_labels, config.model, seed);
          const auto predicted = model.predict(fd.test_docs);
          MetricsReport metrics = compute_metrics(fd.test_labels, predicted, scheme);
          metrics.fold = static_cast<int>(f);
          if (scheme == LabelScheme::two_class) {
            const Tensor scores = model.scores(fd.test_docs);
            std::vector<double> positive(fd.test_docs.size());
            for (std::size_t i = 0; i < positive.size(); ++i) positive[i] = scores(i, 0);  // label 1
            metrics.roc_auc = roc_auc(fd.test_labels, positive, 1);
          }
          result.folds.push_back(std::move(metrics));
          if (progress != nullptr) progress(cell, kind, f, user);
        }
        result.mean = mean_report(result.folds);
        cell.models.push_back(std::move(result));
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

std::vector<double> metric_values(const ModelResult& result, std::string_view metric) {
  std::vector<double> out;
  for (const auto& f : result.folds) {
    if (metric == "accuracy") {
      out.push_back(f.accuracy);
    } else if (metric == "precision") {
      out.push_back(f.precision);
    } else if (metric == "recall") {
      out.push_back(f.recall);
    } else if (metric == "f_measure") {
      out.push_back(f.f_measure);
    } else if (metric == "roc_auc") {
      if (!f.roc_auc) throw ValidationError("ROC-AUC is only reported for two-class cells");
      out.push_back(*f.roc_auc);
    } else {
      throw ValidationError("unknown metric '" + std::string(metric) +
                            "' (valid: accuracy, precision, recall, f_measure, roc_auc)");
    }
  }
  return out;
}

nlohmann::json to_json(const MetricsReport& r) {
  json j = summary_json(r);
  if (r.fold >= 0) j["fold"] = r.fold;
  json per_class = json::array();
  for (const auto& c : r.per_class) {
    per_class.push_back({{"label", c.label},
                         {"support", c.support},
                         {"precision", c.precision},
                         {"recall", c.recall},
                         {"f_measure", c.f_measure}});
  }
  if (!r.per_class.empty()) j["per_class"] = std::move(per_class);
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

nlohmann::json to_json(const ExperimentReport& report) {
  const auto& cfg = report.config;
  json models = json::array();
  for (auto kind : cfg.models) models.push_back(to_string(kind));
  json j = {{"corpus", cfg.corpus_name},
            {"documents", report.documents},
            {"k", cfg.k},
            {"seed", cfg.seed},
            {"paper_mode", cfg.paper_mode},
            {"oversampling", cfg.paper_mode ? "before_split" : "training_folds_only"},
            {"models", models},
            {"model_config_digest", cfg.model.digest()},
            {"epochs", cfg.model.epochs},
            {"batch_size", cfg.model.batch_size}};
  json cells = json::array();
  for (const auto& cell : report.cells) {
    json rows = json::array();
    for (const auto& m : cell.models) {
      json per_fold = {{"accuracy", metric_values(m, "accuracy")},
                       {"precision", metric_values(m, "precision")},
                       {"recall", metric_values(m, "recall")},
                       {"f_measure", metric_values(m, "f_measure")}};
      if (m.mean.roc_auc) per_fold["roc_auc"] = metric_values(m, "roc_auc");
      json folds = json::array();
      for (const auto& f : m.folds) folds.push_back(to_json(f));
      rows.push_back({{"model", to_string(m.kind)},
                      {"name", display_name(m.kind)},
                      {"mean", summary_json(m.mean)},
                      {"per_fold", std::move(per_fold)},
                      {"folds", std::move(folds)}});
    }
    cells.push_back({{"scheme", to_string(cell.scheme)},
                     {"balanced", cell.balanced},
                     {"fold_sizes", cell.fold_sizes},
                     {"results", std::move(rows)}});
  }
  j["cells"] = std::move(cells);
  return j;
}

std::string to_text(const ExperimentReport& report) {
  std::ostringstream out;
  bool first = true;
  for (const auto& cell : report.cells) {
    if (!first) out << '\n';
    first = false;
    const bool two = cell.scheme == LabelScheme::two_class;
    out << (two ? "Two-class" : "Four-class") << ", " << (cell.balanced ? "balanced" : "imbalanced")
        << " (k=" << report.config.k << ", n=" << report.documents
        << (cell.balanced ? (report.config.paper_mode ? ", oversampled before split" : ", oversampled per training fold")
                          : "")
        << ")\n";
    std::vector<std::string> headers{"Model", "Accuracy"};
    if (two) headers.insert(headers.end(), {"Precision", "Recall", "F-measure", "ROC-AUC"});
    std::vector<std::vector<std::string>> rows;
    for (const auto& m : cell.models) {
      std::vector<std::string> row{std::string(display_name(m.kind)), percent(m.mean.accuracy)};
      if (two) {
        row.push_back(percent(m.mean.precision));
        row.push_back(percent(m.mean.recall));
        row.push_back(percent(m.mean.f_measure));
        row.push_back(m.mean.roc_auc ? percent(*m.mean.roc_auc) : "-");
      }
      rows.push_back(std::move(row));
    }
    std::vector<std::size_t> width(headers.size());
    for (std::size_t c = 0; c < headers.size(); ++c) {
      width[c] = headers[c].size();
      for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
    }
    auto emit = [&](const std::vector<std::string>& r) {
      for (std::size_t c = 0; c < r.size(); ++c) {
        if (c == 0) {
          out << std::left << std::setw(static_cast<int>(width[c])) << r[c];
        } else {
          out << "  " << std::right << std::setw(static_cast<int>(width[c])) << r[c];
        }
      }
      out << '\n';
    };
    emit(headers);
    for (const auto& r : rows) emit(r);
  }
  return out.str();
}

}  // namespace triage
