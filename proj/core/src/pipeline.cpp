#include "triage/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include <nlohmann/json.hpp>

#include "triage/error.hpp"
#include "triage/random.hpp"

namespace triage {
namespace {

std::vector<int> scheme_labels(LabelScheme scheme) {
  std::vector<int> labels(static_cast<std::size_t>(label_count(scheme)));
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i) + 1;
  return labels;
}

FeatureKind features_for(ModelKind kind, const ModelConfig& config) {
  switch (kind) {
    case ModelKind::mnb:
      return config.nb_tfidf ? FeatureKind::tfidf : FeatureKind::counts;
    case ModelKind::cnn_lstm:
      return FeatureKind::sequence;
    default:
      return FeatureKind::tfidf;
  }
}

ClassifierModel train_classical(ModelKind kind, const FeatureMatrix& X, std::span<const int> y,
                                std::span<const int> labels, const ModelConfig& config,
                                std::uint64_t seed) {
  switch (kind) {
    case ModelKind::mnb:
      return train_mnb(X, y, config.nb_alpha, labels);
    case ModelKind::logreg:
      return train_logreg(X, y, config.logreg);
    case ModelKind::lsvc:
      return train_lsvc(X, y, {config.lsvc_c, config.lsvc_epochs, derive_seed(seed, "lsvc")});
    case ModelKind::svm_rbf: {
      SvmOptions options;
      options.C = config.svm_c;
      options.gamma = config.svm_gamma;
      options.seed = derive_seed(seed, "svm");
      return train_svm_rbf(X, y, options);
    }
    case ModelKind::dtree:
      return train_dtree(X, y, {config.tree_max_depth, 2, derive_seed(seed, "dtree")});
    case ModelKind::rforest: {
      ForestOptions options;
      options.n_trees = config.forest_trees;
      options.max_depth = config.tree_max_depth;
      options.seed = derive_seed(seed, "rforest");
      return train_rforest(X, y, options);
    }
    case ModelKind::mlp: {
      MlpOptions options;
      options.hidden_units = config.mlp_hidden;
      options.train.epochs = config.epochs;
      options.train.batch_size = config.batch_size;
      options.train.seed = derive_seed(seed, "mlp");
      options.train.adam.learning_rate = config.learning_rate;
      return train_mlp(X, y, options);
    }
    case ModelKind::cnn_lstm:
      break;
  }
  throw ValidationError("not a classical model: " + std::string(to_string(kind)));
}

}  // namespace

std::string ModelConfig::digest() const {
  const nlohmann::json j = {
      {"epochs", epochs},         {"batch_size", batch_size},       {"max_len", max_len},
      {"fit_max_len", fit_max_len}, {"embed_dim", embed_dim},       {"conv_filters", conv_filters},
      {"kernel_width", kernel_width}, {"pool_width", pool_width},   {"lstm_units", lstm_units},
      {"dropout", dropout},       {"learning_rate", learning_rate}, {"clip_norm", clip_norm},
      {"nb_alpha", nb_alpha},     {"nb_tfidf", nb_tfidf},
      {"logreg_l2", logreg.l2},   {"logreg_lr", logreg.learning_rate},
      {"logreg_max_iter", logreg.max_iter}, {"logreg_tol", logreg.tol}, {"lsvc_c", lsvc_c},
      {"lsvc_epochs", lsvc_epochs}, {"svm_c", svm_c},               {"svm_gamma", svm_gamma},
      {"tree_max_depth", tree_max_depth}, {"forest_trees", forest_trees}, {"mlp_hidden", mlp_hidden}};
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

std::string_view to_string(FeatureKind kind) noexcept {
  switch (kind) {
    case FeatureKind::counts:
      return "counts";
    case FeatureKind::tfidf:
      return "tfidf";
    case FeatureKind::sequence:
      return "sequence";
  }
  return "unknown";
}

FeatureKind parse_feature_kind(std::string_view name) {
  for (auto kind : {FeatureKind::counts, FeatureKind::tfidf, FeatureKind::sequence}) {
    if (to_string(kind) == name) return kind;
  }
  throw ValidationError("unknown feature kind '" + std::string(name) + "'");
}

TokenList TextPipeline::tokens(std::string_view raw_text) { return preprocess(extract_body(raw_text)); }

FeatureMatrix TextPipeline::vectorize(std::span<const TokenList> docs) const {
  FeatureMatrix X;
  X.reserve(docs.size());
  for (const auto& doc : docs) {
    X.push_back(features == FeatureKind::counts ? count_vector(tfidf.vocab, doc) : transform_tfidf(tfidf, doc));
  }
  return X;
}

std::vector<TokenSequence> TextPipeline::encode(std::span<const TokenList> docs) const {
  std::vector<TokenSequence> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) out.push_back(triage::encode(doc, tfidf.vocab, max_len));
  return out;
}

bool TextClassifier::probabilistic() const noexcept {
  switch (kind) {
    case ModelKind::mnb:
    case ModelKind::logreg:
    case ModelKind::mlp:
    case ModelKind::cnn_lstm:
      return true;
    default:
      return false;
  }
}

Tensor TextClassifier::scores(std::span<const TokenList> docs) const {
  if (const auto* neural = std::get_if<TrainedModel>(&model)) return forward(*neural, pipeline.encode(docs));
  return predict_scores(std::get<ClassifierModel>(model), pipeline.vectorize(docs));
}

std::vector<int> TextClassifier::predict(std::span<const TokenList> docs) const {
  if (const auto* classical = std::get_if<ClassifierModel>(&model)) {
    return triage::predict(*classical, pipeline.vectorize(docs));
  }
  const Tensor s = scores(docs);
  std::vector<int> out;
  out.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    out.push_back(labels[argmax_first(std::span<const double>(s.row(i), labels.size()))]);
  }
  return out;
}

Prediction TextClassifier::predict_text(std::string_view raw_text) const {
  const TokenList doc = TextPipeline::tokens(raw_text);
  if (doc.empty()) throw ValidationError("empty document");
  const std::span<const TokenList> one(&doc, 1);
  Prediction p;
  p.label = predict(one).front();
  p.labels = labels;
  const Tensor s = scores(one);
  p.scores.assign(s.data(), s.data() + s.size());
  return p;
}

std::vector<double> TextClassifier::loss_history() const {
  if (const auto* neural = std::get_if<TrainedModel>(&model)) return neural->training.loss_history;
  const auto& params = std::get<ClassifierModel>(model).params;
  if (const auto* mlp = std::get_if<MlpModel>(&params)) return mlp->training.loss_history;
  if (const auto* linear = std::get_if<LinearParams>(&params)) return linear->loss_history;
  return {};
}

TextClassifier fit_classifier(ModelKind kind, const LabeledCorpus& train, const ModelConfig& config,
                              std::uint64_t seed) {
  std::vector<TokenList> docs;
  docs.reserve(train.size());
  for (const auto& d : train.documents) docs.push_back(preprocess(d.body_text));
  const auto labels = train.labels();
  return fit_classifier(kind, train.scheme, docs, labels, config, seed);
}

TextClassifier fit_classifier(ModelKind kind, LabelScheme scheme, std::span<const TokenList> docs,
                              std::span<const int> labels, const ModelConfig& config, std::uint64_t seed) {
  if (docs.empty()) throw ValidationError("cannot train on an empty corpus");
  if (docs.size() != labels.size()) throw ValidationError("documents and labels differ in length");
  TextClassifier out;
  out.kind = kind;
  out.scheme = scheme;
  out.labels = scheme_labels(scheme);
  out.seed = seed;
  out.config_digest = config.digest();
  const std::set<int> present(labels.begin(), labels.end());
  for (int label : present) {
    if (label < 1 || label > label_count(scheme)) {
      throw ValidationError("label " + std::to_string(label) + " is outside the " +
                            std::string(to_string(scheme)) + " scheme");
    }
  }
  if (present.size() != out.labels.size()) {
    throw ValidationError("training data must contain every " + std::string(to_string(scheme)) + " label");
  }

  out.pipeline.features = features_for(kind, config);
  out.pipeline.tfidf = fit_tfidf(docs);
  if (kind != ModelKind::cnn_lstm) {
    const FeatureMatrix X = out.pipeline.vectorize(docs);
    out.model = train_classical(kind, X, labels, out.labels, config, seed);
    return out;
  }

  std::size_t max_len = config.max_len;
  if (config.fit_max_len) {
    std::size_t longest = 0;
    for (const auto& d : docs) longest = std::max(longest, d.size());
    // keep at least one pooled step
    max_len = std::min(max_len, std::max(longest, config.kernel_width + config.pool_width - 1));
  }
  out.pipeline.max_len = max_len;
  ModelSpec spec;
  spec.vocab_size = out.pipeline.tfidf.vocab.size();
  spec.embed_dim = config.embed_dim;
  spec.conv_filters = config.conv_filters;
  spec.kernel_width = config.kernel_width;
  spec.pool_width = config.pool_width;
  spec.lstm_units = config.lstm_units;
  spec.num_classes = out.labels.size();
  spec.max_len = max_len;
  spec.dropout_rate = config.dropout;
  spec.validate();

  std::vector<int> classes;
  classes.reserve(labels.size());
  for (int label : labels) classes.push_back(label - 1);
  TrainOptions options;
  options.epochs = config.epochs;
  options.batch_size = config.batch_size;
  options.seed = derive_seed(seed, "cnn_lstm.train");
  options.adam.learning_rate = config.learning_rate;
  options.clip_norm = config.clip_norm;
  out.model = train(build_model(spec, derive_seed(seed, "cnn_lstm.init")), out.pipeline.encode(docs), classes,
                    options);
  return out;
}

}  // namespace triage
