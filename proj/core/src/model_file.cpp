#include "triage/model_file.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <fstream>
#include <iterator>
#include <sstream>

#include <nlohmann/json.hpp>

#include "triage/error.hpp"
#include "triage/random.hpp"

namespace triage {
namespace {

using json = nlohmann::json;

constexpr std::string_view kMagic = "TRIA";

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(std::string_view bytes, std::size_t offset, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + static_cast<std::size_t>(i)])) << (8 * i);
  }
  return v;
}

class TensorWriter {
 public:
  void add(const std::string& name, const Tensor& t) { add(name, t.shape(), t.values()); }

  void add(const std::string& name, std::vector<std::size_t> shape, std::span<const double> values) {
    manifest_.push_back({{"name", name}, {"shape", shape}, {"offset", payload_.size()}});
    for (double v : values) put_u64(payload_, std::bit_cast<std::uint64_t>(v));
  }

  void add(const std::string& name, const std::vector<double>& values) {
    add(name, {values.size()}, values);
  }

  json manifest() const { return manifest_; }
  const std::string& payload() const { return payload_; }

 private:
  json manifest_ = json::array();
  std::string payload_;
};

class TensorReader {
 public:
  TensorReader(const json& manifest, std::string_view payload) : payload_(payload) {
    for (const auto& entry : manifest) entries_[entry.at("name").get<std::string>()] = entry;
  }

  Tensor get(const std::string& name) const {
    const auto it = entries_.find(name);
    if (it == entries_.end()) throw ValidationError("model file lacks array '" + name + "'");
    const auto shape = it->second.at("shape").get<std::vector<std::size_t>>();
    const auto offset = it->second.at("offset").get<std::size_t>();
    std::size_t count = 1;
    for (auto d : shape) count *= d;
    if (offset % 8 != 0 || offset > payload_.size() || count > (payload_.size() - offset) / 8) {
      throw ValidationError("model file array '" + name + "' lies outside the payload");
    }
    Tensor t(shape.empty() ? std::vector<std::size_t>{0} : shape);
    for (std::size_t i = 0; i < count; ++i) t[i] = std::bit_cast<double>(get_le(payload_, offset + 8 * i, 8));
    return t;
  }

  std::vector<double> vec(const std::string& name) const {
    const Tensor t = get(name);
    return {t.values().begin(), t.values().end()};
  }

 private:
  std::string_view payload_;
  std::map<std::string, json> entries_;
};

std::size_t as_index(double v) {
  if (!(v >= 0.0) || v != std::floor(v)) throw ValidationError("model file holds a malformed index");
  return static_cast<std::size_t>(v);
}

void write_params(TensorWriter& w, const ParameterSet& params) {
  for (const auto& p : params) w.add(p.name, p.value);
}

ParameterSet read_params(const TensorReader& r, const ParameterSet& layout) {
  ParameterSet out = layout;
  for (auto& p : out) {
    Tensor t = r.get(p.name);
    if (t.shape() != p.value.shape()) {
      throw ValidationError("array '" + p.name + "' has shape " + t.shape_string() + ", expected " +
                            p.value.shape_string());
    }
    p.value = std::move(t);
  }
  return out;
}

void write_trees(TensorWriter& w, const std::vector<DecisionTree>& trees, std::size_t classes) {
  std::vector<double> sizes, feature, threshold, left, right, counts;
  for (const auto& tree : trees) {
    sizes.push_back(static_cast<double>(tree.nodes.size()));
    for (const auto& n : tree.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      counts.insert(counts.end(), n.class_counts.begin(), n.class_counts.end());
    }
  }
  w.add("trees.sizes", sizes);
  w.add("trees.feature", feature);
  w.add("trees.threshold", threshold);
  w.add("trees.left", left);
  w.add("trees.right", right);
  w.add("trees.class_counts", {feature.size(), classes}, counts);
}

std::vector<DecisionTree> read_trees(const TensorReader& r, std::size_t classes) {
  const auto sizes = r.vec("trees.sizes");
  const auto feature = r.vec("trees.feature");
  const auto threshold = r.vec("trees.threshold");
  const auto left = r.vec("trees.left");
  const auto right = r.vec("trees.right");
  const Tensor counts = r.get("trees.class_counts");
  const std::size_t total = feature.size();
  if (threshold.size() != total || left.size() != total || right.size() != total ||
      counts.size() != total * classes) {
    throw ValidationError("inconsistent tree arrays in model file");
  }
  std::vector<DecisionTree> trees;
  std::size_t at = 0;
  for (double s : sizes) {
    const std::size_t n = as_index(s);
    if (n == 0 || at + n > total) throw ValidationError("inconsistent tree sizes in model file");
    DecisionTree tree;
    for (std::size_t i = 0; i < n; ++i, ++at) {
      TreeNode node;
      node.feature = static_cast<int>(feature[at]);
      node.threshold = threshold[at];
      node.left = static_cast<int>(left[at]);
      node.right = static_cast<int>(right[at]);
      node.class_counts.assign(counts.row(at), counts.row(at) + classes);
      if (node.feature >= 0 && (node.left <= static_cast<int>(i) || node.right <= static_cast<int>(i) ||
                                node.left >= static_cast<int>(n) || node.right >= static_cast<int>(n))) {
        throw ValidationError("tree node links out of range in model file");
      }
      tree.nodes.push_back(std::move(node));
    }
    trees.push_back(std::move(tree));
  }
  if (at != total) throw ValidationError("inconsistent tree sizes in model file");
  return trees;
}

json spec_json(const ModelSpec& s) {
  return {{"vocab_size", s.vocab_size},     {"embed_dim", s.embed_dim},   {"conv_filters", s.conv_filters},
          {"kernel_width", s.kernel_width}, {"pool_width", s.pool_width}, {"lstm_units", s.lstm_units},
          {"num_classes", s.num_classes},   {"max_len", s.max_len},       {"dropout_rate", s.dropout_rate}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec s;
  s.vocab_size = j.at("vocab_size").get<std::size_t>();
  s.embed_dim = j.at("embed_dim").get<std::size_t>();
  s.conv_filters = j.at("conv_filters").get<std::size_t>();
  s.kernel_width = j.at("kernel_width").get<std::size_t>();
  s.pool_width = j.at("pool_width").get<std::size_t>();
  s.lstm_units = j.at("lstm_units").get<std::size_t>();
  s.num_classes = j.at("num_classes").get<std::size_t>();
  s.max_len = j.at("max_len").get<std::size_t>();
  s.dropout_rate = j.at("dropout_rate").get<double>();
  s.validate();
  return s;
}

json training_json(const TrainingMetadata& t) {
  return {{"seed", t.seed}, {"epochs", t.epochs}, {"batch_size", t.batch_size}};
}

TrainingMetadata training_from_json(const json& j, const TensorReader& r) {
  TrainingMetadata t;
  t.seed = j.at("seed").get<std::uint64_t>();
  t.epochs = j.at("epochs").get<std::size_t>();
  t.batch_size = j.at("batch_size").get<std::size_t>();
  t.loss_history = r.vec("training.loss_history");
  return t;
}

}  // namespace

std::string serialize_model(const TextClassifier& model) {
  TensorWriter w;
  json body = json::object();
  const auto& p = model.pipeline;
  w.add("tfidf.idf", p.tfidf.idf);

  if (const auto* neural = std::get_if<TrainedModel>(&model.model)) {
    body["spec"] = spec_json(neural->spec);
    body["training"] = training_json(neural->training);
    w.add("training.loss_history", neural->training.loss_history);
    write_params(w, neural->params);
  } else {
    const auto& cm = std::get<ClassifierModel>(model.model);
    body["dim"] = cm.dim;
    body["class_labels"] = cm.labels;
    std::visit(
        [&](const auto& params) {
          using P = std::decay_t<decltype(params)>;
          if constexpr (std::is_same_v<P, MnbParams>) {
            body["alpha"] = params.alpha;
            w.add("mnb.log_prior", params.log_prior);
            w.add("mnb.log_likelihood", params.log_likelihood);
          } else if constexpr (std::is_same_v<P, LinearParams>) {
            w.add("linear.weight", params.weight);
            w.add("linear.bias", params.bias);
            w.add("training.loss_history", params.loss_history);
          } else if constexpr (std::is_same_v<P, KernelSvmParams>) {
            std::vector<double> offsets{0.0}, indices, values;
            for (const auto& sv : params.support) {
              for (std::size_t k = 0; k < sv.nnz(); ++k) {
                indices.push_back(sv.indices[k]);
                values.push_back(sv.values[k]);
              }
              offsets.push_back(static_cast<double>(indices.size()));
            }
            w.add("svm.gamma", std::vector<double>{params.gamma});
            w.add("svm.support.offsets", offsets);
            w.add("svm.support.indices", indices);
            w.add("svm.support.values", values);
            w.add("svm.coef", params.coef);
            w.add("svm.bias", params.bias);
          } else if constexpr (std::is_same_v<P, DecisionTree>) {
            write_trees(w, {params}, cm.labels.size());
          } else if constexpr (std::is_same_v<P, ForestParams>) {
            write_trees(w, params.trees, cm.labels.size());
          } else if constexpr (std::is_same_v<P, MlpModel>) {
            body["mlp"] = {{"input_dim", params.spec.input_dim},
                           {"hidden_units", params.spec.hidden_units},
                           {"num_classes", params.spec.num_classes}};
            body["training"] = training_json(params.training);
            w.add("training.loss_history", params.training.loss_history);
            write_params(w, params.params);
          }
        },
        cm.params);
  }

  json pipeline = {{"preprocess", "extract_body+clean+whitespace"},
                   {"features", to_string(p.features)},
                   {"vocabulary", p.tfidf.vocab.to_json()},
                   {"documents", p.tfidf.documents}};
  if (p.features == FeatureKind::sequence) pipeline["max_len"] = p.max_len;

  const std::string& payload = w.payload();
  char checksum[17];
  std::snprintf(checksum, sizeof checksum, "%016llx", static_cast<unsigned long long>(fnv1a(payload)));
  const json header = {{"kind", to_string(model.kind)},
                       {"scheme", to_string(model.scheme)},
                       {"labels", model.labels},
                       {"seed", model.seed},
                       {"config_digest", model.config_digest},
                       {"pipeline", std::move(pipeline)},
                       {"model", std::move(body)},
                       {"tensors", w.manifest()},
                       {"payload_bytes", payload.size()},
                       {"payload_fnv1a", checksum}};
  const std::string header_text = header.dump();

  std::string out(kMagic);
  put_u32(out, kModelFileVersion);
  put_u64(out, header_text.size());
  out += header_text;
  out += payload;
  return out;
}

TextClassifier deserialize_model(std::string_view bytes) {
  if (bytes.size() < 16 || bytes.substr(0, 4) != kMagic) throw ValidationError("not a triage model file");
  const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
  if (version != kModelFileVersion) {
    throw ValidationError("unsupported model file version " + std::to_string(version) + " (expected " +
                          std::to_string(kModelFileVersion) + ")");
  }
  const std::uint64_t header_len = get_le(bytes, 8, 8);
  if (header_len > bytes.size() - 16) throw ValidationError("model file is truncated");
  json header;
  try {
    header = json::parse(bytes.substr(16, header_len));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model file header is corrupted: ") + e.what());
  }
  const std::string_view payload = bytes.substr(16 + header_len);

  try {
    if (header.at("payload_bytes").get<std::size_t>() != payload.size()) {
      throw ValidationError("model file is truncated");
    }
    char checksum[17];
    std::snprintf(checksum, sizeof checksum, "%016llx", static_cast<unsigned long long>(fnv1a(payload)));
    if (header.at("payload_fnv1a").get<std::string>() != checksum) {
      throw ValidationError("model file payload checksum mismatch");
    }
    const TensorReader r(header.at("tensors"), payload);

    TextClassifier out;
    out.kind = parse_model_kind(header.at("kind").get<std::string>());
    out.scheme = parse_scheme(header.at("scheme").get<std::string>());
    out.labels = header.at("labels").get<std::vector<int>>();
    out.seed = header.at("seed").get<std::uint64_t>();
    out.config_digest = header.at("config_digest").get<std::string>();

    const auto& pj = header.at("pipeline");
    out.pipeline.features = parse_feature_kind(pj.at("features").get<std::string>());
    out.pipeline.tfidf.vocab = Vocabulary::from_json(pj.at("vocabulary"));
    out.pipeline.tfidf.documents = pj.at("documents").get<std::size_t>();
    out.pipeline.tfidf.idf = r.vec("tfidf.idf");
    if (out.pipeline.tfidf.idf.size() != out.pipeline.tfidf.vocab.token_count()) {
      throw ValidationError("idf length does not match the vocabulary");
    }
    if (out.pipeline.features == FeatureKind::sequence) out.pipeline.max_len = pj.at("max_len").get<std::size_t>();

    const auto& body = header.at("model");
    if (out.kind == ModelKind::cnn_lstm) {
      TrainedModel m;
      m.spec = spec_from_json(body.at("spec"));
      if (m.spec.vocab_size != out.pipeline.tfidf.vocab.size() || m.spec.max_len != out.pipeline.max_len) {
        throw ValidationError("network shape does not match the stored preprocessing");
      }
      m.params = read_params(r, build_model(m.spec, 0).params);
      m.training = training_from_json(body.at("training"), r);
      out.model = std::move(m);
      return out;
    }

    ClassifierModel cm;
    cm.kind = out.kind;
    cm.dim = body.at("dim").get<std::size_t>();
    cm.labels = body.at("class_labels").get<std::vector<int>>();
    if (cm.dim != out.pipeline.tfidf.vocab.token_count()) {
      throw ValidationError("feature dimension does not match the stored vocabulary");
    }
    const std::size_t C = cm.labels.size();
    auto expect_shape = [](const Tensor& t, std::vector<std::size_t> shape, const char* what) {
      if (t.shape() != shape) throw ValidationError(std::string("array ") + what + " has the wrong shape");
    };
    switch (out.kind) {
      case ModelKind::mnb: {
        MnbParams p;
        p.alpha = body.at("alpha").get<double>();
        p.log_prior = r.vec("mnb.log_prior");
        p.log_likelihood = r.get("mnb.log_likelihood");
        expect_shape(p.log_likelihood, {C, cm.dim}, "mnb.log_likelihood");
        if (p.log_prior.size() != C) throw ValidationError("array mnb.log_prior has the wrong shape");
        cm.params = std::move(p);
        break;
      }
      case ModelKind::logreg:
      case ModelKind::lsvc: {
        LinearParams p;
        p.weight = r.get("linear.weight");
        p.bias = r.vec("linear.bias");
        p.loss_history = r.vec("training.loss_history");
        expect_shape(p.weight, {C, cm.dim}, "linear.weight");
        if (p.bias.size() != C) throw ValidationError("array linear.bias has the wrong shape");
        cm.params = std::move(p);
        break;
      }
      case ModelKind::svm_rbf: {
        KernelSvmParams p;
        const auto gamma = r.vec("svm.gamma");
        if (gamma.size() != 1) throw ValidationError("array svm.gamma has the wrong shape");
        p.gamma = gamma[0];
        const auto offsets = r.vec("svm.support.offsets");
        const auto indices = r.vec("svm.support.indices");
        const auto values = r.vec("svm.support.values");
        if (offsets.empty() || indices.size() != values.size() || as_index(offsets.back()) != indices.size()) {
          throw ValidationError("inconsistent support vectors in model file");
        }
        for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
          SparseVector sv;
          sv.dim = cm.dim;
          const std::size_t lo = as_index(offsets[s]);
          const std::size_t hi = as_index(offsets[s + 1]);
          if (lo > hi || hi > indices.size()) throw ValidationError("inconsistent support vectors in model file");
          for (std::size_t k = lo; k < hi; ++k) {
            const std::size_t idx = as_index(indices[k]);
            if (idx >= cm.dim) throw ValidationError("support vector index out of range");
            sv.indices.push_back(static_cast<std::uint32_t>(idx));
            sv.values.push_back(values[k]);
          }
          p.support.push_back(std::move(sv));
        }
        p.coef = r.get("svm.coef");
        p.bias = r.vec("svm.bias");
        expect_shape(p.coef, {C, p.support.size()}, "svm.coef");
        if (p.bias.size() != C) throw ValidationError("array svm.bias has the wrong shape");
        cm.params = std::move(p);
        break;
      }
      case ModelKind::dtree: {
        auto trees = read_trees(r, C);
        if (trees.size() != 1) throw ValidationError("a decision tree file must hold exactly one tree");
        cm.params = std::move(trees.front());
        break;
      }
      case ModelKind::rforest:
        cm.params = ForestParams{read_trees(r, C)};
        break;
      case ModelKind::mlp: {
        MlpModel m;
        const auto& mj = body.at("mlp");
        m.spec = {mj.at("input_dim").get<std::size_t>(), mj.at("hidden_units").get<std::size_t>(),
                  mj.at("num_classes").get<std::size_t>()};
        m.spec.validate();
        if (m.spec.input_dim != cm.dim || m.spec.num_classes != C) {
          throw ValidationError("MLP shape does not match the stored preprocessing");
        }
        m.params = read_params(r, build_mlp(m.spec, 0).params);
        m.training = training_from_json(body.at("training"), r);
        cm.params = std::move(m);
        break;
      }
      case ModelKind::cnn_lstm:
        break;
    }
    out.model = std::move(cm);
    return out;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model file header is malformed: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const TextClassifier& model) {
  const std::string bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed to write '" + path.string() + "'");
}

TextClassifier load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace triage
