#include "triage/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Core>

#include "triage/error.hpp"
#include "triage/random.hpp"

namespace triage {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using StridedMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;
using RowVecMap = Eigen::Map<Eigen::RowVectorXd>;
using ConstRowVecMap = Eigen::Map<const Eigen::RowVectorXd>;

MatMap as_matrix(Tensor& t, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
  return MatMap(t.data() + offset, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
ConstMatMap as_matrix(const Tensor& t, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
  return ConstMatMap(t.data() + offset, static_cast<Eigen::Index>(rows),
                     static_cast<Eigen::Index>(cols));
}
ConstMatMap as_matrix(const Tensor& t) { return as_matrix(t, t.dim(0), t.size() / t.dim(0)); }
MatMap as_matrix(Tensor& t) { return as_matrix(t, t.dim(0), t.size() / t.dim(0)); }
ConstRowVecMap as_row(const Tensor& t) {
  return ConstRowVecMap(t.data(), static_cast<Eigen::Index>(t.size()));
}
RowVecMap as_row(Tensor& t) { return RowVecMap(t.data(), static_cast<Eigen::Index>(t.size())); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void fill_uniform(Tensor& t, Rng& rng, double limit) {
  for (double& v : t.values()) v = rng.uniform(-limit, limit);
}

constexpr double kInitLimit = 0.05;

// Row-wise log-softmax of logits into log_probs and probs.
void softmax_rows(const Tensor& logits, Tensor& log_probs, Tensor& probs) {
  const std::size_t rows = logits.dim(0);
  const std::size_t cols = logits.dim(1);
  log_probs = Tensor({rows, cols});
  probs = Tensor({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    const double* z = logits.row(r);
    const double m = *std::max_element(z, z + cols);
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) sum += std::exp(z[c] - m);
    const double lse = m + std::log(sum);
    for (std::size_t c = 0; c < cols; ++c) {
      log_probs(r, c) = z[c] - lse;
      probs(r, c) = std::exp(log_probs(r, c));
    }
  }
}

void check_targets(const Tensor& targets, std::size_t batch, std::size_t classes) {
  if (targets.rank() != 2 || targets.dim(0) != batch || targets.dim(1) != classes) {
    throw ValidationError("targets must have shape [" + std::to_string(batch) + ", " +
                          std::to_string(classes) + "], got " + targets.shape_string());
  }
  for (std::size_t r = 0; r < batch; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      const double v = targets(r, c);
      if (v != 0.0 && v != 1.0) throw ValidationError("targets must be one-hot rows");
      sum += v;
    }
    if (sum != 1.0) throw ValidationError("targets must be one-hot rows");
  }
}

// Mean cross-entropy and d(loss)/d(logits).
double cross_entropy(const Tensor& log_probs, const Tensor& probs, const Tensor& targets,
                     Tensor& dlogits) {
  const std::size_t rows = probs.dim(0);
  const std::size_t cols = probs.dim(1);
  const double inv = 1.0 / static_cast<double>(rows);
  dlogits = Tensor({rows, cols});
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (targets(r, c) != 0.0) loss -= targets(r, c) * log_probs(r, c);
      dlogits(r, c) = (probs(r, c) - targets(r, c)) * inv;
    }
  }
  return loss * inv;
}

// ---------------------------------------------------------------------------
// CNN-LSTM

struct Dims {
  std::size_t batch, len, embed, kernel, filters, pool, conv_len, steps, units, classes, vocab;
};

Dims dims_of(const ModelSpec& spec, std::size_t batch) {
  return {batch,
          spec.max_len,
          spec.embed_dim,
          spec.kernel_width,
          spec.conv_filters,
          spec.pool_width,
          spec.conv_length(),
          spec.pooled_length(),
          spec.lstm_units,
          spec.num_classes,
          spec.vocab_size};
}

struct CnnLstmCache {
  Dims d{};
  std::vector<std::size_t> token_end;  // one past the last non-PAD position
  std::vector<std::size_t> active;     // conv rows whose window holds a real token
  Tensor embedded;                     // [B, L, E]
  Tensor conv_pre;                     // [B, Lc, F]
  Tensor pooled;                       // [B, S, F]
  std::vector<std::uint32_t> argmax;   // [B, S, F] offset inside the pool window
  Tensor lstm_in;                      // [S, B, F + H]: x_s then h_{s-1}
  Tensor gates;                        // [S, B, 4H] activated i, f, g, o
  Tensor cell;                         // [S + 1, B, H]
  Tensor hidden;                       // [B, H] final state after dropout
  Tensor dropout_mask;                 // [B, H] or empty
  Tensor log_probs;
  Tensor probs;
};

void forward_cnn_lstm(const TrainedModel& model, std::span<const TokenSequence> batch,
                      const DropoutConfig& dropout, CnnLstmCache& cache) {
  const ModelSpec& spec = model.spec;
  if (batch.empty()) throw ValidationError("empty batch");
  const Dims d = dims_of(spec, batch.size());
  cache.d = d;
  const std::size_t B = d.batch, L = d.len, E = d.embed, F = d.filters, H = d.units;
  const std::size_t KE = d.kernel * E;
  const std::size_t XH = F + H;

  cache.token_end.assign(B, 0);
  cache.active.assign(B, 0);
  cache.embedded = Tensor({B, L, E});
  const Tensor& emb = model.params[kEmbedding].value;
  for (std::size_t b = 0; b < B; ++b) {
    const auto& ids = batch[b].ids;
    if (ids.size() != L) {
      throw ValidationError("token sequence length " + std::to_string(ids.size()) +
                            " does not match max_len " + std::to_string(L));
    }
    std::size_t end = 0;
    for (std::size_t t = 0; t < L; ++t) {
      const auto id = ids[t];
      if (id < 0 || static_cast<std::size_t>(id) >= d.vocab) {
        throw ValidationError("token id " + std::to_string(id) + " outside vocabulary of size " +
                              std::to_string(d.vocab));
      }
      if (id != Vocabulary::kPad) {
        end = t + 1;
        std::copy_n(emb.row(static_cast<std::size_t>(id)), E,
                    cache.embedded.data() + (b * L + t) * E);
      }
    }
    cache.token_end[b] = end;
    cache.active[b] = std::min(end, d.conv_len);
  }

  // Convolution as a strided im2col GEMM; windows made only of PAD rows are
  // exactly the bias, so they skip the product.
  cache.conv_pre = Tensor({B, d.conv_len, F});
  const auto conv_w = as_matrix(model.params[kConvWeight].value);
  const auto conv_b = as_row(model.params[kConvBias].value);
  for (std::size_t b = 0; b < B; ++b) {
    auto z = as_matrix(cache.conv_pre, d.conv_len, F, b * d.conv_len * F);
    const auto rows = static_cast<Eigen::Index>(cache.active[b]);
    if (rows > 0) {
      StridedMap cols(cache.embedded.data() + b * L * E, rows, static_cast<Eigen::Index>(KE),
                      Eigen::OuterStride<>(static_cast<Eigen::Index>(E)));
      z.topRows(rows).noalias() = cols * conv_w;
    }
    z.rowwise() += conv_b;
  }

  // ReLU + max-pool; ties go to the first position.
  cache.pooled = Tensor({B, d.steps, F});
  cache.argmax.assign(B * d.steps * F, 0);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t s = 0; s < d.steps; ++s) {
      for (std::size_t f = 0; f < F; ++f) {
        double best = -1.0;
        std::uint32_t arg = 0;
        for (std::size_t j = 0; j < d.pool; ++j) {
          const double a = std::max(0.0, cache.conv_pre[(b * d.conv_len + s * d.pool + j) * F + f]);
          if (a > best) {
            best = a;
            arg = static_cast<std::uint32_t>(j);
          }
        }
        const std::size_t at = (b * d.steps + s) * F + f;
        cache.pooled[at] = best;
        cache.argmax[at] = arg;
      }
    }
  }

  // LSTM over the pooled sequence.
  cache.lstm_in = Tensor({d.steps, B, XH});
  cache.gates = Tensor({d.steps, B, 4 * H});
  cache.cell = Tensor({d.steps + 1, B, H});
  cache.hidden = Tensor({B, H});
  const auto lstm_w = as_matrix(model.params[kLstmWeight].value);
  const auto lstm_b = as_row(model.params[kLstmBias].value);
  RowMatrix pre(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(4 * H));
  for (std::size_t s = 0; s < d.steps; ++s) {
    double* in = cache.lstm_in.data() + s * B * XH;
    for (std::size_t b = 0; b < B; ++b) {
      std::copy_n(cache.pooled.data() + (b * d.steps + s) * F, F, in + b * XH);
    }
    pre.noalias() = as_matrix(cache.lstm_in, B, XH, s * B * XH) * lstm_w;
    pre.rowwise() += lstm_b;
    double* gate = cache.gates.data() + s * B * 4 * H;
    const double* c_prev = cache.cell.data() + s * B * H;
    double* c_next = cache.cell.data() + (s + 1) * B * H;
    for (std::size_t b = 0; b < B; ++b) {
      double* g = gate + b * 4 * H;
      double* h_out = (s + 1 < d.steps) ? cache.lstm_in.data() + (s + 1) * B * XH + b * XH + F
                                        : cache.hidden.data() + b * H;
      for (std::size_t u = 0; u < H; ++u) {
        const double ig = sigmoid(pre(b, u));
        const double fg = sigmoid(pre(b, H + u));
        const double cg = std::tanh(pre(b, 2 * H + u));
        const double og = sigmoid(pre(b, 3 * H + u));
        g[u] = ig;
        g[H + u] = fg;
        g[2 * H + u] = cg;
        g[3 * H + u] = og;
        const double c = fg * c_prev[b * H + u] + ig * cg;
        c_next[b * H + u] = c;
        h_out[u] = og * std::tanh(c);
      }
    }
  }

  cache.dropout_mask = Tensor();
  if (dropout.rate > 0.0) {
    cache.dropout_mask = Tensor({B, H});
    Rng rng(dropout.seed);
    const double keep = 1.0 - dropout.rate;
    for (std::size_t i = 0; i < B * H; ++i) {
      cache.dropout_mask[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
      cache.hidden[i] *= cache.dropout_mask[i];
    }
  }

  Tensor logits({B, d.classes});
  as_matrix(logits).noalias() = as_matrix(cache.hidden) * as_matrix(model.params[kDenseWeight].value);
  as_matrix(logits).rowwise() += as_row(model.params[kDenseBias].value);
  softmax_rows(logits, cache.log_probs, cache.probs);
}

ParameterSet backward_cnn_lstm(const TrainedModel& model, std::span<const TokenSequence> batch,
                               const CnnLstmCache& cache, const Tensor& dlogits) {
  const Dims& d = cache.d;
  const std::size_t B = d.batch, L = d.len, E = d.embed, F = d.filters, H = d.units;
  const std::size_t KE = d.kernel * E;
  const std::size_t XH = F + H;
  ParameterSet grads = zeros_like(model.params);

  // Dense head.
  as_matrix(grads[kDenseWeight].value).noalias() = as_matrix(cache.hidden).transpose() * as_matrix(dlogits);
  as_row(grads[kDenseBias].value) = as_matrix(dlogits).colwise().sum();
  RowMatrix dh = as_matrix(dlogits) * as_matrix(model.params[kDenseWeight].value).transpose();
  if (cache.dropout_mask.size() > 0) dh.array() *= as_matrix(cache.dropout_mask).array();

  // Backpropagation through time.
  Tensor dpre({d.steps, B, 4 * H});
  Tensor dpooled({B, d.steps, F});
  RowMatrix dc = RowMatrix::Zero(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(H));
  RowMatrix dxh(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(XH));
  const auto lstm_w = as_matrix(model.params[kLstmWeight].value);
  for (std::size_t s = d.steps; s-- > 0;) {
    const double* gate = cache.gates.data() + s * B * 4 * H;
    const double* c_prev = cache.cell.data() + s * B * H;
    const double* c_cur = cache.cell.data() + (s + 1) * B * H;
    double* dp = dpre.data() + s * B * 4 * H;
    for (std::size_t b = 0; b < B; ++b) {
      const double* g = gate + b * 4 * H;
      double* dpb = dp + b * 4 * H;
      for (std::size_t u = 0; u < H; ++u) {
        const double ig = g[u], fg = g[H + u], cg = g[2 * H + u], og = g[3 * H + u];
        const double tc = std::tanh(c_cur[b * H + u]);
        const double dhv = dh(b, u);
        const double dcv = dc(b, u) + dhv * og * (1.0 - tc * tc);
        dpb[u] = dcv * cg * ig * (1.0 - ig);
        dpb[H + u] = dcv * c_prev[b * H + u] * fg * (1.0 - fg);
        dpb[2 * H + u] = dcv * ig * (1.0 - cg * cg);
        dpb[3 * H + u] = dhv * tc * og * (1.0 - og);
        dc(b, u) = dcv * fg;
      }
    }
    dxh.noalias() = as_matrix(dpre, B, 4 * H, s * B * 4 * H) * lstm_w.transpose();
    for (std::size_t b = 0; b < B; ++b) {
      std::copy_n(dxh.row(static_cast<Eigen::Index>(b)).data(), F,
                  dpooled.data() + (b * d.steps + s) * F);
    }
    dh = dxh.rightCols(static_cast<Eigen::Index>(H));
  }
  as_matrix(grads[kLstmWeight].value).noalias() =
      as_matrix(cache.lstm_in, d.steps * B, XH).transpose() * as_matrix(dpre, d.steps * B, 4 * H);
  as_row(grads[kLstmBias].value) = as_matrix(dpre, d.steps * B, 4 * H).colwise().sum();

  // Max-pool routes to the argmax, then the ReLU gate.
  Tensor dconv({B, d.conv_len, F});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t s = 0; s < d.steps; ++s) {
      for (std::size_t f = 0; f < F; ++f) {
        const std::size_t at = (b * d.steps + s) * F + f;
        const std::size_t t = s * d.pool + cache.argmax[at];
        const std::size_t zi = (b * d.conv_len + t) * F + f;
        if (cache.conv_pre[zi] > 0.0) dconv[zi] = dpooled[at];
      }
    }
  }

  // Convolution and embedding.
  auto dconv_w = as_matrix(grads[kConvWeight].value);
  const auto conv_w = as_matrix(model.params[kConvWeight].value);
  as_row(grads[kConvBias].value) = as_matrix(dconv, B * d.conv_len, F).colwise().sum();
  Tensor& demb = grads[kEmbedding].value;
  RowMatrix dcols;
  for (std::size_t b = 0; b < B; ++b) {
    const auto rows = static_cast<Eigen::Index>(cache.active[b]);
    if (rows == 0) continue;
    const auto dz = as_matrix(dconv, d.conv_len, F, b * d.conv_len * F).topRows(rows);
    StridedMap cols(cache.embedded.data() + b * L * E, rows, static_cast<Eigen::Index>(KE),
                    Eigen::OuterStride<>(static_cast<Eigen::Index>(E)));
    dconv_w.noalias() += cols.transpose() * dz;
    dcols.noalias() = dz * conv_w.transpose();
    const auto& ids = batch[b].ids;
    for (Eigen::Index t = 0; t < rows; ++t) {
      for (std::size_t j = 0; j < d.kernel; ++j) {
        const std::size_t pos = static_cast<std::size_t>(t) + j;
        const auto id = ids[pos];
        if (id == Vocabulary::kPad) continue;
        double* out = demb.row(static_cast<std::size_t>(id));
        const double* in = dcols.row(t).data() + j * E;
        for (std::size_t e = 0; e < E; ++e) out[e] += in[e];
      }
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// MLP

struct MlpCache {
  Tensor hidden_pre;  // [B, Hm]
  Tensor hidden;      // [B, Hm]
  Tensor log_probs;
  Tensor probs;
};

void forward_mlp(const MlpModel& model, std::span<const SparseVector> batch, MlpCache& cache) {
  if (batch.empty()) throw ValidationError("empty batch");
  const std::size_t B = batch.size();
  const std::size_t Hm = model.spec.hidden_units;
  const std::size_t C = model.spec.num_classes;
  const Tensor& w1 = model.params[kHiddenWeight].value;
  const Tensor& b1 = model.params[kHiddenBias].value;
  cache.hidden_pre = Tensor({B, Hm});
  for (std::size_t b = 0; b < B; ++b) {
    const auto& x = batch[b];
    if (x.dim != model.spec.input_dim) {
      throw ValidationError("input dimension " + std::to_string(x.dim) + " does not match " +
                            std::to_string(model.spec.input_dim));
    }
    double* h = cache.hidden_pre.row(b);
    std::copy_n(b1.data(), Hm, h);
    for (std::size_t k = 0; k < x.nnz(); ++k) {
      const double v = x.values[k];
      const double* w = w1.row(x.indices[k]);
      for (std::size_t u = 0; u < Hm; ++u) h[u] += v * w[u];
    }
  }
  cache.hidden = cache.hidden_pre;
  for (double& v : cache.hidden.values()) v = std::max(0.0, v);
  Tensor logits({B, C});
  as_matrix(logits).noalias() = as_matrix(cache.hidden) * as_matrix(model.params[kOutputWeight].value);
  as_matrix(logits).rowwise() += as_row(model.params[kOutputBias].value);
  softmax_rows(logits, cache.log_probs, cache.probs);
}

ParameterSet backward_mlp(const MlpModel& model, std::span<const SparseVector> batch,
                          const MlpCache& cache, const Tensor& dlogits) {
  ParameterSet grads = zeros_like(model.params);
  const std::size_t Hm = model.spec.hidden_units;
  as_matrix(grads[kOutputWeight].value).noalias() = as_matrix(cache.hidden).transpose() * as_matrix(dlogits);
  as_row(grads[kOutputBias].value) = as_matrix(dlogits).colwise().sum();
  RowMatrix dh = as_matrix(dlogits) * as_matrix(model.params[kOutputWeight].value).transpose();
  dh.array() *= (as_matrix(cache.hidden_pre).array() > 0.0).cast<double>();
  as_row(grads[kHiddenBias].value) = dh.colwise().sum();
  Tensor& dw1 = grads[kHiddenWeight].value;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& x = batch[b];
    const double* g = dh.row(static_cast<Eigen::Index>(b)).data();
    for (std::size_t k = 0; k < x.nnz(); ++k) {
      double* out = dw1.row(x.indices[k]);
      const double v = x.values[k];
      for (std::size_t u = 0; u < Hm; ++u) out[u] += v * g[u];
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------

template <typename Model, typename Input, typename LossFn>
Model train_loop(Model model, std::span<const Input> inputs, std::span<const int> classes,
                 const TrainOptions& options, std::size_t num_classes, LossFn&& loss_fn) {
  if (inputs.empty()) throw ValidationError("cannot train on an empty corpus");
  if (inputs.size() != classes.size()) throw ValidationError("inputs and labels differ in length");
  if (options.batch_size == 0) throw ValidationError("batch size must be positive");
  for (int c : classes) {
    if (c < 0 || static_cast<std::size_t>(c) >= num_classes) {
      throw ValidationError("class index " + std::to_string(c) + " outside 0.." +
                            std::to_string(num_classes - 1));
    }
  }
  AdamState adam = make_adam(model.params, options.adam);
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> history;
  std::vector<Input> batch;
  std::vector<int> batch_classes;
  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    Rng rng(derive_seed(options.seed, "train.shuffle", epoch));
    rng.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      batch.clear();
      batch_classes.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(inputs[order[i]]);
        batch_classes.push_back(classes[order[i]]);
      }
      const Tensor targets = one_hot(batch_classes, num_classes);
      auto result = loss_fn(model, std::span<const Input>(batch), targets, step++);
      total += result.loss * static_cast<double>(end - start);
      if (options.clip_norm > 0.0) clip_global_norm(result.grads, options.clip_norm);
      adam_step(model.params, result.grads, adam);
    }
    history.push_back(total / static_cast<double>(order.size()));
  }
  model.training = {options.seed, options.epochs, options.batch_size, std::move(history)};
  return model;
}

}  // namespace

double clip_global_norm(ParameterSet& grads, double max_norm) {
  double sum_sq = 0.0;
  for (const auto& g : grads) {
    for (double v : g.value.values()) sum_sq += v * v;
  }
  const double norm = std::sqrt(sum_sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& g : grads) {
      for (double& v : g.value.values()) v *= scale;
    }
  }
  return norm;
}

void ModelSpec::validate() const {
  if (vocab_size < Vocabulary::kFirstToken) throw ValidationError("vocab_size must include PAD and OOV");
  if (embed_dim == 0 || conv_filters == 0 || kernel_width == 0 || pool_width == 0 ||
      lstm_units == 0 || max_len == 0) {
    throw ValidationError("model dimensions must be at least 1");
  }
  if (num_classes != 2 && num_classes != 4) throw ValidationError("num_classes must be 2 or 4");
  if (kernel_width > max_len) throw ValidationError("kernel_width exceeds max_len");
  if (pooled_length() == 0) throw ValidationError("pool_width exceeds the convolution output length");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ValidationError("dropout_rate must be in [0, 1)");
}

TrainedModel build_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t H = spec.lstm_units;
  TrainedModel model;
  model.spec = spec;
  model.params = {
      {"embedding", Tensor({spec.vocab_size, spec.embed_dim})},
      {"conv.weight", Tensor({spec.kernel_width * spec.embed_dim, spec.conv_filters})},
      {"conv.bias", Tensor({spec.conv_filters})},
      {"lstm.weight", Tensor({spec.conv_filters + H, 4 * H})},
      {"lstm.bias", Tensor({4 * H})},
      {"dense.weight", Tensor({H, spec.num_classes})},
      {"dense.bias", Tensor({spec.num_classes})},
  };
  for (std::size_t p : {kEmbedding, kConvWeight, kLstmWeight, kDenseWeight}) {
    Rng rng(derive_seed(seed, "init." + model.params[p].name));
    fill_uniform(model.params[p].value, rng, kInitLimit);
  }
  std::fill_n(model.params[kEmbedding].value.row(Vocabulary::kPad), spec.embed_dim, 0.0);
  std::fill_n(model.params[kLstmBias].value.data() + H, H, 1.0);
  model.training.seed = seed;
  return model;
}

Tensor forward(const TrainedModel& model, std::span<const TokenSequence> batch) {
  CnnLstmCache cache;
  forward_cnn_lstm(model, batch, {}, cache);
  return cache.probs;
}

Tensor one_hot(std::span<const int> classes, std::size_t num_classes) {
  Tensor t({classes.size(), num_classes});
  for (std::size_t r = 0; r < classes.size(); ++r) {
    if (classes[r] < 0 || static_cast<std::size_t>(classes[r]) >= num_classes) {
      throw ValidationError("class index out of range");
    }
    t(r, static_cast<std::size_t>(classes[r])) = 1.0;
  }
  return t;
}

LossAndGrads loss_and_grads(const TrainedModel& model, std::span<const TokenSequence> batch,
                            const Tensor& targets, const DropoutConfig& dropout) {
  check_targets(targets, batch.size(), model.spec.num_classes);
  CnnLstmCache cache;
  forward_cnn_lstm(model, batch, dropout, cache);
  Tensor dlogits;
  LossAndGrads out;
  out.loss = cross_entropy(cache.log_probs, cache.probs, targets, dlogits);
  out.grads = backward_cnn_lstm(model, batch, cache, dlogits);
  return out;
}

AdamState make_adam(const ParameterSet& params, const AdamConfig& config) {
  AdamState state;
  state.config = config;
  state.first_moment = zeros_like(params);
  state.second_moment = zeros_like(params);
  return state;
}

void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw ValidationError("Adam: parameter, gradient and moment sets differ in size");
  }
  const AdamConfig& cfg = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& value = params[p].value;
    const auto& grad = grads[p].value;
    auto& m = state.first_moment[p].value;
    auto& v = state.second_moment[p].value;
    if (value.shape() != grad.shape() || value.shape() != m.shape()) {
      throw ValidationError("Adam: shape mismatch for '" + params[p].name + "'");
    }
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

TrainedModel train(TrainedModel model, std::span<const TokenSequence> inputs,
                   std::span<const int> classes, const TrainOptions& options) {
  const double rate = model.spec.dropout_rate;
  const std::size_t num_classes = model.spec.num_classes;
  return train_loop(std::move(model), inputs, classes, options, num_classes,
                    [&](const TrainedModel& m, std::span<const TokenSequence> batch,
                        const Tensor& targets, std::uint64_t step) {
                      return loss_and_grads(m, batch, targets,
                                            {rate, derive_seed(options.seed, "train.dropout", step)});
                    });
}

void MlpSpec::validate() const {
  if (input_dim == 0 || hidden_units == 0) throw ValidationError("MLP dimensions must be at least 1");
  if (num_classes < 2) throw ValidationError("MLP needs at least two classes");
}

MlpModel build_mlp(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  MlpModel model;
  model.spec = spec;
  model.params = {
      {"hidden.weight", Tensor({spec.input_dim, spec.hidden_units})},
      {"hidden.bias", Tensor({spec.hidden_units})},
      {"output.weight", Tensor({spec.hidden_units, spec.num_classes})},
      {"output.bias", Tensor({spec.num_classes})},
  };
  for (std::size_t p : {kHiddenWeight, kOutputWeight}) {
    Rng rng(derive_seed(seed, "init." + model.params[p].name));
    fill_uniform(model.params[p].value, rng, kInitLimit);
  }
  model.training.seed = seed;
  return model;
}

Tensor forward(const MlpModel& model, std::span<const SparseVector> batch) {
  MlpCache cache;
  forward_mlp(model, batch, cache);
  return cache.probs;
}

LossAndGrads loss_and_grads(const MlpModel& model, std::span<const SparseVector> batch,
                            const Tensor& targets) {
  check_targets(targets, batch.size(), model.spec.num_classes);
  MlpCache cache;
  forward_mlp(model, batch, cache);
  Tensor dlogits;
  LossAndGrads out;
  out.loss = cross_entropy(cache.log_probs, cache.probs, targets, dlogits);
  out.grads = backward_mlp(model, batch, cache, dlogits);
  return out;
}

MlpModel train(MlpModel model, std::span<const SparseVector> inputs, std::span<const int> classes,
               const TrainOptions& options) {
  const std::size_t num_classes = model.spec.num_classes;
  return train_loop(std::move(model), inputs, classes, options, num_classes,
                    [](const MlpModel& m, std::span<const SparseVector> batch, const Tensor& targets,
                       std::uint64_t) { return loss_and_grads(m, batch, targets); });
}

}  // namespace triage
