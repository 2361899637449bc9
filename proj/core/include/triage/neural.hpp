#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "triage/tensor.hpp"
#include "triage/textprep.hpp"
#include "triage/vectorize.hpp"

namespace triage {

/// Embedding -> Conv1D (valid) + ReLU -> MaxPool1D -> LSTM (final state) -> dense softmax.
struct ModelSpec {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 100;
  std::size_t conv_filters = 128;
  std::size_t kernel_width = 5;
  std::size_t pool_width = 2;
  std::size_t lstm_units = 128;
  std::size_t num_classes = 2;
  std::size_t max_len = 200;
  double dropout_rate = 0.0;

  /// Throws ValidationError on any zero dimension, num_classes outside {2, 4},
  /// kernel_width > max_len, an empty pooled sequence, or dropout outside [0, 1).
  void validate() const;
  std::size_t conv_length() const noexcept { return max_len - kernel_width + 1; }
  std::size_t pooled_length() const noexcept { return conv_length() / pool_width; }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Order of the CNN-LSTM parameter tensors in a ParameterSet.
enum CnnLstmParam : std::size_t {
  kEmbedding = 0,  // [vocab, embed]
  kConvWeight,     // [kernel * embed, filters]
  kConvBias,       // [filters]
  kLstmWeight,     // [filters + units, 4 * units], gate blocks i, f, g, o
  kLstmBias,       // [4 * units]
  kDenseWeight,    // [units, classes]
  kDenseBias,      // [classes]
};

struct TrainingMetadata {
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
  std::vector<double> loss_history;  // mean training loss per epoch

  friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

struct TrainedModel {
  ModelSpec spec;
  ParameterSet params;
  TrainingMetadata training;

  friend bool operator==(const TrainedModel&, const TrainedModel&) = default;
};

/// Weights uniform in [-0.05, 0.05]; the PAD embedding row and all biases are
/// zero except the LSTM forget-gate bias, which is 1.
TrainedModel build_model(const ModelSpec& spec, std::uint64_t seed);

/// Inverted dropout on the final LSTM state; only active when training.
struct DropoutConfig {
  double rate = 0.0;
  std::uint64_t seed = 0;
};

/// Class probabilities, shape [batch, classes].
Tensor forward(const TrainedModel& model, std::span<const TokenSequence> batch);

/// One-hot targets from 0-based class indices.
Tensor one_hot(std::span<const int> classes, std::size_t num_classes);

struct LossAndGrads {
  double loss = 0.0;
  ParameterSet grads;
};

/// Mean categorical cross-entropy over the batch and its gradient with respect
/// to every parameter. The PAD embedding row always receives a zero gradient.
LossAndGrads loss_and_grads(const TrainedModel& model, std::span<const TokenSequence> batch,
                            const Tensor& targets, const DropoutConfig& dropout = {});

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  ParameterSet first_moment;
  ParameterSet second_moment;
  std::uint64_t step = 0;
};

AdamState make_adam(const ParameterSet& params, const AdamConfig& config = {});

/// Bias-corrected Adam update in place.
void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state);

/// Rescales all gradients together so their joint L2 norm is at most
/// max_norm. Returns the norm before clipping.
double clip_global_norm(ParameterSet& grads, double max_norm);

struct TrainOptions {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  AdamConfig adam;
  double clip_norm = 0.0;  // 0 disables clipping
};

/// Seeded per-epoch shuffle, mini-batches with a trained partial last batch.
/// `classes` are 0-based indices.
TrainedModel train(TrainedModel model, std::span<const TokenSequence> inputs,
                   std::span<const int> classes, const TrainOptions& options);

// ---------------------------------------------------------------------------
// Dense-only network on sparse inputs: input -> dense + ReLU -> dense softmax.

struct MlpSpec {
  std::size_t input_dim = 0;
  std::size_t hidden_units = 100;
  std::size_t num_classes = 2;

  void validate() const;
  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

enum MlpParam : std::size_t { kHiddenWeight = 0, kHiddenBias, kOutputWeight, kOutputBias };

struct MlpModel {
  MlpSpec spec;
  ParameterSet params;
  TrainingMetadata training;

  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

MlpModel build_mlp(const MlpSpec& spec, std::uint64_t seed);
Tensor forward(const MlpModel& model, std::span<const SparseVector> batch);
LossAndGrads loss_and_grads(const MlpModel& model, std::span<const SparseVector> batch,
                            const Tensor& targets);
MlpModel train(MlpModel model, std::span<const SparseVector> inputs, std::span<const int> classes,
               const TrainOptions& options);

}  // namespace triage
