#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "gradcheck.hpp"
#include "triage/error.hpp"
#include "triage/neural.hpp"
#include "triage/pipeline.hpp"
#include "triage/random.hpp"

namespace triage {
namespace {

ModelSpec micro_spec(std::size_t classes = 4) {
  ModelSpec s;
  s.vocab_size = 20;
  s.embed_dim = 4;
  s.conv_filters = 3;
  s.kernel_width = 3;
  s.pool_width = 2;
  s.lstm_units = 5;
  s.num_classes = classes;
  s.max_len = 8;
  return s;
}

std::vector<TokenSequence> random_batch(std::size_t n, const ModelSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TokenSequence> batch;
  for (std::size_t b = 0; b < n; ++b) {
    TokenSequence seq;
    seq.ids.assign(spec.max_len, Vocabulary::kPad);
    seq.true_length = 3 + rng.below(spec.max_len - 2);
    for (std::size_t t = 0; t < seq.true_length; ++t) {
      seq.ids[t] = static_cast<TokenId>(1 + rng.below(spec.vocab_size - 1));
    }
    batch.push_back(seq);
  }
  return batch;
}

void randomize(ParameterSet& params, std::uint64_t seed, double scale) {
  Rng rng(seed);
  for (auto& p : params) {
    for (double& v : p.value.values()) v = rng.uniform(-scale, scale);
  }
}

std::vector<double> softmax(std::vector<double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& v : z) total += (v = std::exp(v - m));
  for (double& v : z) v /= total;
  return z;
}

TEST(ModelSpec, ShapeChainForDefaults) {
  ModelSpec s;
  s.vocab_size = 100;
  EXPECT_EQ(s.conv_length(), 196u);
  EXPECT_EQ(s.pooled_length(), 98u);
  EXPECT_NO_THROW(s.validate());
}

TEST(ModelSpec, RejectsInvalidDimensions) {
  ModelSpec s = micro_spec();
  s.kernel_width = 9;
  EXPECT_THROW(s.validate(), ValidationError);
  s = micro_spec();
  s.num_classes = 3;
  EXPECT_THROW(s.validate(), ValidationError);
  s = micro_spec();
  s.lstm_units = 0;
  EXPECT_THROW(build_model(s, 1), ValidationError);
}

TEST(BuildModel, DeterministicForSeed) {
  const auto a = build_model(micro_spec(), 17);
  const auto b = build_model(micro_spec(), 17);
  const auto c = build_model(micro_spec(), 18);
  EXPECT_EQ(a.params, b.params);
  EXPECT_NE(a.params, c.params);
}

TEST(BuildModel, InitialisationRules) {
  const auto m = build_model(micro_spec(), 3);
  const ModelSpec s = m.spec;
  for (std::size_t e = 0; e < s.embed_dim; ++e) EXPECT_EQ(m.params[kEmbedding].value(0, e), 0.0);
  for (double v : m.params[kConvWeight].value.values()) EXPECT_LE(std::abs(v), 0.05);
  for (double v : m.params[kConvBias].value.values()) EXPECT_EQ(v, 0.0);
  const auto& lstm_bias = m.params[kLstmBias].value;
  for (std::size_t j = 0; j < 4 * s.lstm_units; ++j) {
    const bool forget = j >= s.lstm_units && j < 2 * s.lstm_units;
    EXPECT_EQ(lstm_bias[j], forget ? 1.0 : 0.0) << j;
  }
}

TEST(Forward, RowsSumToOne) {
  auto m = build_model(micro_spec(), 4);
  randomize(m.params, 8, 0.8);
  const auto batch = random_batch(5, m.spec, 2);
  const Tensor probs = forward(m, batch);
  ASSERT_EQ(probs.shape(), (std::vector<std::size_t>{5, 4}));
  for (std::size_t b = 0; b < 5; ++b) {
    double total = 0.0;
    for (std::size_t c = 0; c < 4; ++c) total += probs(b, c);
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Forward, ZeroHeadGivesUniformOutput) {
  auto m = build_model(micro_spec(), 4);
  randomize(m.params, 9, 0.5);
  m.params[kDenseWeight].value.fill(0.0);
  m.params[kDenseBias].value.fill(0.0);
  const Tensor probs = forward(m, random_batch(3, m.spec, 1));
  for (double p : probs.values()) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(Forward, ZeroLstmGivesZeroFinalState) {
  // With every LSTM weight and bias zero, each gate is 0.5 and the candidate
  // tanh(0) = 0, so c and h stay zero and the logits equal the dense bias.
  auto m = build_model(micro_spec(), 4);
  randomize(m.params, 10, 0.5);
  m.params[kLstmWeight].value.fill(0.0);
  m.params[kLstmBias].value.fill(0.0);
  const std::vector<double> bias{0.3, -0.2, 0.9, 0.0};
  std::copy(bias.begin(), bias.end(), m.params[kDenseBias].value.data());
  const auto expected = softmax(bias);
  const Tensor probs = forward(m, random_batch(3, m.spec, 6));
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(probs(b, c), expected[c], 1e-15);
  }
}

TEST(Forward, RejectsOutOfRangeIds) {
  const auto m = build_model(micro_spec(), 4);
  auto batch = random_batch(1, m.spec, 3);
  batch[0].ids[0] = 20;
  EXPECT_THROW(forward(m, batch), ValidationError);
}

TEST(Loss, UniformFourClassIsLnFour) {
  auto m = build_model(micro_spec(), 5);
  m.params[kDenseWeight].value.fill(0.0);
  const std::vector<int> classes{0, 3};
  const auto result = loss_and_grads(m, random_batch(2, m.spec, 4), one_hot(classes, 4));
  EXPECT_NEAR(result.loss, std::log(4.0), 1e-12);
  EXPECT_NEAR(result.loss, 1.386294, 1e-6);
}

TEST(Loss, PerfectAndSaturatedPredictions) {
  auto m = build_model(micro_spec(2), 5);
  m.params[kDenseWeight].value.fill(0.0);
  m.params[kDenseBias].value[0] = 800.0;
  const auto batch = random_batch(2, m.spec, 4);
  const std::vector<int> right{0, 0};
  const std::vector<int> wrong{1, 1};
  EXPECT_EQ(loss_and_grads(m, batch, one_hot(right, 2)).loss, 0.0);
  const auto saturated = loss_and_grads(m, batch, one_hot(wrong, 2));
  EXPECT_TRUE(std::isfinite(saturated.loss));
  EXPECT_NEAR(saturated.loss, 800.0, 1e-9);
  for (const auto& g : saturated.grads) EXPECT_TRUE(g.value.all_finite()) << g.name;
}

TEST(Gradients, CnnLstmMatchesFiniteDifferences) {
  for (std::size_t classes : {2u, 4u}) {
    auto m = build_model(micro_spec(classes), 21);
    randomize(m.params, 22 + classes, 0.5);
    std::fill_n(m.params[kEmbedding].value.row(0), m.spec.embed_dim, 0.0);
    const auto batch = random_batch(2, m.spec, 23);
    const std::vector<int> cls{0, static_cast<int>(classes) - 1};
    const Tensor targets = one_hot(cls, classes);
    const auto analytic = loss_and_grads(m, batch, targets);
    const auto checks = testing::check_gradients(
        m, analytic.grads, [&](const TrainedModel& p) { return loss_and_grads(p, batch, targets).loss; });
    ASSERT_EQ(checks.size(), 7u);
    for (const auto& c : checks) EXPECT_LT(c.max_rel_error, 1e-4) << c.name << " classes " << classes;
  }
}

TEST(Gradients, PadRowStaysZero) {
  auto m = build_model(micro_spec(), 2);
  const auto batch = random_batch(2, m.spec, 9);
  const std::vector<int> cls{1, 2};
  const auto g = loss_and_grads(m, batch, one_hot(cls, 4));
  for (std::size_t e = 0; e < m.spec.embed_dim; ++e) EXPECT_EQ(g.grads[kEmbedding].value(0, e), 0.0);
}

TEST(Gradients, MlpMatchesFiniteDifferences) {
  MlpSpec spec{6, 5, 4};
  auto m = build_mlp(spec, 30);
  randomize(m.params, 31, 0.6);
  const std::vector<SparseVector> batch{{{0, 3, 5}, {0.5, -1.0, 0.25}, 6}, {{1, 2}, {1.5, 0.75}, 6},
                                        {{4}, {2.0}, 6}};
  const std::vector<int> cls{0, 2, 3};
  const Tensor targets = one_hot(cls, 4);
  const auto analytic = loss_and_grads(m, batch, targets);
  const auto checks = testing::check_gradients(
      m, analytic.grads, [&](const MlpModel& p) { return loss_and_grads(p, batch, targets).loss; });
  for (const auto& c : checks) EXPECT_LT(c.max_rel_error, 1e-4) << c.name;
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParameterSet params{{"w", Tensor({1}, 0.0)}};
  ParameterSet grads{{"w", Tensor({1}, 1.0)}};
  auto state = make_adam(params);
  adam_step(params, grads, state);
  EXPECT_EQ(state.step, 1u);
  EXPECT_NEAR(params[0].value[0], -0.001, 1e-9);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  ParameterSet params{{"w", Tensor({2}, 0.7)}};
  ParameterSet grads{{"w", Tensor({2}, 0.0)}};
  auto state = make_adam(params);
  adam_step(params, grads, state);
  EXPECT_EQ(params[0].value[0], 0.7);
  EXPECT_EQ(params[0].value[1], 0.7);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, ConstantGradientStepsDoNotGrow) {
  ParameterSet params{{"w", Tensor({1}, 0.0)}};
  ParameterSet grads{{"w", Tensor({1}, 1.0)}};
  auto state = make_adam(params);
  adam_step(params, grads, state);
  const double d1 = std::abs(params[0].value[0]);
  const double before = params[0].value[0];
  adam_step(params, grads, state);
  const double d2 = std::abs(params[0].value[0] - before);
  EXPECT_LE(d2, d1 + 1e-12);
}

TEST(ClipGlobalNorm, RescalesJointly) {
  ParameterSet g{{"a", Tensor({2}, 3.0)}, {"b", Tensor({1}, 0.0)}};
  g[1].value[0] = std::sqrt(7.0);  // joint norm sqrt(9 + 9 + 7) = 5
  EXPECT_NEAR(clip_global_norm(g, 1.0), 5.0, 1e-12);
  EXPECT_NEAR(g[0].value[0], 0.6, 1e-12);
  EXPECT_NEAR(clip_global_norm(g, 10.0), 1.0, 1e-12);
  EXPECT_NEAR(g[0].value[0], 0.6, 1e-12);
}

std::vector<TokenSequence> toy_documents(const ModelSpec& spec, std::vector<int>& classes) {
  // Class 0 documents use ids 2..5, class 1 documents ids 6..9.
  std::vector<TokenSequence> docs;
  Rng rng(77);
  for (int i = 0; i < 8; ++i) {
    const int c = i % 2;
    TokenSequence seq;
    seq.ids.assign(spec.max_len, Vocabulary::kPad);
    seq.true_length = 5 + rng.below(3);
    for (std::size_t t = 0; t < seq.true_length; ++t) {
      seq.ids[t] = static_cast<TokenId>(2 + 4 * c + rng.below(4));
    }
    docs.push_back(seq);
    classes.push_back(c);
  }
  return docs;
}

TEST(Train, MemorizesToyCorpus) {
  ModelSpec spec = micro_spec(2);
  spec.embed_dim = 8;
  spec.conv_filters = 8;
  spec.lstm_units = 8;
  std::vector<int> classes;
  const auto docs = toy_documents(spec, classes);
  TrainOptions opts;
  opts.epochs = 200;
  opts.batch_size = 4;
  opts.seed = 5;
  opts.adam.learning_rate = 0.01;
  const auto trained = train(build_model(spec, 6), docs, classes, opts);
  EXPECT_EQ(trained.training.loss_history.size(), 200u);
  const Tensor probs = forward(trained, docs);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    EXPECT_EQ(static_cast<int>(probs(i, 1) > probs(i, 0)), classes[i]) << i;
  }
}

TEST(Train, DeterministicAndRecordsEveryEpoch) {
  const ModelSpec spec = micro_spec(2);
  std::vector<int> classes;
  const auto docs = toy_documents(spec, classes);
  TrainOptions opts;
  opts.batch_size = 3;
  opts.seed = 12;
  const auto a = train(build_model(spec, 1), docs, classes, opts);
  const auto b = train(build_model(spec, 1), docs, classes, opts);
  EXPECT_EQ(a.training.loss_history.size(), 10u);
  EXPECT_EQ(a, b);
  opts.seed = 13;
  EXPECT_NE(train(build_model(spec, 1), docs, classes, opts).params, a.params);
}

TEST(Train, LearnsSyntheticCorpusAndKeepsPadRowZero) {
  ModelConfig config;
  config.epochs = 4;
  config.embed_dim = 16;
  config.conv_filters = 16;
  config.lstm_units = 16;
  const auto model = fit_classifier(ModelKind::cnn_lstm, merge_labels(synth_corpus(200, 8)), config, 2);
  const auto losses = model.loss_history();
  ASSERT_EQ(losses.size(), 4u);
  EXPECT_GT(losses.front(), losses.back());
  const Tensor& embedding = std::get<TrainedModel>(model.model).params[kEmbedding].value;
  for (std::size_t e = 0; e < embedding.dim(1); ++e) EXPECT_EQ(embedding(0, e), 0.0);
}

TEST(Train, EmptyCorpusIsAnError) {
  const auto m = build_model(micro_spec(2), 1);
  EXPECT_THROW(train(m, std::span<const TokenSequence>{}, std::span<const int>{}, TrainOptions{}),
               ValidationError);
}

TEST(Mlp, ZeroWeightsGiveUniformOutput) {
  auto m = build_mlp({5, 4, 4}, 2);
  for (auto& p : m.params) p.value.fill(0.0);
  const std::vector<SparseVector> x{{{1, 3}, {1.0, 2.0}, 5}};
  const Tensor probs = forward(m, x);
  for (double p : probs.values()) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(Mlp, SeparatesTwoDimensionalToySet) {
  std::vector<SparseVector> x;
  std::vector<int> y;
  Rng rng(4);
  for (int i = 0; i < 40; ++i) {
    const double a = rng.uniform(0.1, 1.0), b = rng.uniform(0.1, 1.0);
    const int c = a > b ? 1 : 0;
    if (std::abs(a - b) < 0.1) continue;
    x.push_back({{0, 1}, {a, b}, 2});
    y.push_back(c);
  }
  TrainOptions opts;
  opts.epochs = 500;
  opts.batch_size = 8;
  opts.seed = 3;
  opts.adam.learning_rate = 0.01;
  const auto m = train(build_mlp({2, 16, 2}, 7), x, y, opts);
  const Tensor probs = forward(m, x);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.size(); ++i) correct += static_cast<int>(probs(i, 1) > probs(i, 0)) == y[i];
  EXPECT_EQ(correct, x.size());
}

}  // namespace
}  // namespace triage
