// One PASS/FAIL line per acceptance criterion. Criteria 8 and 9 drive the
// built `triage` executable end to end; the rest call the library directly.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "triage/classic.hpp"
#include "triage/eval.hpp"
#include "triage/neural.hpp"
#include "triage/random.hpp"
#include "triage/stats.hpp"

namespace fs = std::filesystem;
using namespace triage;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

struct Options {
  std::string cli;
  fs::path work_dir = fs::temp_directory_path() / "triage_acceptance";
  std::set<int> only;
  std::uint64_t corpus_seed = 7;
  std::uint64_t seed = 11;
};

std::string fmt(const char* pattern, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, value);
  return buf;
}

// --- 1 ---------------------------------------------------------------------------

Outcome published_tukey_table(const Options&) {
  Outcome out;
  const std::vector<SummaryPair> pairs{{"CNN_LSTM", "LSVC", 5.64}, {"CNN_LSTM", "MLP", 4.66},
                                       {"CNN_LSTM", "SVM", 5.34},  {"LSVC", "MLP", 0.98},
                                       {"LSVC", "SVM", 0.30}};
  const double published[] = {0.001629, 0.008158, 0.002662, 0.8565, 0.9948};
  const auto report = tukey_from_summary(pairs, 0.8737, 4, 16);
  double worst = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) worst = std::max(worst, std::abs(report.pairs[i].p_value - published[i]));
  out.require(worst <= 0.002, "p-value off by " + fmt("%.6f", worst));
  const double critical = report.pairs[0].critical_mean;
  out.require(std::abs(critical - 3.5351) <= 0.005, "critical mean " + fmt("%.4f", critical));
  out.detail = out.pass ? "max |dp| " + fmt("%.2e", worst) + ", critical mean " + fmt("%.4f", critical) : out.detail;
  return out;
}

// --- 2 ---------------------------------------------------------------------------

Outcome studentized_range_tables(const Options&) {
  Outcome out;
  struct Row {
    int k;
    double df, q05, q01;
  };
  // Harter's studentized range tables.
  const Row rows[] = {{3, 10, 3.877, 5.270}, {4, 16, 4.046, 5.192}, {5, 20, 4.232, 5.294}};
  double worst = 0.0;
  for (const auto& r : rows) {
    for (auto [p, table] : {std::pair{0.95, r.q05}, std::pair{0.99, r.q01}}) {
      const double q = qtukey(p, r.k, r.df);
      worst = std::max(worst, std::abs(q - table));
      out.require(std::abs(q - table) <= 0.005, "q(" + std::to_string(r.k) + "," + fmt("%g", r.df) + ") = " +
                                                    fmt("%.4f", q) + " vs " + fmt("%.3f", table));
      const double cdf = ptukey(table, r.k, r.df);
      out.require(std::abs(cdf - p) <= 0.002, "ptukey at table value " + fmt("%.5f", cdf));
    }
  }
  if (out.pass) out.detail = "max |dq| " + fmt("%.2e", worst);
  return out;
}

// --- 3 ---------------------------------------------------------------------------

Outcome gradient_integrity(const Options&) {
  Outcome out;
  std::map<std::string, double> layer_worst;
  const auto layer_of = [](std::size_t p) -> std::string {
    switch (p) {
      case kEmbedding: return "embedding";
      case kConvWeight:
      case kConvBias: return "conv+relu+maxpool";
      case kLstmWeight:
      case kLstmBias: return "lstm/bptt";
      default: return "dense-softmax+ce";
    }
  };
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    ModelSpec spec;
    spec.vocab_size = 20;
    spec.embed_dim = 4;
    spec.conv_filters = 3;
    spec.kernel_width = 3;
    spec.pool_width = 2;
    spec.lstm_units = 5;
    spec.max_len = 8;
    spec.num_classes = seed % 2 ? 4 : 2;
    TrainedModel model = build_model(spec, seed);
    Rng rng(derive_seed(seed, "acceptance.grad"));
    for (auto& p : model.params) {
      for (double& v : p.value.values()) v = rng.uniform(-0.5, 0.5);
    }
    std::fill_n(model.params[kEmbedding].value.row(0), spec.embed_dim, 0.0);
    std::vector<TokenSequence> batch(2);
    std::vector<int> classes;
    for (auto& seq : batch) {
      seq.ids.assign(spec.max_len, Vocabulary::kPad);
      seq.true_length = 4 + rng.below(5);
      for (std::size_t t = 0; t < seq.true_length; ++t) seq.ids[t] = static_cast<TokenId>(1 + rng.below(19));
      classes.push_back(static_cast<int>(rng.below(spec.num_classes)));
    }
    const Tensor targets = one_hot(classes, spec.num_classes);
    const DropoutConfig dropout{seed == 4 ? 0.3 : 0.0, seed};
    const auto analytic = loss_and_grads(model, batch, targets, dropout);
    const auto checks = testing::check_gradients(model, analytic.grads, [&](const TrainedModel& m) {
      return loss_and_grads(m, batch, targets, dropout).loss;
    });
    for (std::size_t p = 0; p < checks.size(); ++p) {
      double& w = layer_worst[layer_of(p)];
      w = std::max(w, checks[p].max_rel_error);
    }
  }
  {
    MlpModel mlp = build_mlp({7, 6, 4}, 3);
    Rng rng(99);
    for (auto& p : mlp.params) {
      for (double& v : p.value.values()) v = rng.uniform(-0.6, 0.6);
    }
    const std::vector<SparseVector> batch{{{0, 4, 6}, {0.3, 1.2, -0.5}, 7}, {{2, 3}, {0.9, 0.4}, 7}};
    const std::vector<int> classes{1, 3};
    const Tensor targets = one_hot(classes, 4);
    const auto analytic = loss_and_grads(mlp, batch, targets);
    for (const auto& c : testing::check_gradients(
             mlp, analytic.grads, [&](const MlpModel& m) { return loss_and_grads(m, batch, targets).loss; })) {
      layer_worst["mlp"] = std::max(layer_worst["mlp"], c.max_rel_error);
    }
  }
  std::string summary;
  for (const auto& [layer, err] : layer_worst) {
    out.require(err < 1e-4, layer + " relative error " + fmt("%.2e", err));
    summary += (summary.empty() ? "" : ", ") + layer + " " + fmt("%.1e", err);
  }
  if (out.pass) out.detail = summary;
  return out;
}

// --- 4 ---------------------------------------------------------------------------

Outcome metric_oracles(const Options&) {
  Outcome out;
  Rng rng(derive_seed(4, "acceptance.metrics"));
  double worst = 0.0;
  std::size_t recall_mismatch = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int classes = 2 + static_cast<int>(rng.below(3));
    const std::size_t n = 2 + rng.below(49);
    std::vector<int> t(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = 1 + static_cast<int>(rng.below(classes));
      p[i] = 1 + static_cast<int>(rng.below(classes));
    }
    const auto scheme = classes == 2 ? LabelScheme::two_class : LabelScheme::four_class;
    const auto m = compute_metrics(t, p, scheme);
    const auto o = testing::brute_force_metrics(t, p, label_count(scheme));
    for (double d : {m.accuracy - o.accuracy, m.precision - o.precision, m.recall - o.recall,
                     m.f_measure - o.f_measure}) {
      worst = std::max(worst, std::abs(d));
    }
    recall_mismatch += m.recall != m.accuracy;

    std::vector<int> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = 1 + static_cast<int>(rng.below(2));
      s[i] = rng.below(4) == 0 ? 0.5 : rng.uniform();
    }
    y[0] = 1;
    y[1] = 2;
    worst = std::max(worst, std::abs(roc_auc(y, s, 1) - testing::all_pairs_auc(y, s, 1)));
  }
  out.require(worst <= 1e-12, "max deviation " + fmt("%.2e", worst));
  out.require(recall_mismatch == 0, std::to_string(recall_mismatch) + " sets with recall != accuracy");
  if (out.pass) out.detail = "1000 sets, max deviation " + fmt("%.1e", worst) + ", recall == accuracy";
  return out;
}

// --- 5 ---------------------------------------------------------------------------

Outcome oversampling_invariants(const Options&) {
  Outcome out;
  Rng rng(derive_seed(5, "acceptance.oversample"));
  std::size_t checked_folds = 0;
  for (int trial = 0; trial < 100; ++trial) {
    LabeledCorpus corpus;
    const bool four = rng.below(2) == 1;
    corpus.scheme = four ? LabelScheme::four_class : LabelScheme::two_class;
    for (int label = 1; label <= label_count(corpus.scheme); ++label) {
      const std::size_t n = 5 + rng.below(40);
      for (std::size_t i = 0; i < n; ++i) {
        const std::string text = "report " + std::to_string(trial) + " " + std::to_string(label) + " " +
                                 std::to_string(i);
        corpus.documents.push_back({"t" + std::to_string(corpus.size()), text, text, label});
      }
    }
    rng.shuffle(std::span<Document>(corpus.documents));

    // Whole-corpus balance.
    const auto before = corpus.label_counts();
    std::size_t majority = 0;
    for (const auto& [label, n] : before) majority = std::max(majority, n);
    const auto balanced = oversample(corpus, trial);
    for (const auto& [label, n] : balanced.corpus.label_counts()) {
      out.require(n == majority, "class " + std::to_string(label) + " has " + std::to_string(n));
    }
    for (std::size_t i = 0; i < balanced.corpus.size(); ++i) {
      const auto& copy = balanced.corpus.documents[i];
      const auto& original = corpus.documents.at(balanced.source[i]);
      const bool same = copy.raw_text == original.raw_text && copy.body_text == original.body_text &&
                        copy.label == original.label;
      out.require(same, "document " + copy.id + " is not a copy of its source");
      if (i < corpus.size()) out.require(copy == original, "original " + original.id + " changed");
    }

    // Per-fold balance: training sets only ever hold training-fold documents.
    const auto plan = kfold(corpus, 5, trial);
    for (std::size_t f = 0; f < plan.k; ++f) {
      const auto train_idx = plan.train_indices(f);
      const auto fold = oversample(subset(corpus, train_idx), derive_seed(trial, "fold", f));
      std::set<std::string> test_texts;
      for (auto i : plan.test_indices(f)) test_texts.insert(corpus.documents[i].raw_text);
      for (std::size_t i = 0; i < fold.corpus.size(); ++i) {
        out.require(!test_texts.count(fold.corpus.documents[i].raw_text), "test document leaked into training");
        out.require(fold.source[i] < train_idx.size(), "source index outside the training fold");
      }
      ++checked_folds;
    }
  }
  if (out.pass) out.detail = "100 corpora, " + std::to_string(checked_folds) + " folds without leakage";
  return out;
}

// --- 6 ---------------------------------------------------------------------------

SparseVector xy(double a, double b) {
  SparseVector v;
  v.dim = 2;
  if (a != 0.0) v.indices.push_back(0), v.values.push_back(a);
  if (b != 0.0) v.indices.push_back(1), v.values.push_back(b);
  return v;
}

double train_accuracy(const ClassifierModel& m, const FeatureMatrix& X, std::span<const int> y) {
  const auto p = predict(m, X);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hits += p[i] == y[i];
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

Outcome classical_oracles(const Options&) {
  Outcome out;
  // MNB: {lesion, measurements, normal, severe}; "severe lesion" -> 1,
  // "normal measurements" -> 2. Posterior for "severe": (1/2 * 1/3) / (1/2 * 1/3 + 1/2 * 1/6).
  {
    const FeatureMatrix X{{{0, 3}, {1.0, 1.0}, 4}, {{1, 2}, {1.0, 1.0}, 4}};
    const std::vector<int> y{1, 2};
    const auto m = train_mnb(X, y, 1.0);
    const Tensor post = predict_scores(m, FeatureMatrix{{{3}, {1.0}, 4}});
    const double err = std::max(std::abs(post(0, 0) - 2.0 / 3.0), std::abs(post(0, 1) - 1.0 / 3.0));
    out.require(err <= 1e-12, "MNB posterior error " + fmt("%.2e", err));
    out.require(predict(m, FeatureMatrix{{{3}, {1.0}, 4}}).front() == 1, "MNB predicts the wrong class");
  }
  // CART on consistent data, and the one-tree forest.
  Rng rng(derive_seed(6, "acceptance.trees"));
  for (int trial = 0; trial < 10; ++trial) {
    FeatureMatrix X;
    std::vector<int> y;
    std::set<std::vector<double>> seen;
    while (X.size() < 150) {
      SparseVector v;
      v.dim = 8;
      for (std::uint32_t f = 0; f < 8; ++f) {
        if (rng.below(2)) v.indices.push_back(f), v.values.push_back(static_cast<double>(1 + rng.below(3)));
      }
      if (!seen.insert(v.to_dense()).second) continue;
      X.push_back(v);
      y.push_back(1 + static_cast<int>(rng.below(4)));
    }
    const auto tree = train_dtree(X, y);
    const double acc = train_accuracy(tree, X, y);
    out.require(acc == 1.0, "CART training accuracy " + fmt("%.3f", acc));
    ForestOptions one;
    one.n_trees = 1;
    one.bootstrap = false;
    one.max_features = 8;
    one.seed = trial;
    const auto forest = train_rforest(X, y, one);
    out.require(predict(forest, X) == predict(tree, X), "one-tree forest differs from the tree");
    out.require(std::get<ForestParams>(forest.params).trees.front() == std::get<DecisionTree>(tree.params),
                "one-tree forest grew a different tree");
  }
  // XOR.
  const FeatureMatrix xor_x{xy(0, 0), xy(1, 1), xy(0, 1), xy(1, 0)};
  const std::vector<int> xor_y{1, 1, 2, 2};
  const double svm_acc = train_accuracy(train_svm_rbf(xor_x, xor_y), xor_x, xor_y);
  out.require(svm_acc == 1.0, "RBF-SVM XOR accuracy " + fmt("%.2f", svm_acc));
  double lsvc_worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    lsvc_worst = std::max(lsvc_worst, train_accuracy(train_lsvc(xor_x, xor_y, {1.0, 50, seed}), xor_x, xor_y));
  }
  out.require(lsvc_worst <= 0.75, "LSVC XOR accuracy " + fmt("%.2f", lsvc_worst));
  // SMO dual feasibility.
  double dual_err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 10 + rng.below(40);
    std::vector<std::vector<double>> pts(n, std::vector<double>(3));
    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (double& v : pts[i]) v = rng.uniform(-1, 1);
      t[i] = pts[i][0] * pts[i][1] + 0.3 * pts[i][2] > 0 ? 1 : -1;
    }
    t[0] = 1;
    t[1] = -1;
    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double d2 = 0;
        for (int d = 0; d < 3; ++d) d2 += (pts[i][d] - pts[j][d]) * (pts[i][d] - pts[j][d]);
        K[i * n + j] = std::exp(-0.8 * d2);
      }
    }
    const double C = 0.5 + rng.uniform(0, 4);
    const auto sol = smo_solve(K, t, C, 1e-3, 10, trial);
    double balance = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dual_err = std::max({dual_err, -sol.alpha[i], sol.alpha[i] - C});
      balance += sol.alpha[i] * t[i];
    }
    dual_err = std::max(dual_err, std::abs(balance));
  }
  out.require(dual_err <= 1e-9, "SMO dual constraint violation " + fmt("%.2e", dual_err));
  if (out.pass) {
    out.detail = "MNB exact, CART 1.0, RF(1)=DT, SVM XOR 1.0, LSVC XOR " + fmt("%.2f", lsvc_worst) +
                 ", SMO violation " + fmt("%.1e", dual_err);
  }
  return out;
}

// --- 7 ---------------------------------------------------------------------------

Outcome anova_oracle(const Options&) {
  Outcome out;
  const std::vector<std::vector<double>> hand{{1, 2, 3}, {2, 3, 4}, {3, 4, 5}};
  const double f = one_way_anova(hand).f;
  out.require(f == 3.0, "hand example F = " + fmt("%.17g", f));

  Rng rng(derive_seed(7, "acceptance.anova"));
  double worst_affine = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> groups(2 + rng.below(4));
    for (auto& g : groups) {
      for (std::size_t i = 0, n = 2 + rng.below(6); i < n; ++i) g.push_back(rng.uniform(0.6, 1.0));
    }
    const double base = one_way_anova(groups).f;
    double a = rng.uniform(-50, 50);
    if (std::abs(a) < 1e-3) a = 2.0;
    const double b = rng.uniform(-100, 100);
    for (auto& g : groups) {
      for (double& v : g) v = a * v + b;
    }
    worst_affine = std::max(worst_affine, std::abs(one_way_anova(groups).f - base) / base);
  }
  out.require(worst_affine <= 1e-9, "affine invariance error " + fmt("%.2e", worst_affine));

  struct Row {
    double df1, df2, f, alpha;
  };
  // Upper critical values of F from standard tables.
  const Row table[] = {{2, 6, 5.14, 0.05},  {3, 16, 3.24, 0.05}, {1, 20, 4.35, 0.05},
                       {4, 20, 2.87, 0.05}, {3, 16, 5.29, 0.01}, {2, 10, 7.56, 0.01}};
  double worst_p = 0.0;
  for (const auto& r : table) worst_p = std::max(worst_p, std::abs(f_survival(r.f, r.df1, r.df2) - r.alpha));
  out.require(worst_p <= 1e-3, "F table p-value error " + fmt("%.2e", worst_p));
  if (out.pass) {
    out.detail = "F = 3 exactly, affine error " + fmt("%.1e", worst_affine) + ", table error " + fmt("%.1e", worst_p);
  }
  return out;
}

// --- 8 and 9 ---------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct EndToEnd {
  fs::path corpus;
  bool corpus_ok = false;
  double first_run_seconds = 0.0;
};

std::string evaluate_command(const Options& opt, const fs::path& corpus, const fs::path& out_dir) {
  return opt.cli + " evaluate --corpus '" + corpus.string() + "' --scheme two_class --balance balanced --k 5" +
         " --epochs 10 --batch-size 32 --seed " + std::to_string(opt.seed) + " --out-dir '" + out_dir.string() +
         "' 2> '" + (out_dir.string() + ".log") + "'";
}

Outcome end_to_end(const Options& opt, EndToEnd& state) {
  Outcome out;
  state.corpus = opt.work_dir / "corpus.jsonl";
  const int synth = shell(opt.cli + " synth --n 1134 --seed " + std::to_string(opt.corpus_seed) + " --out '" +
                          state.corpus.string() + "' > /dev/null");
  out.require(synth == 0, "synth failed");
  if (!out.pass) return out;
  state.corpus_ok = true;

  const auto start = std::chrono::steady_clock::now();
  const int status = shell(evaluate_command(opt, state.corpus, opt.work_dir / "run_a"));
  state.first_run_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.require(status == 0, "evaluate failed (see run_a.log)");
  if (!out.pass) return out;

  const auto report = nlohmann::json::parse(slurp(opt.work_dir / "run_a" / "report.json"));
  out.require(report.at("documents") == 1134, "corpus size differs from 1,134");
  std::map<std::string, double> mean;
  for (const auto& r : report.at("cells").at(0).at("results")) {
    mean[r.at("model").get<std::string>()] = r.at("mean").at("accuracy").get<double>();
  }
  const double cnn = mean.at("cnn_lstm"), nb = mean.at("mnb"), lr = mean.at("logreg");
  out.require(cnn >= 0.95, "CNN-LSTM mean accuracy " + fmt("%.4f", cnn) + " < 0.95");
  out.require(cnn > nb, "CNN-LSTM does not beat MNB (" + fmt("%.4f", nb) + ")");
  out.require(cnn > lr, "CNN-LSTM does not beat LR (" + fmt("%.4f", lr) + ")");
  out.require(state.first_run_seconds < 600.0, "evaluate took " + fmt("%.0f", state.first_run_seconds) + " s");
  const std::string summary = "CNN-LSTM " + fmt("%.4f", cnn) + ", MNB " + fmt("%.4f", nb) + ", LR " +
                              fmt("%.4f", lr) + ", evaluate " + fmt("%.0f", state.first_run_seconds) + " s";
  out.detail = out.pass ? summary : out.detail + " [" + summary + "]";
  return out;
}

Outcome determinism(const Options& opt, const EndToEnd& state) {
  Outcome out;
  const fs::path a = opt.work_dir / "run_a";
  if (!state.corpus_ok || !fs::exists(a / "report.json")) {
    out.require(false, "first run unavailable");
    return out;
  }
  const auto start = std::chrono::steady_clock::now();
  const int status = shell(evaluate_command(opt, state.corpus, opt.work_dir / "run_b"));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.require(status == 0, "second evaluate failed (see run_b.log)");
  if (!out.pass) return out;
  std::size_t files = 0;
  for (const char* name : {"report.json", "report.txt"}) {
    const std::string first = slurp(a / name), second = slurp(opt.work_dir / "run_b" / name);
    out.require(!first.empty() && first == second, std::string(name) + " differs between runs");
    ++files;
  }
  const double total = state.first_run_seconds + seconds;
  out.require(total < 1200.0, "two runs took " + fmt("%.0f", total) + " s");
  if (out.pass) out.detail = std::to_string(files) + " report files byte-identical, two runs " + fmt("%.0f", total) + " s";
  return out;
}

struct Criterion {
  int id;
  const char* title;
  double limit_seconds;
  std::function<Outcome(const Options&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    const auto next = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::cerr << "missing value for " << a << '\n';
        std::exit(2);
      }
      return argv[++i];
    };
    if (a == "--cli") opt.cli = next();
    else if (a == "--work-dir") opt.work_dir = next();
    else if (a == "--seed") opt.seed = std::stoull(next());
    else if (a == "--corpus-seed") opt.corpus_seed = std::stoull(next());
    else if (a == "--only") {
      std::stringstream list(next());
      for (std::string item; std::getline(list, item, ',');) opt.only.insert(std::stoi(item));
    } else {
      std::cerr << "usage: triage_acceptance --cli PATH [--work-dir DIR] [--seed N] [--corpus-seed N] [--only 1,2]\n";
      return 2;
    }
  }
  fs::remove_all(opt.work_dir);
  fs::create_directories(opt.work_dir);

  EndToEnd e2e;
  const std::vector<Criterion> criteria{
      {1, "Tukey table from published summary statistics", 1.0, published_tukey_table},
      {2, "studentized range against published tables", 5.0, studentized_range_tables},
      {3, "gradient integrity of every neural layer", 30.0, gradient_integrity},
      {4, "weighted metrics and ROC-AUC against brute force", 10.0, metric_oracles},
      {5, "oversampling invariants", 5.0, oversampling_invariants},
      {6, "classical model oracles", 60.0, classical_oracles},
      {7, "ANOVA oracle", 0.0, anova_oracle},
      {8, "end-to-end CNN-LSTM ordering on the synthetic corpus", 0.0,
       [&](const Options& o) {
         if (o.cli.empty()) return Outcome{false, "no --cli given"};
         return end_to_end(o, e2e);
       }},
      {9, "byte-identical reports across evaluate runs", 0.0,
       [&](const Options& o) {
         if (o.cli.empty()) return Outcome{false, "no --cli given"};
         if (!o.only.empty() && !o.only.count(8)) end_to_end(o, e2e);
         return determinism(o, e2e);
       }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!opt.only.empty() && !opt.only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome result;
    try {
      result = c.run(opt);
    } catch (const std::exception& e) {
      result = Outcome{false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0.0) result.require(seconds < c.limit_seconds, "runtime over " + fmt("%g", c.limit_seconds) + " s");
    failures += !result.pass;
    std::printf("%s criterion %d: %s (%s; %.2f s)\n", result.pass ? "PASS" : "FAIL", c.id, c.title,
                result.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
