// triage: command-line front end for the report-severity toolkit.

#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "triage/corpus.hpp"
#include "triage/error.hpp"
#include "triage/eval.hpp"
#include "triage/model_file.hpp"
#include "triage/random.hpp"
#include "triage/pipeline.hpp"
#include "triage/server.hpp"
#include "triage/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace triage;

namespace {

struct CommonOptions {
  std::string corpus;
  std::uint64_t seed = 0;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::size_t max_len = 200;
  bool paper_mode = false;
  ModelConfig model;
};

void add_seed(CLI::App* cmd, std::uint64_t& seed) {
  cmd->add_option("--seed", seed, "Master seed (falls back to $TRIAGE_SEED)")->envname("TRIAGE_SEED")->required();
}

void add_training_flags(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--epochs", o.epochs, "Training epochs for the neural models")->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--batch-size", o.batch_size, "Mini-batch size for the neural models")->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-len", o.max_len, "Token sequence length for the CNN-LSTM")->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--nb-tfidf", o.model.nb_tfidf, "Train MNB on TF-IDF weights instead of term counts");
}

ModelConfig model_config(const CommonOptions& o) {
  ModelConfig c = o.model;
  c.epochs = o.epochs;
  c.batch_size = o.batch_size;
  c.max_len = o.max_len;
  return c;
}

LabeledCorpus read_input_corpus(const std::string& path) {
  return load_corpus(path, format_from_path(path), LabelScheme::four_class);
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error("failed to write '" + path.string() + "'");
}

std::vector<ModelKind> parse_models(const std::vector<std::string>& names) {
  std::vector<ModelKind> out;
  for (const auto& n : names) {
    if (n == "all") {
      out.assign(all_model_kinds().begin(), all_model_kinds().end());
      continue;
    }
    out.push_back(parse_model_kind(n));
  }
  return out;
}

void progress_line(const CellResult& cell, ModelKind kind, std::size_t fold, void* user) {
  const auto* k = static_cast<const std::size_t*>(user);
  std::cerr << "[" << cell_name(cell.scheme, cell.balanced) << "] " << display_name(kind) << " fold " << fold + 1
            << "/" << *k << '\n';
}

// --- synth -------------------------------------------------------------------------

int cmd_synth(std::size_t n, std::uint64_t seed, const std::vector<double>& weights, const std::string& out) {
  if (weights.size() != 4) throw ValidationError("--weights needs exactly four values");
  const LabeledCorpus corpus = synth_corpus(n, seed, {weights[0], weights[1], weights[2], weights[3]});
  save_corpus(out, corpus, format_from_path(out));
  std::cerr << "wrote " << corpus.size() << " documents to " << out << '\n';
  return 0;
}

// --- train -------------------------------------------------------------------------

struct TrainArgs {
  CommonOptions common;
  std::string model = "cnn_lstm";
  std::string scheme = "two_class";
  double test_frac = 0.2;
  bool balanced = false;
  std::string out;
};

int cmd_train(const TrainArgs& a) {
  const ModelKind kind = parse_model_kind(a.model);
  const LabelScheme scheme = parse_scheme(a.scheme);
  LabeledCorpus corpus = read_input_corpus(a.common.corpus);
  if (scheme == LabelScheme::two_class) corpus = merge_labels(corpus);
  const std::uint64_t seed = a.common.seed;
  const SplitResult split = stratified_split(corpus, a.test_frac, derive_seed(seed, "train.split"));
  LabeledCorpus train = split.train;
  if (a.balanced) train = oversample(train, derive_seed(seed, "train.oversample")).corpus;
  const TextClassifier model = fit_classifier(kind, train, model_config(a.common), derive_seed(seed, "train.model"));
  save_model(a.out, model);

  std::vector<TokenList> test_docs;
  for (const auto& d : split.test.documents) test_docs.push_back(preprocess(d.body_text));
  const MetricsReport metrics = compute_metrics(split.test.labels(), model.predict(test_docs), scheme);
  const auto history = model.loss_history();
  json summary = {{"model", to_string(kind)},
                  {"scheme", to_string(scheme)},
                  {"train_documents", train.size()},
                  {"test_documents", split.test.size()},
                  {"test_accuracy", metrics.accuracy},
                  {"output", a.out}};
  if (!history.empty()) {
    summary["final_training_loss"] = history.back();
    summary["loss_history"] = history;
  }
  std::cout << summary.dump() << '\n';
  return 0;
}

// --- evaluate / compare ----------------------------------------------------------------

struct EvalArgs {
  CommonOptions common;
  std::vector<std::string> schemes{"all"};
  std::string balance = "both";
  std::vector<std::string> models{"all"};
  std::size_t k = 5;
  std::string out_dir = "reports";
};

ExperimentConfig experiment_config(const EvalArgs& a) {
  ExperimentConfig cfg;
  cfg.schemes.clear();
  for (const auto& s : a.schemes) {
    if (s == "all") {
      cfg.schemes = {LabelScheme::two_class, LabelScheme::four_class};
    } else {
      cfg.schemes.push_back(parse_scheme(s));
    }
  }
  if (a.balance == "both") {
    cfg.balance_modes = {true, false};
  } else if (a.balance == "balanced") {
    cfg.balance_modes = {true};
  } else if (a.balance == "imbalanced") {
    cfg.balance_modes = {false};
  } else {
    throw ValidationError("--balance must be balanced, imbalanced or both");
  }
  cfg.models = parse_models(a.models);
  cfg.k = a.k;
  cfg.paper_mode = a.common.paper_mode;
  cfg.seed = a.common.seed;
  cfg.model = model_config(a.common);
  cfg.corpus_name = fs::path(a.common.corpus).filename().string();
  return cfg;
}

ExperimentReport run_and_write(const EvalArgs& a, const ExperimentConfig& cfg) {
  const LabeledCorpus corpus = read_input_corpus(a.common.corpus);
  std::size_t k = cfg.k;
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report = run_experiment(corpus, cfg, progress_line, &k);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const fs::path dir(a.out_dir);
  write_file(dir / "report.json", to_json(report).dump(2) + "\n");
  write_file(dir / "report.txt", to_text(report));
  std::cerr << "experiment finished in " << seconds << " s; reports in " << dir.string() << '\n';
  return report;
}

int cmd_evaluate(const EvalArgs& a) {
  const ExperimentReport report = run_and_write(a, experiment_config(a));
  std::cout << to_text(report);
  return 0;
}

struct CompareArgs {
  EvalArgs eval;
  std::string scheme = "two_class";
  std::string balance = "balanced";
  std::vector<std::string> models{"cnn_lstm", "lsvc", "mlp", "svm_rbf"};
  std::string metric = "accuracy";
  double alpha = 0.05;
  // summary mode
  std::vector<std::string> summary;
  double se = 0.0;
  int groups = 0;
  double df = 0.0;
};

std::vector<SummaryPair> parse_summary(const std::vector<std::string>& items) {
  std::vector<SummaryPair> out;
  for (const auto& item : items) {
    // "A:B=5.64"
    const auto eq = item.rfind('=');
    const auto colon = item.find(':');
    if (eq == std::string::npos || colon == std::string::npos || colon > eq) {
      throw ValidationError("summary pairs look like FIRST:SECOND=DIFFERENCE, got '" + item + "'");
    }
    SummaryPair p;
    p.first = item.substr(0, colon);
    p.second = item.substr(colon + 1, eq - colon - 1);
    try {
      p.difference = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw ValidationError("bad difference in '" + item + "'");
    }
    out.push_back(std::move(p));
  }
  return out;
}

int cmd_compare(const CompareArgs& a) {
  const fs::path dir(a.eval.out_dir);
  if (!a.summary.empty()) {
    if (a.groups < 2 || !(a.df >= 1.0) || !(a.se > 0.0)) {
      throw ValidationError("summary mode needs --se > 0, --groups >= 2 and --df >= 1");
    }
    const TukeyReport tukey = tukey_from_summary(parse_summary(a.summary), a.se, a.groups, a.df, a.alpha);
    write_file(dir / "compare.txt", to_text(tukey));
    write_file(dir / "compare.json", json{{"mode", "summary"}, {"tukey", to_json(tukey)}}.dump(2) + "\n");
    std::cout << to_text(tukey);
    return 0;
  }

  EvalArgs e = a.eval;
  e.schemes = {a.scheme};
  e.balance = a.balance;
  e.models = a.models;
  ExperimentConfig cfg = experiment_config(e);
  if (cfg.models.size() < 2) throw ValidationError("compare needs at least two models");
  if (cfg.balance_modes.size() != 1) throw ValidationError("compare runs a single cell; pick balanced or imbalanced");
  const ExperimentReport report = run_and_write(e, cfg);
  const CellResult& cell = report.cells.front();

  std::vector<std::vector<double>> groups;
  std::vector<std::string> names;
  for (const auto& m : cell.models) {
    std::vector<double> v = metric_values(m, a.metric);
    for (double& x : v) x *= 100.0;  // percentage points, as in the report tables
    groups.push_back(std::move(v));
    names.emplace_back(display_name(m.kind));
  }
  const AnovaResult anova = one_way_anova(groups);
  const TukeyReport tukey = tukey_hsd(groups, names, a.alpha);
  const std::string text = to_text(tukey) + "\n" + to_text(anova);
  write_file(dir / "compare.txt", text);
  write_file(dir / "compare.json", json{{"mode", "experiment"},
                                         {"cell", cell_name(cell.scheme, cell.balanced)},
                                         {"metric", a.metric},
                                         {"scale", "percent"},
                                         {"paper_mode", cfg.paper_mode},
                                         {"anova", to_json(anova)},
                                         {"tukey", to_json(tukey)}}
                                            .dump(2) + "\n");
  std::cout << text;
  return 0;
}

// --- predict / serve -------------------------------------------------------------------

int cmd_predict(const std::string& model_path, const std::string& text, const std::string& file) {
  const TextClassifier model = load_model(model_path);
  std::string input = text;
  if (!file.empty()) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("cannot open '" + file + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    input = buf.str();
  }
  std::cout << prediction_json(model, model.predict_text(input)).dump() << '\n';
  return 0;
}

PredictServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

int cmd_serve(const std::string& model_path, const std::string& host, int port) {
  auto model = std::make_shared<const TextClassifier>(load_model(model_path));
  PredictServer server(model);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "serving " << to_string(model->kind) << " on http://" << host << ":" << port << '\n';
  const bool ok = server.listen(host, port);
  g_server = nullptr;
  if (!ok) throw Error("could not listen on " + host + ":" + std::to_string(port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Severity triage for dental radiology reports"};
  app.require_subcommand(1);

  // synth
  std::size_t synth_n = 1134;
  std::uint64_t synth_seed = 0;
  std::vector<double> synth_weights{0.15, 0.25, 0.35, 0.25};
  std::string synth_out = "corpus.jsonl";
  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic report corpus");
  synth->add_option("--n", synth_n, "Number of documents")->capture_default_str();
  add_seed(synth, synth_seed);
  synth->add_option("--weights", synth_weights, "Class proportions for labels 1..4")->delimiter(',')
      ->expected(4)->capture_default_str();
  synth->add_option("--out", synth_out, "Output path (.jsonl or .csv)")->capture_default_str();

  // train
  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train one model on a stratified train split and save it");
  train->add_option("--corpus", train_args.common.corpus, "Corpus file (.jsonl or .csv)")->required();
  train->add_option("--model", train_args.model, "Model kind")->capture_default_str();
  train->add_option("--scheme", train_args.scheme, "two_class or four_class")->capture_default_str();
  train->add_option("--test-frac", train_args.test_frac, "Held-out fraction")->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  train->add_flag("--balanced", train_args.balanced, "Oversample the training split");
  train->add_option("--out", train_args.out, "Model file to write")->required();
  add_seed(train, train_args.common.seed);
  add_training_flags(train, train_args.common);

  // evaluate
  EvalArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Run the k-fold model grid and write report files");
  evaluate->add_option("--corpus", eval_args.common.corpus, "Corpus file (.jsonl or .csv)")->required();
  evaluate->add_option("--scheme", eval_args.schemes, "two_class, four_class or all")->delimiter(',')
      ->capture_default_str();
  evaluate->add_option("--balance", eval_args.balance, "balanced, imbalanced or both")->capture_default_str();
  evaluate->add_option("--models", eval_args.models, "Comma-separated model kinds or all")->delimiter(',')
      ->capture_default_str();
  evaluate->add_option("--k", eval_args.k, "Number of folds")->capture_default_str()->check(CLI::Range(2, 1000));
  evaluate->add_flag("--paper-mode", eval_args.common.paper_mode, "Oversample before splitting into folds");
  evaluate->add_option("--out-dir", eval_args.out_dir, "Directory for report.json and report.txt")
      ->capture_default_str();
  add_seed(evaluate, eval_args.common.seed);
  add_training_flags(evaluate, eval_args.common);

  // compare
  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "ANOVA and Tukey HSD over per-fold results");
  compare->add_option("--corpus", cmp.eval.common.corpus, "Corpus file (.jsonl or .csv)");
  compare->add_option("--scheme", cmp.scheme, "two_class or four_class")->capture_default_str();
  compare->add_option("--balance", cmp.balance, "balanced or imbalanced")->capture_default_str();
  compare->add_option("--models", cmp.models, "Models to compare")->delimiter(',')->capture_default_str();
  compare->add_option("--metric", cmp.metric, "accuracy, precision, recall, f_measure or roc_auc")
      ->capture_default_str();
  compare->add_option("--alpha", cmp.alpha, "Family-wise significance level")->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  compare->add_option("--k", cmp.eval.k, "Number of folds")->capture_default_str()->check(CLI::Range(2, 1000));
  compare->add_flag("--paper-mode", cmp.eval.common.paper_mode, "Oversample before splitting into folds");
  compare->add_option("--out-dir", cmp.eval.out_dir, "Directory for the report files")->capture_default_str();
  compare->add_option("--summary", cmp.summary, "Summary mode: FIRST:SECOND=DIFF pairs")->delimiter(',');
  compare->add_option("--se", cmp.se, "Summary mode: standard error");
  compare->add_option("--groups", cmp.groups, "Summary mode: number of groups k");
  compare->add_option("--df", cmp.df, "Summary mode: error degrees of freedom");
  compare->add_option("--seed", cmp.eval.common.seed, "Master seed (falls back to $TRIAGE_SEED)")
      ->envname("TRIAGE_SEED");
  add_training_flags(compare, cmp.eval.common);

  // predict
  std::string predict_model, predict_text, predict_file;
  auto* predict = app.add_subcommand("predict", "Classify one report with a saved model");
  predict->add_option("--model", predict_model, "Model file")->required();
  auto* text_opt = predict->add_option("--text", predict_text, "Report text");
  auto* file_opt = predict->add_option("--file", predict_file, "File holding the report text");
  text_opt->excludes(file_opt);

  // serve
  std::string serve_model, serve_host = "127.0.0.1";
  int serve_port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve predictions over HTTP");
  serve->add_option("--model", serve_model, "Model file")->required();
  serve->add_option("--host", serve_host, "Bind address")->capture_default_str();
  serve->add_option("--port", serve_port, "Port")->capture_default_str()->check(CLI::Range(1, 65535));

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(synth_n, synth_seed, synth_weights, synth_out);
    if (train->parsed()) return cmd_train(train_args);
    if (evaluate->parsed()) return cmd_evaluate(eval_args);
    if (compare->parsed()) {
      if (cmp.summary.empty()) {
        if (cmp.eval.common.corpus.empty()) throw ValidationError("compare needs --corpus (or --summary)");
        if (compare->count("--seed") == 0) throw ValidationError("a seed is required: pass --seed or set TRIAGE_SEED");
      }
      return cmd_compare(cmp);
    }
    if (predict->parsed()) {
      if (text_opt->count() == 0 && file_opt->count() == 0) throw ValidationError("pass --text or --file");
      return cmd_predict(predict_model, predict_text, predict_file);
    }
    if (serve->parsed()) return cmd_serve(serve_model, serve_host, serve_port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
