// Copyright 2026 The QueryCat Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "querycat/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "querycat/checkpoint.hpp"
#include "querycat/error.hpp"
#include "querycat/grad_check.hpp"
#include "querycat/ingest.hpp"
#include "querycat/io.hpp"
#include "querycat/models.hpp"
#include "querycat/serve.hpp"
#include "querycat/synthetic.hpp"
#include "querycat/textprep.hpp"

namespace querycat::cli {
namespace {

// Thrown for problems with the invocation rather than the data.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string train_path(const std::string& prefix) { return prefix + ".train.tsv"; }
std::string test_path(const std::string& prefix) { return prefix + ".test.tsv"; }

struct SynthArgs {
  std::string out;
  std::string truth_out;
  SynthSpec spec{.queries_per_class = 4000};
  std::string mode = "separable";
  std::uint64_t seed = 1;
};

struct IngestArgs {
  std::string in;
  std::string out;
  bool strict = false;
  bool keep_bots = false;
  std::int64_t dedupe_window = 60;
  std::int64_t min_clicks = 3;
  std::vector<CategoryId> live_categories;
  std::int64_t start_ts = std::numeric_limits<std::int64_t>::min();
  std::int64_t end_ts = std::numeric_limits<std::int64_t>::max();
  std::size_t shards = 1;
};

struct PrepareArgs {
  std::string in;
  std::string dataset_out;
  std::string vocab_out;
  PrepareOptions options;
};

struct TrainArgs {
  std::string dataset_in;
  std::string vocab_in;
  std::string model_out;
  std::string metrics_out;
  std::string model = "cnn";
  std::size_t embedding_dim = 128;
  std::vector<std::size_t> filter_widths{1, 2, 3};
  std::size_t num_filters = 128;
  std::size_t hidden_layers = 2;
  std::size_t hidden_size = 200;
  std::size_t seq_len = 10;
  std::string activation = "relu";
  bool static_embedding = false;
  TrainingConfig training;
  std::string optimizer = "adam";
};

struct EvalArgs {
  std::string model_in;
  std::string vocab_in;
  std::string dataset_in;
  std::string split = "test";
};

struct PredictArgs {
  std::string model_in;
  std::string vocab_in;
  std::string query;
  std::size_t top_k = 3;
};

struct ServeArgs {
  std::string model_in;
  std::string vocab_in;
  ServiceConfig service;
};

struct GradCheckArgs {
  double epsilon = 1e-4;
  std::uint64_t seed = 1;
  std::string activation = "tanh";
};

// Fills options of `sub` that were not given on the command line from a
// TOML file. Keys may be top level or under a [<subcommand>] table.
void apply_config(CLI::App& sub, const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw UsageError("config file not found: " + path);
  }
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(path);
  } catch (const CLI::Error& e) {
    throw UsageError("cannot read config " + path + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty() &&
        (item.parents.size() != 1 || item.parents.front() != sub.get_name())) {
      continue;
    }
    std::string key = item.name;
    std::replace(key.begin(), key.end(), '_', '-');
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config") {
      throw UsageError("unknown key '" + item.name + "' in " + path);
    }
    if (opt->count() > 0) continue;
    std::vector<std::string> inputs = item.inputs;
    if (opt->get_type_size() == 0 && inputs.empty()) inputs.push_back("true");
    opt->add_result(inputs);
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError("bad value for '" + item.name + "' in " + path + ": " + e.what());
    }
  }
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SynthSpec spec = a.spec;
  if (a.mode == "separable") {
    spec.mode = SynthMode::kSeparable;
  } else if (a.mode == "order") {
    spec.mode = SynthMode::kOrderSensitive;
  } else {
    throw UsageError("unknown --mode " + a.mode);
  }
  spec.validate();
  const SyntheticLog log = generate_synthetic_log(spec, a.seed);
  write_file_atomically(a.out, [&](std::ostream& os) { write_click_log(os, log.events); });
  if (!a.truth_out.empty()) {
    write_file_atomically(a.truth_out, [&](std::ostream& os) {
      os << "query\tcategory\n";
      for (const auto& [query, category] : log.truth) os << query << '\t' << category << '\n';
    });
  }
  out << "wrote " << log.events.size() << " clicks for " << log.truth.size() << " queries to "
      << a.out << '\n';
  return kExitOk;
}

int cmd_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
  NoisePolicy policy;
  policy.drop_bots = !a.keep_bots;
  policy.dedupe_window_seconds = a.dedupe_window;
  policy.min_clicks_per_query = a.min_clicks;
  if (!a.live_categories.empty()) {
    policy.live_categories.emplace(a.live_categories.begin(), a.live_categories.end());
  }
  policy.validate();
  if (a.start_ts > a.end_ts) throw UsageError("--start-ts is after --end-ts");
  if (a.shards == 0) throw UsageError("--shards must be >= 1");

  std::ifstream in(a.in, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + a.in);
  ParseResult parsed = parse_click_log(in, a.strict);
  if (parsed.skipped > 0) err << "skipped " << parsed.skipped << " malformed lines\n";

  const auto windowed = filter_time_range(parsed.events, a.start_ts, a.end_ts);
  const auto kept = filter_noise(windowed, policy);
  const auto counts = a.shards > 1 ? aggregate_sharded(kept, a.shards) : aggregate(kept);
  const auto records = label_all(counts);
  write_file_atomically(a.out, [&](std::ostream& os) { write_labeled_tsv(os, records); });
  out << "parsed " << parsed.events.size() << " clicks, kept " << kept.size() << ", labeled "
      << records.size() << " queries to " << a.out << '\n';
  return kExitOk;
}

int cmd_prepare(const PrepareArgs& a, std::ostream& out) {
  if (a.options.seq_len == 0) throw UsageError("--seq-len must be >= 1");
  std::ifstream in(a.in, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + a.in);
  const auto records = read_labeled_tsv(in);
  const PreparedData data = prepare_datasets(records, a.options);
  save_vocabulary(data.vocab, a.vocab_out);
  save_dataset(data.train, train_path(a.dataset_out));
  save_dataset(data.test, test_path(a.dataset_out));
  out << "vocabulary " << data.vocab.size() << " rows, train " << data.train.size()
      << ", test " << data.test.size() << ", classes " << data.train.num_classes() << '\n';
  return kExitOk;
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  TrainingConfig training = a.training;
  try {
    training.optimizer.kind = optimizer_from_string(a.optimizer);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  Activation activation;
  try {
    activation = activation_from_string(a.activation);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  const Vocabulary vocab = load_vocabulary(a.vocab_in);
  const Dataset train_set = load_dataset(train_path(a.dataset_in));
  Dataset eval_set;
  if (std::filesystem::exists(test_path(a.dataset_in))) {
    eval_set = load_dataset(test_path(a.dataset_in));
  }
  if (train_set.seq_len != a.seq_len) {
    throw Error(ErrorCode::kConfigMismatch,
                "dataset seq_len " + std::to_string(train_set.seq_len) + " differs from --seq-len " +
                    std::to_string(a.seq_len));
  }

  Classifier model;
  if (a.model == "cnn") {
    CnnConfig c;
    c.embedding_dim = a.embedding_dim;
    c.filter_widths = a.filter_widths;
    c.filters_per_width = a.num_filters;
    c.seq_len = a.seq_len;
    c.n_classes = train_set.num_classes();
    c.activation = activation;
    c.embedding_trainable = !a.static_embedding;
    c.training = training;
    model = build_cnn(c, vocab.size(), training.seed);
  } else if (a.model == "mlp") {
    MlpConfig c;
    c.hidden_layers = a.hidden_layers;
    c.hidden_size = a.hidden_size;
    c.embedding_dim = a.embedding_dim;
    c.seq_len = a.seq_len;
    c.n_classes = train_set.num_classes();
    c.activation = activation;
    c.embedding_trainable = !a.static_embedding;
    c.training = training;
    model = build_mlp(c, vocab.size(), training.seed);
  } else {
    throw UsageError("unknown --model " + a.model);
  }
  model.bind(train_set, vocab);
  out << a.model << " with " << model.network->parameter_count() << " parameters, "
      << train_set.size() << " training examples\n";

  const MetricsCurve curve = train(model, train_set, eval_set, &err);
  save_model(model, a.model_out);
  if (!a.metrics_out.empty()) curve.save_csv(a.metrics_out);
  out << "saved model " << checkpoint_version(a.model_out) << " to " << a.model_out << '\n';
  return kExitOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  std::string path;
  if (a.split == "test") {
    path = test_path(a.dataset_in);
  } else if (a.split == "train") {
    path = train_path(a.dataset_in);
  } else {
    throw UsageError("unknown --split " + a.split);
  }
  const Vocabulary vocab = load_vocabulary(a.vocab_in);
  const Classifier model = load_model(a.model_in, vocab);
  const Dataset dataset = load_dataset(path);
  const EvalResult result = evaluate(model, dataset);
  write_eval_report(out, result, model.class_ids);
  return kExitOk;
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  if (a.top_k == 0) throw UsageError("--top-k must be >= 1");
  const Vocabulary vocab = load_vocabulary(a.vocab_in);
  const Classifier model = load_model(a.model_in, vocab);
  const auto ranked = predict(model, a.query, vocab);
  char buf[64];
  for (std::size_t i = 0; i < ranked.size() && i < a.top_k; ++i) {
    std::snprintf(buf, sizeof buf, "%.6f", ranked[i].probability);
    out << ranked[i].category_id << '\t' << buf << '\n';
  }
  return kExitOk;
}

int cmd_serve(const ServeArgs& a, std::ostream& out) {
  ServiceConfig config = a.service;
  config.model_path = a.model_in;
  config.vocab_path = a.vocab_in;
  try {
    config.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  PredictionService service(config);
  const int port = service.start();
  out << "serving model " << service.snapshot()->version << " on " << config.host << ':' << port
      << std::endl;
  service.wait();
  return kExitOk;
}

int cmd_gradcheck(const GradCheckArgs& a, std::ostream& out) {
  Activation activation;
  try {
    activation = activation_from_string(a.activation);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (!(a.epsilon > 0.0)) throw UsageError("--epsilon must be positive");
  const TinyGradCheck r = run_tiny_grad_check(a.epsilon, a.seed, activation);
  const double worst = std::max(r.cnn.max_relative_error, r.mlp.max_relative_error);
  char buf[160];
  for (const auto& [name, g] : {std::pair{"cnn", &r.cnn}, std::pair{"mlp", &r.mlp}}) {
    std::snprintf(buf, sizeof buf, "%s: max relative error %.3e at %s[%zu], %zu checked, %zu skipped",
                  name, g->max_relative_error, g->worst_parameter.c_str(), g->worst_index,
                  g->checked, g->skipped);
    out << buf << '\n';
  }
  std::snprintf(buf, sizeof buf, "max relative error %.3e (%.2f s)", worst, r.seconds);
  out << buf << '\n';
  return worst < 1e-4 ? kExitOk : kExitData;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidSpec:
      return kExitUsage;
    default:
      return kExitData;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Query category classification from click logs", "querycat"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  const auto add_config = [](CLI::App* sub, std::string& path) {
    sub->add_option("--config", path, "TOML file with defaults for this subcommand");
  };

  SynthArgs synth;
  std::string synth_config;
  auto* s = app.add_subcommand("synth", "Generate a synthetic click log");
  add_config(s, synth_config);
  s->add_option("--out", synth.out, "Click log path (JSON lines)")->required();
  s->add_option("--truth-out", synth.truth_out, "Optional query -> category TSV");
  s->add_option("--classes", synth.spec.n_classes);
  s->add_option("--queries-per-class", synth.spec.queries_per_class);
  s->add_option("--clicks-per-query", synth.spec.clicks_per_query);
  s->add_option("--noise", synth.spec.noise_fraction, "Fraction of clicks sent to a wrong class");
  s->add_option("--vocab-pool", synth.spec.vocab_pool_size, "Total word pool shared out among classes");
  s->add_option("--mode", synth.mode, "separable | order");
  s->add_flag("--shifted", synth.spec.shifted, "Reverse within-pool word popularity");
  s->add_option("--seed", synth.seed);

  IngestArgs ingest;
  std::string ingest_config;
  auto* g = app.add_subcommand("ingest", "Filter, aggregate and label a click log");
  add_config(g, ingest_config);
  g->add_option("--in", ingest.in, "Click log path")->required();
  g->add_option("--out", ingest.out, "Labeled TSV path")->required();
  g->add_flag("--strict", ingest.strict, "Fail on the first malformed line");
  g->add_flag("--keep-bots", ingest.keep_bots);
  g->add_option("--dedupe-window", ingest.dedupe_window, "Seconds");
  g->add_option("--min-clicks", ingest.min_clicks);
  g->add_option("--live-categories", ingest.live_categories)->delimiter(',');
  g->add_option("--start-ts", ingest.start_ts);
  g->add_option("--end-ts", ingest.end_ts);
  g->add_option("--shards", ingest.shards);

  PrepareArgs prepare;
  std::string prepare_config;
  auto* p = app.add_subcommand("prepare", "Build vocabulary and encoded train/test datasets");
  add_config(p, prepare_config);
  p->add_option("--in", prepare.in, "Labeled TSV path")->required();
  p->add_option("--dataset-out", prepare.dataset_out, "Prefix for <prefix>.train.tsv/.test.tsv")
      ->required();
  p->add_option("--vocab-out", prepare.vocab_out)->required();
  p->add_option("--train-ratio", prepare.options.train_ratio);
  p->add_option("--seed", prepare.options.seed);
  p->add_option("--max-vocab", prepare.options.max_vocab, "Table size including <pad> and <unk>");
  p->add_option("--seq-len", prepare.options.seq_len);

  TrainArgs tr;
  std::string train_config;
  auto* t = app.add_subcommand("train", "Train a classifier");
  add_config(t, train_config);
  t->add_option("--dataset-in", tr.dataset_in, "Dataset prefix")->required();
  t->add_option("--vocab-in", tr.vocab_in)->required();
  t->add_option("--model-out", tr.model_out)->required();
  t->add_option("--metrics-out", tr.metrics_out, "Metrics CSV path");
  t->add_option("--model", tr.model, "cnn | mlp");
  t->add_option("--embedding-dim", tr.embedding_dim);
  t->add_option("--filter-widths", tr.filter_widths)->delimiter(',');
  t->add_option("--num-filters", tr.num_filters, "Filters per width");
  t->add_option("--hidden-layers", tr.hidden_layers);
  t->add_option("--hidden-size", tr.hidden_size);
  t->add_option("--seq-len", tr.seq_len);
  t->add_option("--activation", tr.activation, "relu | tanh");
  t->add_flag("--static-embedding", tr.static_embedding, "Freeze the embedding table");
  t->add_option("--keep-prob", tr.training.keep_prob);
  t->add_option("--batch-size", tr.training.batch_size);
  t->add_option("--epochs", tr.training.epochs);
  t->add_option("--optimizer", tr.optimizer, "adam | sgd");
  t->add_option("--lr", tr.training.optimizer.learning_rate);
  t->add_option("--seed", tr.training.seed);
  t->add_option("--threads", tr.training.num_threads);
  t->add_flag("--best-on-eval", tr.training.best_on_eval);

  EvalArgs ev;
  std::string eval_config;
  auto* e = app.add_subcommand("eval", "Report accuracy and the confusion matrix");
  add_config(e, eval_config);
  e->add_option("--model-in", ev.model_in)->required();
  e->add_option("--vocab-in", ev.vocab_in)->required();
  e->add_option("--dataset-in", ev.dataset_in, "Dataset prefix")->required();
  e->add_option("--split", ev.split, "test | train");

  PredictArgs pr;
  std::string predict_config;
  auto* q = app.add_subcommand("predict", "Classify one query");
  add_config(q, predict_config);
  q->add_option("--model-in", pr.model_in)->required();
  q->add_option("--vocab-in", pr.vocab_in)->required();
  q->add_option("--query", pr.query)->required();
  q->add_option("--top-k", pr.top_k);

  ServeArgs sv;
  std::string serve_config;
  auto* v = app.add_subcommand("serve", "Serve predictions over HTTP");
  add_config(v, serve_config);
  v->add_option("--model-in", sv.model_in)->required();
  v->add_option("--vocab-in", sv.vocab_in)->required();
  v->add_option("--host", sv.service.host);
  v->add_option("--port", sv.service.port);
  v->add_option("--top-k", sv.service.top_k);
  v->add_option("--max-query-bytes", sv.service.max_query_bytes);

  GradCheckArgs gc;
  std::string gradcheck_config;
  auto* c = app.add_subcommand("gradcheck", "Finite-difference check of the tiny models");
  add_config(c, gradcheck_config);
  c->add_option("--epsilon", gc.epsilon);
  c->add_option("--seed", gc.seed);
  c->add_option("--activation", gc.activation, "tanh | relu");

  const std::vector<std::pair<CLI::App*, std::string*>> configs{
      {s, &synth_config},   {g, &ingest_config}, {p, &prepare_config},
      {t, &train_config},   {e, &eval_config},   {q, &predict_config},
      {v, &serve_config},   {c, &gradcheck_config}};

  try {
    // CLI11 wants the arguments in reverse order.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    // Required options may come from the config file, so requirements are
    // checked after it is applied.
    for (auto* sub : app.get_subcommands({})) {
      for (auto* opt : sub->get_options()) {
        if (opt->get_required() && opt->get_name() != "--help") opt->required(false)->group("Required");
      }
    }
    app.parse(reversed);
    for (const auto& [sub, path] : configs) {
      if (!sub->parsed()) continue;
      if (!path->empty()) apply_config(*sub, *path);
      for (auto* opt : sub->get_options()) {
        if (opt->get_group() == "Required" && opt->count() == 0) {
          throw UsageError(opt->get_name() + " is required");
        }
      }
    }
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& ex) {
    err << "querycat: " << ex.what() << '\n';
    return kExitUsage;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, out);
    if (g->parsed()) return cmd_ingest(ingest, out, err);
    if (p->parsed()) return cmd_prepare(prepare, out);
    if (t->parsed()) return cmd_train(tr, out, err);
    if (e->parsed()) return cmd_eval(ev, out);
    if (q->parsed()) return cmd_predict(pr, out);
    if (v->parsed()) return cmd_serve(sv, out);
    if (c->parsed()) return cmd_gradcheck(gc, out);
  } catch (const UsageError& ex) {
    err << "querycat: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const Error& ex) {
    err << "querycat: " << to_string(ex.code()) << ": " << ex.what() << '\n';
    return exit_code_for(ex);
  } catch (const std::exception& ex) {
    err << "querycat: " << ex.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace querycat::cli
