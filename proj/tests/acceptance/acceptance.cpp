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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "querycat/checkpoint.hpp"
#include "querycat/cli.hpp"
#include "querycat/error.hpp"
#include "querycat/grad_check.hpp"
#include "querycat/ingest.hpp"
#include "querycat/io.hpp"
#include "querycat/models.hpp"
#include "querycat/serve.hpp"
#include "querycat/synthetic.hpp"
#include "querycat/text_cnn.hpp"
#include "querycat/textprep.hpp"
#include "test_support.hpp"

// After Eigen: <resolv.h> defines a _res macro.
#include <httplib.h>

namespace querycat {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string fmt(const char* format, auto... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

// Artifacts of the end-to-end run shared by later criteria.
struct EndToEnd {
  bool ran = false;
  std::string dir;
  double seconds = 0.0;
  double test_accuracy = 0.0;
  std::size_t queries = 0;
};

struct Context {
  testing::TempDir scratch;
  std::string artifacts;  // keep end-to-end files here when set
  EndToEnd e2e;
};

// 1. Finite-difference gradient check on the tiny tanh model.
Verdict gradient_correctness() {
  const TinyGradCheck r = run_tiny_grad_check(1e-4, 1, Activation::kTanh);
  const double worst = std::max(r.cnn.max_relative_error, r.mlp.max_relative_error);

  Rng rng(2);
  const TextCnn net(TextCnnShape{20, 4, {1, 2}, 2, 5, 3, Activation::kTanh}, 1);
  std::vector<EncodedQuery> batch = testing::random_dataset(rng, 6, 20, 5, 3).examples;
  auto cache = net.make_cache();
  net.forward(batch, nullptr, cache.get());
  Gradients g;
  net.backward(*cache, g);
  g[net.parameters().size() - 2](0, 0) += 0.1;
  const double corrupted = grad_check(net, batch, 1e-4, nullptr, &g).max_relative_error;

  const bool pass = worst < 1e-4 && r.seconds < 10.0 && corrupted > 1e-2;
  return {pass, fmt("max rel err %.2e (cnn %zu coords, mlp %zu coords) in %.2fs; "
                    "corrupted dense grad -> %.2e",
                    worst, r.cnn.checked, r.mlp.checked, r.seconds, corrupted)};
}

// 2. Fixed-length integer encoding.
Verdict encoding_fidelity() {
  std::vector<std::string> words;
  for (int id = 2; id <= 1643; ++id) words.push_back("w" + std::to_string(id));
  words[1235 - 2] = "giving";
  words[1643 - 2] = "away";
  words[1245 - 2] = "free";
  const Vocabulary vocab(words, words.size() + 2);
  const auto ids = encode(normalize("Giving away FREE free!"), vocab, 9);
  const std::vector<std::int32_t> expected{1235, 1643, 1245, 1245, 0, 0, 0, 0, 0};
  bool ok = ids == expected;

  Rng rng(3);
  std::vector<std::string> pool;
  for (int i = 0; i < 300; ++i) pool.push_back("tok" + std::to_string(i));
  const Vocabulary built = build_vocab(testing::random_queries(rng, 2000, pool, 5), 200);
  std::size_t bad_length = 0, bad_shared = 0;
  const auto probes = testing::random_queries(rng, 10000, pool, 15);
  for (const auto& q : probes) {
    const std::size_t n = 1 + rng.uniform_index(12);
    const auto enc = encode(q, built, n);
    if (enc.size() != n) ++bad_length;
    const auto toks = tokenize(q);
    std::map<std::string_view, std::int32_t> first_id;
    for (std::size_t i = 0; i < std::min(n, toks.size()); ++i) {
      const auto [it, fresh] = first_id.emplace(toks[i], enc[i]);
      if (!fresh && it->second != enc[i]) ++bad_shared;
      if (enc[i] != built.id_of(toks[i])) ++bad_shared;
    }
  }
  ok = ok && bad_length == 0 && bad_shared == 0;
  std::string got;
  for (const auto id : ids) got += (got.empty() ? "" : ",") + std::to_string(id);
  return {ok, fmt("example -> [%s]; 10000 random queries: %zu wrong lengths, %zu id mismatches",
                  got.c_str(), bad_length, bad_shared)};
}

// 3. Aggregation and dominance labeling against a quadratic recount.
Verdict labeling_oracle() {
  Rng rng(4);
  std::size_t mismatches = 0, ties = 0, records = 0;
  double worst_sum = 0.0;
  for (int log = 0; log < 100; ++log) {
    const std::size_t n = 1 + rng.uniform_index(10000);
    const int n_queries = 1 + static_cast<int>(rng.uniform_index(400));
    const int n_categories = 2 + static_cast<int>(rng.uniform_index(6));
    const auto events = testing::random_events(rng, n, n_queries, n_categories);

    std::vector<std::string> norm;
    norm.reserve(events.size());
    for (const auto& e : events) norm.push_back(normalize(e.query_raw));
    std::vector<std::string> distinct;
    for (const auto& q : norm) {
      if (!q.empty() && std::find(distinct.begin(), distinct.end(), q) == distinct.end()) {
        distinct.push_back(q);
      }
    }
    std::sort(distinct.begin(), distinct.end());

    const auto labeled = label_all(aggregate(events));
    if (labeled.size() != distinct.size()) {
      ++mismatches;
      continue;
    }
    for (std::size_t qi = 0; qi < distinct.size(); ++qi) {
      const auto& rec = labeled[qi];
      ++records;
      std::map<CategoryId, std::int64_t> counts;
      std::int64_t total = 0;
      for (CategoryId c = 10; c < 10 + n_categories; ++c) {
        std::int64_t k = 0;
        for (std::size_t i = 0; i < events.size(); ++i) {
          if (norm[i] == distinct[qi] && events[i].category_id == c) ++k;
        }
        if (k > 0) counts[c] = k;
        total += k;
      }
      CategoryId dominant = -1;
      std::int64_t best = -1;
      int at_best = 0;
      for (const auto& [c, k] : counts) {
        if (k > best) {
          best = k;
          dominant = c;
          at_best = 1;
        } else if (k == best) {
          ++at_best;
        }
      }
      if (at_best > 1) ++ties;
      double sum = 0.0;
      bool rates_ok = rec.rates.size() == counts.size();
      for (const auto& [c, k] : counts) {
        const auto it = rec.rates.find(c);
        if (it == rec.rates.end() || it->second != static_cast<double>(k) / static_cast<double>(total)) {
          rates_ok = false;
        }
      }
      for (const auto& [c, r] : rec.rates) sum += r;
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
      if (rec.query_norm != distinct[qi] || rec.dominant_category != dominant ||
          rec.total_clicks != total || !rates_ok) {
        ++mismatches;
      }
    }
  }
  return {mismatches == 0 && worst_sum <= 1e-9,
          fmt("100 logs, %zu queries (%zu with tied maxima): %zu mismatches; max |sum rates - 1| = %.1e",
              records, ties, mismatches, worst_sum)};
}

int cli(const std::vector<std::string>& args, std::ostream& log) {
  std::ostringstream out;
  const int code = cli::run(args, out, log);
  log << out.str();
  return code;
}

// 4. Full synthetic pipeline through the command-line tool on defaults.
Verdict end_to_end(Context& ctx) {
  EndToEnd& e = ctx.e2e;
  e.dir = ctx.artifacts.empty() ? ctx.scratch.file("e2e") : ctx.artifacts;
  std::filesystem::create_directories(e.dir);
  const auto f = [&](const std::string& name) { return e.dir + "/" + name; };
  std::ostringstream log;
  const auto start = Clock::now();
  const bool ok =
      cli({"synth", "--out", f("clicks.jsonl")}, log) == 0 &&
      cli({"ingest", "--in", f("clicks.jsonl"), "--out", f("labeled.tsv")}, log) == 0 &&
      cli({"prepare", "--in", f("labeled.tsv"), "--dataset-out", f("ds"), "--vocab-out",
           f("vocab.tsv")},
          log) == 0 &&
      cli({"train", "--dataset-in", f("ds"), "--vocab-in", f("vocab.tsv"), "--model-out",
           f("model.qcat"), "--metrics-out", f("metrics.csv")},
          log) == 0;
  std::ostringstream report;
  const bool evaluated = ok && cli::run({"eval", "--model-in", f("model.qcat"), "--vocab-in",
                                         f("vocab.tsv"), "--dataset-in", f("ds")},
                                        report, log) == 0;
  e.seconds = seconds_since(start);
  {
    std::ofstream keep(f("pipeline.log"));
    keep << log.str() << report.str();
  }
  if (!evaluated) return {false, "pipeline failed: " + log.str().substr(0, 400)};
  e.ran = true;
  const std::string text = report.str();
  e.test_accuracy = std::stod(text.substr(text.find("accuracy ") + 9));
  const Dataset train_set = load_dataset(f("ds.train.tsv"));
  const Dataset test_set = load_dataset(f("ds.test.tsv"));
  e.queries = train_set.size() + test_set.size();
  const bool pass = e.test_accuracy >= 0.95 && e.seconds <= 600.0 && e.queries >= 31000;
  return {pass, fmt("%zu queries (train %zu / test %zu), vocab %zu rows, test accuracy %.4f, "
                    "wall clock %.0fs",
                    e.queries, train_set.size(), test_set.size(),
                    load_vocabulary(f("vocab.tsv")).size(), e.test_accuracy, e.seconds)};
}

PreparedData synthetic(SynthMode mode, int queries_per_class, std::uint64_t seed) {
  SynthSpec spec;
  spec.mode = mode;
  spec.queries_per_class = queries_per_class;
  const auto log = generate_synthetic_log(spec, seed);
  return prepare_datasets(label_all(aggregate(filter_noise(log.events, NoisePolicy{}))),
                          PrepareOptions{.seed = seed});
}

// 5. CNN versus two-layer MLP where the class depends on word order.
Verdict baseline_ordering() {
  const PreparedData data = synthetic(SynthMode::kOrderSensitive, 1000, 5);
  TrainingConfig training;
  training.epochs = 20;
  CnnConfig cnn_config;
  cnn_config.training = training;
  MlpConfig mlp_config;
  mlp_config.hidden_layers = 2;
  mlp_config.hidden_size = 200;
  mlp_config.training = training;

  Classifier cnn = build_cnn(cnn_config, data.vocab.size(), 1);
  cnn.bind(data.train, data.vocab);
  train(cnn, data.train, Dataset{});
  Classifier mlp = build_mlp(mlp_config, data.vocab.size(), 1);
  mlp.bind(data.train, data.vocab);
  train(mlp, data.train, Dataset{});
  const double a_cnn = evaluate(cnn, data.test).accuracy;
  const double a_mlp = evaluate(mlp, data.test).accuracy;
  return {a_cnn >= a_mlp, fmt("order-sensitive set (%zu train / %zu test, %zu epochs): "
                              "CNN %.4f vs MLP(2x200) %.4f",
                              data.train.size(), data.test.size(), training.epochs, a_cnn, a_mlp)};
}

// 6. Numeric properties of the layers.
Verdict numeric_properties() {
  Rng rng(6);
  double worst_sum = 0.0, worst_shift = 0.0;
  for (int t = 0; t < 10000; ++t) {
    Vector y(8);
    for (Eigen::Index i = 0; i < 8; ++i) y(i) = rng.uniform_open(-40, 40);
    const Vector p = softmax(y);
    worst_sum = std::max(worst_sum, std::abs(p.sum() - 1.0));
    const Vector q = softmax((y.array() + rng.uniform_open(-1000, 1000)).matrix());
    worst_shift = std::max(worst_shift, (p - q).cwiseAbs().maxCoeff());
  }
  const double ce = cross_entropy(Vector::Constant(8, 0.125), 3);
  const double ce_err = std::abs(ce - std::log(8.0));

  std::size_t bad_widths = 0, pairs = 0;
  for (std::size_t n = 1; n <= 24; ++n) {
    for (std::size_t h = 1; h <= n; ++h) {
      ConvFilterBank bank;
      bank.width = h;
      bank.filters = Matrix::Ones(2, static_cast<Eigen::Index>(h * 3));
      bank.biases = Vector::Zero(2);
      const FeatureMap fm = conv_forward(Matrix::Ones(static_cast<Eigen::Index>(n), 3), bank, Activation::kRelu);
      ++pairs;
      if (static_cast<std::size_t>(fm.values.cols()) != n - h + 1) ++bad_widths;
    }
  }

  Vector z(16);
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.uniform_open(0.5, 3.0) * (i % 2 ? 1 : -1);
  Vector sum = Vector::Zero(z.size());
  for (int t = 0; t < 20000; ++t) sum += dropout(z, DropoutSpec{0.5, DropoutMode::kTrain}, rng);
  double worst_rel = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    worst_rel = std::max(worst_rel, std::abs(sum(i) / 20000.0 - z(i)) / std::abs(z(i)));
  }
  const bool pass = worst_sum <= 1e-12 && worst_shift <= 1e-12 && ce_err <= 1e-9 &&
                    bad_widths == 0 && worst_rel <= 0.02;
  return {pass, fmt("softmax |sum-1| %.1e, shift diff %.1e; CE(uniform 8) err %.1e; "
                    "%zu/%zu feature-map widths wrong; dropout mean max rel dev %.5f",
                    worst_sum, worst_shift, ce_err, bad_widths, pairs, worst_rel)};
}

// The in-process replica of the command-line training run.
struct Replica {
  Classifier model;
  Vocabulary vocab;
  Dataset test;
  MetricsCurve curve;  // full precision; the CSV rounds to 6 decimals
};

std::optional<Replica> replica;

// 7. Byte-identical reruns and the zero learning rate no-op.
Verdict determinism(Context& ctx) {
  if (!ctx.e2e.ran) return {false, "end-to-end run unavailable"};
  const auto f = [&](const std::string& name) { return ctx.e2e.dir + "/" + name; };
  Replica r;
  r.vocab = load_vocabulary(f("vocab.tsv"));
  const Dataset train_set = load_dataset(f("ds.train.tsv"));
  r.test = load_dataset(f("ds.test.tsv"));
  CnnConfig config;
  config.n_classes = train_set.num_classes();
  r.model = build_cnn(config, r.vocab.size(), config.training.seed);
  r.model.bind(train_set, r.vocab);
  const auto start = Clock::now();
  const MetricsCurve curve = train(r.model, train_set, r.test);
  const double secs = seconds_since(start);
  const std::string path = ctx.scratch.file("replica.qcat");
  save_model(r.model, path);
  std::ostringstream csv;
  curve.write_csv(csv);
  const bool same_csv = csv.str() == read_file(f("metrics.csv"));
  const bool same_model = read_file(path) == read_file(f("model.qcat"));

  CnnConfig frozen;
  frozen.embedding_dim = 16;
  frozen.filters_per_width = 8;
  frozen.training.epochs = 2;
  frozen.training.optimizer.learning_rate = 0.0;
  frozen.n_classes = train_set.num_classes();
  Classifier z = build_cnn(frozen, r.vocab.size(), 9);
  z.bind(train_set, r.vocab);
  const Classifier before = z;
  train(z, train_set, Dataset{});
  bool noop = true;
  for (std::size_t i = 0; i < z.network->parameters().size(); ++i) {
    noop = noop && z.network->parameters()[i].value == before.network->parameters()[i].value;
  }
  r.curve = curve;
  replica = std::move(r);
  return {same_csv && same_model && noop,
          fmt("rerun (%.0fs): metrics CSV %s, checkpoint %s; lr=0 parameters %s",
              secs, same_csv ? "byte-identical" : "DIFFERS", same_model ? "byte-identical" : "DIFFERS",
              noop ? "unchanged" : "CHANGED")};
}

std::vector<std::string> probe_queries(const Vocabulary& vocab, std::size_t count) {
  Rng rng(8);
  std::vector<std::string> pool(vocab.words().begin() + 2, vocab.words().end());
  pool.push_back("unseenword");
  pool.push_back("another oov");
  std::vector<std::string> out;
  while (out.size() < count) {
    auto batch = testing::random_queries(rng, count, pool, 5);
    for (auto& q : batch) {
      if (!q.empty() && out.size() < count) out.push_back(std::move(q));
    }
  }
  return out;
}

json to_json(const std::vector<Prediction>& ranked, std::size_t top_k) {
  json out = json::array();
  for (std::size_t i = 0; i < ranked.size() && i < top_k; ++i) {
    out.push_back({{"category_id", ranked[i].category_id}, {"probability", ranked[i].probability}});
  }
  return out;
}

// 8. Checkpoint round trip, service consistency and reload under load.
Verdict serving(Context& ctx) {
  if (!replica) return {false, "trained model unavailable"};
  const auto f = [&](const std::string& name) { return ctx.e2e.dir + "/" + name; };
  const Classifier& live = replica->model;
  const Vocabulary& vocab = replica->vocab;
  const Classifier loaded = load_model(f("model.qcat"), vocab);
  const auto probes = probe_queries(vocab, 10000);
  std::size_t flips = 0;
  for (const auto& q : probes) {
    if (predict(live, q, vocab)[0].category_id != predict(loaded, q, vocab)[0].category_id) ++flips;
  }

  // A second, differently trained checkpoint to reload against.
  CnnConfig small;
  small.embedding_dim = 16;
  small.filters_per_width = 8;
  small.training.epochs = 1;
  small.n_classes = live.class_ids.size();
  const Dataset train_set = load_dataset(f("ds.train.tsv"));
  Classifier other = build_cnn(small, vocab.size(), 2);
  other.bind(train_set, vocab);
  train(other, train_set, Dataset{});
  const std::string other_path = ctx.scratch.file("other.qcat");
  save_model(other, other_path);
  const Classifier other_loaded = load_model(other_path, vocab);

  ServiceConfig config;
  config.port = 0;
  config.model_path = f("model.qcat");
  config.vocab_path = f("vocab.tsv");
  PredictionService service(config);
  const int port = service.start();
  std::map<std::string, const Classifier*> by_version{
      {checkpoint_version(f("model.qcat")), &loaded}, {checkpoint_version(other_path), &other_loaded}};

  std::size_t service_mismatch = 0;
  {
    httplib::Client client("127.0.0.1", port);
    for (std::size_t i = 0; i < 1000; ++i) {
      const auto res = client.Post("/predict", json{{"query", probes[i]}, {"top_k", 8}}.dump(),
                                   "application/json");
      if (!res || res->status != 200 ||
          json::parse(res->body)["predictions"] != to_json(predict(loaded, probes[i], vocab), 8)) {
        ++service_mismatch;
      }
    }
  }

  std::atomic<std::size_t> mixed{0}, errors{0}, served{0}, from_first{0};
  std::atomic<int> reloads{0};
  std::atomic<bool> stop{false};
  std::thread reloader([&] {
    httplib::Client client("127.0.0.1", port);
    for (int i = 0; !stop; ++i) {
      const std::string path = i % 2 == 0 ? other_path : f("model.qcat");
      const auto res = client.Post("/reload", json{{"model_path", path}}.dump(), "application/json");
      if (!res || res->status != 200) ++errors;
      ++reloads;
    }
  });
  std::vector<std::thread> clients;
  for (int t = 0; t < 64; ++t) {
    clients.emplace_back([&, t] {
      httplib::Client client("127.0.0.1", port);
      for (std::size_t i = 0; i < 20; ++i) {
        const std::string& q = probes[(static_cast<std::size_t>(t) * 20 + i) % probes.size()];
        const auto res = client.Post("/predict", json{{"query", q}, {"top_k", 8}}.dump(), "application/json");
        if (!res || res->status != 200) {
          ++errors;
          continue;
        }
        const json body = json::parse(res->body, nullptr, false);
        const auto it = body.is_discarded() ? by_version.end()
                                            : by_version.find(body.value("model_version", ""));
        if (it == by_version.end() || body["predictions"] != to_json(predict(*it->second, q, vocab), 8)) {
          ++mixed;
        } else if (it->second == &loaded) {
          ++from_first;
        }
        ++served;
      }
    });
  }
  for (auto& c : clients) c.join();
  stop = true;
  reloader.join();
  service.stop();

  const std::size_t from_second = served - mixed - from_first;
  const bool pass = flips == 0 && service_mismatch == 0 && mixed == 0 && errors == 0 &&
                    served == 64 * 20 && from_first > 0 && from_second > 0;
  return {pass, fmt("round trip: %zu/10000 top-1 changes; service vs library: %zu/1000 differ; "
                    "64 clients x 20 requests during %d reloads (%zu/%zu answered by each model): "
                    "%zu mixed, %zu errors",
                    flips, service_mismatch, reloads.load(), from_first.load(), from_second,
                    mixed.load(), errors.load())};
}

// 9. Shape of the training curve of the end-to-end run.
Verdict convergence(Context& ctx) {
  if (!ctx.e2e.ran) return {false, "end-to-end run unavailable"};
  std::vector<double> loss, acc;
  std::vector<std::size_t> epoch;
  std::istringstream in(replica ? "" : read_file(ctx.e2e.dir + "/metrics.csv"));
  std::string line;
  std::getline(in, line);
  if (replica) {
    for (const MetricsRow& row : replica->curve.split_rows("train")) {
      epoch.push_back(row.epoch);
      loss.push_back(row.loss);
      acc.push_back(row.accuracy);
    }
  }
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    if (cols.size() != 5 || cols[2] != "train") continue;
    epoch.push_back(std::stoul(cols[1]));
    loss.push_back(std::stod(cols[3]));
    acc.push_back(std::stod(cols[4]));
  }
  constexpr std::size_t kWindow = 50;
  const auto window_mean = [](const std::vector<double>& v, std::size_t begin) {
    double s = 0.0;
    for (std::size_t i = begin; i < begin + kWindow; ++i) s += v[i];
    return s / kWindow;
  };
  if (loss.size() < 2 * kWindow) return {false, "training curve too short"};
  const double initial = window_mean(loss, 0);
  const std::size_t from = static_cast<std::size_t>(
      std::find(epoch.begin(), epoch.end(), std::size_t{5}) - epoch.begin());
  std::vector<double> smoothed;
  for (std::size_t b = from; b + kWindow <= loss.size(); b += kWindow) {
    smoothed.push_back(window_mean(loss, b));
  }
  // Rises are also counted while the loss is still above 1% of its initial
  // value, to tell a bumpy descent from noise around the floor.
  std::size_t increases = 0, early_increases = 0, first_rise_epoch = 0;
  double worst_rise = 0.0;
  for (std::size_t i = 1; i < smoothed.size(); ++i) {
    if (smoothed[i] > smoothed[i - 1]) {
      ++increases;
      if (smoothed[i - 1] > 0.01 * initial) ++early_increases;
      if (first_rise_epoch == 0) first_rise_epoch = epoch[from + i * kWindow];
      worst_rise = std::max(worst_rise, smoothed[i] - smoothed[i - 1]);
    }
  }
  const auto below = std::find_if(smoothed.begin(), smoothed.end(),
                                  [&](double v) { return v < 0.01 * initial; });
  const std::size_t floor_epoch =
      below == smoothed.end() ? 0 : epoch[from + static_cast<std::size_t>(below - smoothed.begin()) * kWindow];
  const double final_loss = window_mean(loss, loss.size() - kWindow);
  const double final_acc = window_mean(acc, acc.size() - kWindow);
  const bool pass = increases == 0 && final_loss < 0.05 * initial && final_acc >= 0.99;
  return {pass, fmt("%zu 50-step windows from epoch 5: %zu increases (first in epoch %zu, "
                    "largest +%.5f = %.3f%% of initial; %zu while above 1%% of initial, "
                    "which is first reached in epoch %zu); loss %.4f -> %.2e (%.4f%% of initial); "
                    "final train accuracy %.4f",
                    smoothed.size(), increases, first_rise_epoch, worst_rise,
                    100.0 * worst_rise / initial, early_increases, floor_epoch, initial,
                    final_loss, 100.0 * final_loss / initial, final_acc)};
}

}  // namespace
}  // namespace querycat

int main(int argc, char** argv) {
  using namespace querycat;
  CLI::App app{"querycat acceptance suite"};
  std::vector<int> only;
  app.add_option("--only", only, "Run just these criteria (later ones may need earlier ones)")
      ->delimiter(',');
  std::string artifacts;
  app.add_option("--artifacts", artifacts, "Keep the end-to-end run's files in this directory");
  CLI11_PARSE(app, argc, argv);

  Context ctx;
  ctx.artifacts = artifacts;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"encoding fidelity", encoding_fidelity},
      {"labeling oracle", labeling_oracle},
      {"end-to-end synthetic accuracy", [&] { return end_to_end(ctx); }},
      {"CNN vs MLP on word order", baseline_ordering},
      {"numeric layer properties", numeric_properties},
      {"determinism", [&] { return determinism(ctx); }},
      {"serialization and serving", [&] { return serving(ctx); }},
      {"convergence shape", [&] { return convergence(ctx); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto start = Clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << id << " (" << criteria[i].first
              << ", " << fmt("%.1fs", seconds_since(start)) << "): " << v.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
