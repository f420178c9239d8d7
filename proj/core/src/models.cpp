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

#include "querycat/models.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "querycat/checkpoint.hpp"
#include "querycat/error.hpp"
#include "querycat/io.hpp"
#include "querycat/mlp.hpp"
#include "querycat/text_cnn.hpp"

namespace querycat {
namespace {

using nlohmann::json;

constexpr std::size_t kEvalChunk = 256;

json training_to_json(const TrainingConfig& t) {
  return {{"batch_size", t.batch_size},
          {"epochs", t.epochs},
          {"keep_prob", t.keep_prob},
          {"optimizer", to_string(t.optimizer.kind)},
          {"learning_rate", t.optimizer.learning_rate},
          {"beta1", t.optimizer.beta1},
          {"beta2", t.optimizer.beta2},
          {"epsilon", t.optimizer.epsilon},
          {"seed", t.seed},
          {"best_on_eval", t.best_on_eval}};
}

TrainingConfig training_from_json(const json& j) {
  TrainingConfig t;
  t.batch_size = j.at("batch_size").get<std::size_t>();
  t.epochs = j.at("epochs").get<std::size_t>();
  t.keep_prob = j.at("keep_prob").get<double>();
  t.optimizer.kind = optimizer_from_string(j.at("optimizer").get<std::string>());
  t.optimizer.learning_rate = j.at("learning_rate").get<double>();
  t.optimizer.beta1 = j.at("beta1").get<double>();
  t.optimizer.beta2 = j.at("beta2").get<double>();
  t.optimizer.epsilon = j.at("epsilon").get<double>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.best_on_eval = j.value("best_on_eval", false);
  return t;
}

json config_to_json(const ModelConfig& config) {
  if (const auto* c = std::get_if<CnnConfig>(&config)) {
    return {{"embedding_dim", c->embedding_dim},
            {"filter_widths", c->filter_widths},
            {"filters_per_width", c->filters_per_width},
            {"seq_len", c->seq_len},
            {"n_classes", c->n_classes},
            {"activation", to_string(c->activation)},
            {"embedding_trainable", c->embedding_trainable},
            {"training", training_to_json(c->training)}};
  }
  const auto& m = std::get<MlpConfig>(config);
  return {{"hidden_layers", m.hidden_layers},
          {"hidden_size", m.hidden_size},
          {"embedding_dim", m.embedding_dim},
          {"seq_len", m.seq_len},
          {"n_classes", m.n_classes},
          {"activation", to_string(m.activation)},
          {"embedding_trainable", m.embedding_trainable},
          {"training", training_to_json(m.training)}};
}

ModelConfig config_from_json(const std::string& kind, const json& j) {
  if (kind == "cnn") {
    CnnConfig c;
    c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    c.filter_widths = j.at("filter_widths").get<std::vector<std::size_t>>();
    c.filters_per_width = j.at("filters_per_width").get<std::size_t>();
    c.seq_len = j.at("seq_len").get<std::size_t>();
    c.n_classes = j.at("n_classes").get<std::size_t>();
    c.activation = activation_from_string(j.at("activation").get<std::string>());
    c.embedding_trainable = j.at("embedding_trainable").get<bool>();
    c.training = training_from_json(j.at("training"));
    return c;
  }
  if (kind == "mlp") {
    MlpConfig m;
    m.hidden_layers = j.at("hidden_layers").get<std::size_t>();
    m.hidden_size = j.at("hidden_size").get<std::size_t>();
    m.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    m.seq_len = j.at("seq_len").get<std::size_t>();
    m.n_classes = j.at("n_classes").get<std::size_t>();
    m.activation = activation_from_string(j.at("activation").get<std::string>());
    m.embedding_trainable = j.at("embedding_trainable").get<bool>();
    m.training = training_from_json(j.at("training"));
    return m;
  }
  throw Error(ErrorCode::kFormatVersionMismatch, "unknown model kind '" + kind + "'");
}

void check_compatible(const Classifier& model, const Dataset& data, const char* which) {
  if (!model.network) throw Error(ErrorCode::kConfigMismatch, "classifier has no network");
  if (data.seq_len != model.network->seq_len()) {
    throw Error(ErrorCode::kConfigMismatch,
                std::string(which) + " seq_len " + std::to_string(data.seq_len) +
                    " != model seq_len " + std::to_string(model.network->seq_len()));
  }
  if (data.class_ids != model.class_ids) {
    throw Error(ErrorCode::kConfigMismatch, std::string(which) + " class ids differ from the model's");
  }
  if (data.class_ids.size() != model.network->num_classes()) {
    throw Error(ErrorCode::kConfigMismatch, std::string(which) + " class count differs from the model's");
  }
}

std::string six(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void TrainingConfig::validate() const {
  const auto fail = [](const std::string& why) { throw Error(ErrorCode::kInvalidArgument, why); };
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (epochs < 1) fail("epochs must be >= 1");
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) fail("keep_prob must be in (0, 1]");
  optimizer.validate();
}

void CnnConfig::validate() const {
  TextCnnShape{2, embedding_dim, filter_widths, filters_per_width, seq_len, n_classes, activation}
      .validate();
  training.validate();
}

void MlpConfig::validate() const {
  MlpShape{2, embedding_dim, hidden_layers, hidden_size, seq_len, n_classes, activation}.validate();
  training.validate();
}

const TrainingConfig& training_config(const ModelConfig& config) {
  return std::visit([](const auto& c) -> const TrainingConfig& { return c.training; }, config);
}

Classifier::Classifier(ModelConfig config, std::unique_ptr<Network> network)
    : config(std::move(config)), network(std::move(network)) {}

Classifier::Classifier(const Classifier& other)
    : config(other.config),
      network(other.network ? other.network->clone() : nullptr),
      class_ids(other.class_ids),
      vocab_hash(other.vocab_hash) {}

Classifier& Classifier::operator=(const Classifier& other) {
  if (this != &other) *this = Classifier(other);
  return *this;
}

void Classifier::bind(const Dataset& dataset, const Vocabulary& vocab) {
  class_ids = dataset.class_ids;
  vocab_hash = vocab.content_hash();
}

Classifier build_cnn(const CnnConfig& config, std::size_t vocab_rows, std::uint64_t seed) {
  config.validate();
  TextCnnShape shape{vocab_rows,     config.embedding_dim, config.filter_widths,
                     config.filters_per_width, config.seq_len, config.n_classes,
                     config.activation};
  auto net = std::make_unique<TextCnn>(shape, seed, config.embedding_trainable);
  net->set_num_threads(config.training.num_threads);
  return Classifier(config, std::move(net));
}

Classifier build_mlp(const MlpConfig& config, std::size_t vocab_rows, std::uint64_t seed) {
  config.validate();
  MlpShape shape{vocab_rows,     config.embedding_dim, config.hidden_layers, config.hidden_size,
                 config.seq_len, config.n_classes,     config.activation};
  return Classifier(config, std::make_unique<Mlp>(shape, seed, config.embedding_trainable));
}

std::vector<MetricsRow> MetricsCurve::split_rows(std::string_view split) const {
  std::vector<MetricsRow> out;
  for (const MetricsRow& r : rows) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

void MetricsCurve::write_csv(std::ostream& out) const {
  out << "step,epoch,split,loss,accuracy\n";
  for (const MetricsRow& r : rows) {
    out << r.step << ',' << r.epoch << ',' << r.split << ',' << six(r.loss) << ','
        << six(r.accuracy) << '\n';
  }
}

void MetricsCurve::save_csv(const std::string& path) const {
  write_file_atomically(path, [&](std::ostream& out) { write_csv(out); });
}

MetricsCurve train(Classifier& model, const Dataset& train_set, const Dataset& eval_set,
                   std::ostream* log) {
  const TrainingConfig& cfg = training_config(model.config);
  cfg.validate();
  check_compatible(model, train_set, "training set");
  if (eval_set.size() > 0) check_compatible(model, eval_set, "eval set");
  train_set.validate(static_cast<std::size_t>(model.network->parameters()[0].value.rows()));

  Network& net = *model.network;
  Optimizer optimizer(cfg.optimizer);
  Rng rng(cfg.seed);
  auto cache = net.make_cache();
  Gradients grads = net.zero_gradients();
  MetricsCurve curve;

  std::unique_ptr<Network> best;
  double best_accuracy = -1.0;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<EncodedQuery> batch;
  std::size_t step = 0;
  const bool use_dropout = cfg.keep_prob < 1.0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    std::size_t epoch_correct = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(train_set.examples[order[i]]);

      Matrix scale;
      if (use_dropout) scale = draw_dropout_scales(batch.size(), net.dropout_width(), cfg.keep_prob, rng);
      const Matrix probs = net.forward(batch, use_dropout ? &scale : nullptr, cache.get());
      const double loss = mean_cross_entropy(probs, batch);
      std::size_t correct = 0;
      for (std::size_t b = 0; b < batch.size(); ++b) {
        if (argmax_row(probs, static_cast<Eigen::Index>(b)) == batch[b].label) ++correct;
      }
      net.backward(*cache, grads);
      optimizer.step(net.parameters(), grads);

      ++step;
      curve.rows.push_back({step, epoch, "train", loss,
                            static_cast<double>(correct) / static_cast<double>(batch.size())});
      epoch_loss += loss * static_cast<double>(batch.size());
      epoch_correct += correct;
    }

    EvalResult eval;
    if (eval_set.size() > 0) {
      eval = evaluate(model, eval_set);
      curve.rows.push_back({step, epoch, "eval", eval.mean_loss, eval.accuracy});
      if (cfg.best_on_eval && eval.accuracy > best_accuracy) {
        best_accuracy = eval.accuracy;
        best = net.clone();
      }
    }
    if (log) {
      const double n = static_cast<double>(std::max<std::size_t>(1, train_set.size()));
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      char line[256];
      std::snprintf(line, sizeof(line),
                    "epoch %zu/%zu step %zu train_loss=%.6f train_acc=%.6f eval_loss=%.6f "
                    "eval_acc=%.6f (%.1fs)\n",
                    epoch, cfg.epochs, step, epoch_loss / n,
                    static_cast<double>(epoch_correct) / n, eval.mean_loss, eval.accuracy, secs);
      *log << line << std::flush;
    }
  }
  if (best) model.network = std::move(best);
  return curve;
}

EvalResult evaluate(const Classifier& model, const Dataset& dataset) {
  check_compatible(model, dataset, "dataset");
  const std::size_t C = dataset.num_classes();
  EvalResult result;
  result.confusion.assign(C, std::vector<std::size_t>(C, 0));
  result.support.assign(C, 0);
  result.count = dataset.size();
  if (dataset.size() == 0) return result;

  double loss_sum = 0.0;
  std::size_t correct = 0;
  const std::span<const EncodedQuery> all(dataset.examples);
  for (std::size_t begin = 0; begin < all.size(); begin += kEvalChunk) {
    const auto chunk = all.subspan(begin, std::min(kEvalChunk, all.size() - begin));
    const Matrix probs = model.network->forward(chunk, nullptr, nullptr);
    loss_sum += mean_cross_entropy(probs, chunk) * static_cast<double>(chunk.size());
    for (std::size_t b = 0; b < chunk.size(); ++b) {
      const auto truth = static_cast<std::size_t>(chunk[b].label);
      const auto guess = static_cast<std::size_t>(argmax_row(probs, static_cast<Eigen::Index>(b)));
      ++result.confusion[truth][guess];
      ++result.support[truth];
      if (truth == guess) ++correct;
    }
  }
  const double n = static_cast<double>(dataset.size());
  result.accuracy = static_cast<double>(correct) / n;
  result.mean_loss = loss_sum / n;
  return result;
}

void write_eval_report(std::ostream& out, const EvalResult& result,
                       const std::vector<CategoryId>& class_ids) {
  out << "accuracy " << six(result.accuracy) << '\n';
  out << "mean_loss " << six(result.mean_loss) << '\n';
  out << "examples " << result.count << '\n';
  out << "confusion (rows: true category, columns: predicted category)\n";
  out << "true\\pred";
  for (const CategoryId c : class_ids) out << '\t' << c;
  out << "\tsupport\n";
  for (std::size_t i = 0; i < result.confusion.size(); ++i) {
    out << class_ids[i];
    for (const std::size_t n : result.confusion[i]) out << '\t' << n;
    out << '\t' << result.support[i] << '\n';
  }
}

std::vector<Prediction> predict(const Classifier& model, std::string_view query_raw,
                                const Vocabulary& vocab) {
  if (!model.vocab_hash.empty() && model.vocab_hash != vocab.content_hash()) {
    throw Error(ErrorCode::kVocabHashMismatch, "model was trained with vocabulary " +
                                                   model.vocab_hash + ", got " +
                                                   vocab.content_hash());
  }
  const std::string query = normalize(query_raw);
  if (query.empty()) throw Error(ErrorCode::kEmptyQuery, "query is empty after normalization");
  const EncodedQuery encoded{encode(query, vocab, model.network->seq_len()), 0};
  const Matrix probs = model.network->forward(std::span(&encoded, 1), nullptr, nullptr);

  std::vector<Prediction> out;
  out.reserve(static_cast<std::size_t>(probs.cols()));
  for (Eigen::Index c = 0; c < probs.cols(); ++c) {
    const CategoryId id = static_cast<std::size_t>(c) < model.class_ids.size()
                              ? model.class_ids[static_cast<std::size_t>(c)]
                              : static_cast<CategoryId>(c);
    out.push_back({id, probs(0, c)});
  }
  std::sort(out.begin(), out.end(), [](const Prediction& a, const Prediction& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.category_id < b.category_id;
  });
  return out;
}

void save_model(const Classifier& model, const std::string& path) {
  Checkpoint cp;
  cp.kind = std::string(model.network->kind());
  cp.hyperparameters = config_to_json(model.config);
  cp.hyperparameters["vocab_rows"] = model.network->parameters()[0].value.rows();
  for (const Parameter& p : model.network->parameters()) {
    cp.tensors.push_back({p.name, p.value, p.trainable});
  }
  cp.vocab_hash = model.vocab_hash;
  cp.class_ids = model.class_ids;
  save_checkpoint(cp, path);
}

Classifier load_model(const std::string& path) {
  std::istringstream in(read_file(path));
  return read_model(in);
}

Classifier read_model(std::istream& in) {
  const Checkpoint cp = read_checkpoint(in);
  ModelConfig config;
  std::size_t vocab_rows = 0;
  try {
    config = config_from_json(cp.kind, cp.hyperparameters);
    vocab_rows = cp.hyperparameters.at("vocab_rows").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormatVersionMismatch, std::string("checkpoint hyperparameters: ") + e.what());
  }
  Classifier model = std::holds_alternative<CnnConfig>(config)
                         ? build_cnn(std::get<CnnConfig>(config), vocab_rows, 0)
                         : build_mlp(std::get<MlpConfig>(config), vocab_rows, 0);
  auto& params = model.network->parameters();
  if (params.size() != cp.tensors.size()) {
    throw Error(ErrorCode::kFormatVersionMismatch, "checkpoint tensor count does not match its model");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const NamedTensor& t = cp.tensors[i];
    if (t.name != params[i].name || t.value.rows() != params[i].value.rows() ||
        t.value.cols() != params[i].value.cols()) {
      throw Error(ErrorCode::kFormatVersionMismatch, "checkpoint tensor '" + t.name +
                                                         "' does not match the model layout");
    }
    params[i].value = t.value;
    params[i].trainable = t.trainable;
  }
  model.class_ids = cp.class_ids;
  model.vocab_hash = cp.vocab_hash;
  return model;
}

Classifier load_model(const std::string& path, const Vocabulary& vocab) {
  Classifier model = load_model(path);
  if (model.vocab_hash != vocab.content_hash()) {
    throw Error(ErrorCode::kVocabHashMismatch, "checkpoint " + path + " was trained with vocabulary " +
                                                   model.vocab_hash + ", got " + vocab.content_hash());
  }
  return model;
}

}  // namespace querycat
