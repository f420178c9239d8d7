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

#include "querycat/serve.hpp"

#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "querycat/error.hpp"
#include "querycat/io.hpp"

namespace querycat {
namespace {

using nlohmann::json;

HttpReply error_reply(int status, const std::string& code) {
  return {status, json{{"error", code}}.dump()};
}

std::shared_ptr<const ModelSnapshot> load_snapshot(const std::string& model_path,
                                                   const Vocabulary& vocab) {
  const std::string bytes = read_file(model_path);
  std::istringstream in(bytes);
  auto snap = std::make_shared<ModelSnapshot>();
  snap->model = read_model(in);
  if (snap->model.vocab_hash != vocab.content_hash()) {
    throw Error(ErrorCode::kVocabHashMismatch, "checkpoint " + model_path +
                                                   " was trained with vocabulary " +
                                                   snap->model.vocab_hash);
  }
  snap->vocab = vocab;
  snap->version = hex64(fnv1a64(bytes));
  return snap;
}

}  // namespace

void ServiceConfig::validate() const {
  if (top_k < 1) throw Error(ErrorCode::kInvalidArgument, "top_k must be >= 1");
  if (max_query_bytes < 1) throw Error(ErrorCode::kInvalidArgument, "max_query_bytes must be >= 1");
  if (port < 0 || port > 65535) throw Error(ErrorCode::kInvalidArgument, "port out of range");
}

PredictionService::PredictionService(ServiceConfig config) : config_(std::move(config)) {
  config_.validate();
  snapshot_ = load_snapshot(config_.model_path, load_vocabulary(config_.vocab_path));
}

PredictionService::~PredictionService() { stop(); }

int PredictionService::start() {
  if (server_) throw Error(ErrorCode::kBindFailure, "service already started");
  server_ = std::make_unique<httplib::Server>();
  const auto send = [](httplib::Response& res, const HttpReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  };
  server_->Get("/healthz", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, handle_healthz());
  });
  server_->Post("/predict", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, handle_predict(req.body));
  });
  server_->Post("/reload", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, handle_reload(req.body));
  });

  int port = config_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(config_.host);
  } else if (!server_->bind_to_port(config_.host, port)) {
    port = -1;
  }
  if (port < 0) {
    server_.reset();
    throw Error(ErrorCode::kBindFailure, "cannot bind " + config_.host + ":" +
                                             std::to_string(config_.port));
  }
  listener_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void PredictionService::wait() {
  if (listener_.joinable()) listener_.join();
}

void PredictionService::stop() {
  if (server_) server_->stop();
  if (listener_.joinable()) listener_.join();
}

std::shared_ptr<const ModelSnapshot> PredictionService::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

std::string PredictionService::reload(const std::string& model_path) {
  std::lock_guard reload_lock(reload_mutex_);
  auto next = load_snapshot(model_path, snapshot()->vocab);
  std::string version = next->version;
  {
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = std::move(next);
  }
  return version;
}

HttpReply PredictionService::handle_healthz() const {
  return {200, json{{"status", "ok"}, {"model_version", snapshot()->version}}.dump()};
}

HttpReply PredictionService::handle_predict(const std::string& body) const {
  const json request = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (request.is_discarded() || !request.is_object()) return error_reply(400, "bad_request");
  const auto query = request.find("query");
  if (query == request.end() || !query->is_string()) return error_reply(400, "bad_request");
  std::size_t top_k = config_.top_k;
  if (const auto k = request.find("top_k"); k != request.end() && !k->is_null()) {
    if (!k->is_number_integer() || k->get<std::int64_t>() < 1) return error_reply(400, "bad_request");
    top_k = k->get<std::size_t>();
  }
  const auto& text = query->get_ref<const std::string&>();
  if (text.size() > config_.max_query_bytes) return error_reply(413, "query_too_large");

  const auto snap = snapshot();
  std::vector<Prediction> ranked;
  try {
    ranked = predict(snap->model, text, snap->vocab);
  } catch (const Error& e) {
    return error_reply(e.code() == ErrorCode::kEmptyQuery ? 400 : 500, to_string(e.code()));
  }
  json predictions = json::array();
  for (std::size_t i = 0; i < ranked.size() && i < top_k; ++i) {
    predictions.push_back({{"category_id", ranked[i].category_id},
                           {"probability", ranked[i].probability}});
  }
  return {200, json{{"model_version", snap->version}, {"predictions", predictions}}.dump()};
}

HttpReply PredictionService::handle_reload(const std::string& body) {
  const json request = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (request.is_discarded() || !request.is_object()) return error_reply(400, "bad_request");
  const auto path = request.find("model_path");
  if (path == request.end() || !path->is_string()) return error_reply(400, "bad_request");
  try {
    return {200, json{{"model_version", reload(path->get<std::string>())}}.dump()};
  } catch (const Error& e) {
    return error_reply(409, to_string(e.code()));
  }
}

}  // namespace querycat
