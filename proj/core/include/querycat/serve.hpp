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

#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "querycat/models.hpp"
#include "querycat/textprep.hpp"

namespace httplib {
class Server;
}

namespace querycat {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 binds an ephemeral port
  std::string model_path;
  std::string vocab_path;
  std::size_t top_k = 3;
  std::size_t max_query_bytes = 1024;

  void validate() const;
};

// Immutable once published; requests hold a reference for their lifetime.
struct ModelSnapshot {
  Classifier model;
  Vocabulary vocab;
  std::string version;
};

struct HttpReply {
  int status = 200;
  std::string body;  // JSON
};

// Serves GET /healthz, POST /predict and POST /reload over HTTP.
class PredictionService {
 public:
  // Loads model and vocabulary. Throws VocabHashMismatch,
  // FormatVersionMismatch or IoFailure.
  explicit PredictionService(ServiceConfig config);
  ~PredictionService();

  PredictionService(const PredictionService&) = delete;
  PredictionService& operator=(const PredictionService&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  // Throws BindFailure.
  int start();
  // Blocks until stop() is called from elsewhere.
  void wait();
  void stop();

  // Swaps in a new checkpoint for the same vocabulary and returns its
  // version. On failure the current snapshot stays and the error is thrown.
  std::string reload(const std::string& model_path);

  std::shared_ptr<const ModelSnapshot> snapshot() const;

  // Request handlers, independent of the socket layer.
  HttpReply handle_healthz() const;
  HttpReply handle_predict(const std::string& body) const;
  HttpReply handle_reload(const std::string& body);

 private:
  ServiceConfig config_;
  mutable std::mutex snapshot_mutex_;  // guards the pointer swap only
  std::shared_ptr<const ModelSnapshot> snapshot_;
  std::mutex reload_mutex_;
  std::unique_ptr<httplib::Server> server_;
  std::thread listener_;
};

}  // namespace querycat
