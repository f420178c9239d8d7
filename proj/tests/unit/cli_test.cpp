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

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "querycat/cli.hpp"
#include "querycat/io.hpp"
#include "test_support.hpp"

namespace querycat {
namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

double reported_accuracy(const std::string& report) {
  const auto at = report.find("accuracy ");
  return at == std::string::npos ? -1.0 : std::stod(report.substr(at + 9));
}

TEST(Cli, GradcheckPasses) {
  const Outcome o = run_cli({"gradcheck"});
  EXPECT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("max relative error"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 1);
  const Outcome missing = run_cli({"train", "--config", "missing.toml"});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("missing.toml"), std::string::npos);
  EXPECT_EQ(std::count(missing.err.begin(), missing.err.end(), '\n'), 1);
  EXPECT_EQ(run_cli({"train", "--epochs", "many"}).code, 1);
  EXPECT_EQ(run_cli({"predict", "--model-in", "m"}).code, 1);
  EXPECT_EQ(run_cli({"gradcheck", "--activation", "sigmoid"}).code, 1);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST(Cli, DataErrors) {
  testing::TempDir dir;
  EXPECT_EQ(run_cli({"ingest", "--in", dir.file("none.jsonl"), "--out", dir.file("x.tsv")}).code, 2);
  {
    std::ofstream bad(dir.file("bad.jsonl"));
    bad << R"({"session":"s","ts":1,"query":"a","ad":"x","cat":1})" << "\n{broken\n";
  }
  const Outcome strict =
      run_cli({"ingest", "--in", dir.file("bad.jsonl"), "--out", dir.file("x.tsv"), "--strict"});
  EXPECT_EQ(strict.code, 2);
  EXPECT_NE(strict.err.find("line 2"), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(dir.file("x.tsv")));
  EXPECT_EQ(run_cli({"ingest", "--in", dir.file("bad.jsonl"), "--out", dir.file("x.tsv"),
                     "--min-clicks", "1"})
                .code,
            0);
}

TEST(Cli, PipelineEndToEnd) {
  testing::TempDir dir;
  const auto f = [&](const char* name) { return dir.file(name); };
  Outcome o = run_cli({"synth", "--out", f("log.jsonl"), "--queries-per-class", "150", "--seed", "3"});
  ASSERT_EQ(o.code, 0) << o.err;
  o = run_cli({"ingest", "--in", f("log.jsonl"), "--out", f("labeled.tsv"), "--shards", "4"});
  ASSERT_EQ(o.code, 0) << o.err;
  o = run_cli({"prepare", "--in", f("labeled.tsv"), "--dataset-out", f("ds"), "--vocab-out",
               f("vocab.tsv")});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(std::filesystem::exists(f("ds.train.tsv")));
  EXPECT_TRUE(std::filesystem::exists(f("ds.test.tsv")));

  {
    std::ofstream cfg(f("train.toml"));
    cfg << "epochs = 99\nembedding_dim = 32\n[train]\nnum_filters = 16\nlr = 0.005\n";
  }
  const std::vector<std::string> train_args{
      "train",        "--config",         f("train.toml"), "--dataset-in", f("ds"),
      "--vocab-in",   f("vocab.tsv"),     "--epochs",      "12",           "--model-out",
      f("model.qcat"), "--metrics-out",  f("metrics.csv")};
  o = run_cli(train_args);
  ASSERT_EQ(o.code, 0) << o.err;
  // Flag beats file: 12 epochs, not 99; file beats default: 32-dim embedding.
  EXPECT_NE(o.err.find("epoch 12/12"), std::string::npos);
  EXPECT_EQ(o.err.find("epoch 13/"), std::string::npos);

  const std::string model_bytes = read_file(f("model.qcat"));
  const std::string metrics = read_file(f("metrics.csv"));
  EXPECT_EQ(metrics.substr(0, metrics.find('\n')), "step,epoch,split,loss,accuracy");
  o = run_cli(train_args);
  ASSERT_EQ(o.code, 0);
  EXPECT_EQ(read_file(f("model.qcat")), model_bytes);
  EXPECT_EQ(read_file(f("metrics.csv")), metrics);

  o = run_cli({"eval", "--model-in", f("model.qcat"), "--vocab-in", f("vocab.tsv"), "--dataset-in",
               f("ds")});
  ASSERT_EQ(o.code, 0) << o.err;
  // 600 training queries; chance is 0.125.
  EXPECT_GE(reported_accuracy(o.out), 0.75) << o.out;
  EXPECT_NE(o.out.find("confusion"), std::string::npos);

  o = run_cli({"predict", "--model-in", f("model.qcat"), "--vocab-in", f("vocab.tsv"), "--query",
               "bababa", "--top-k", "2"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(std::count(o.out.begin(), o.out.end(), '\n'), 2);
  o = run_cli({"predict", "--model-in", f("model.qcat"), "--vocab-in", f("vocab.tsv"), "--query",
               "  ?  "});
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("empty_query"), std::string::npos);

  // A vocabulary the model was not trained with.
  {
    std::ofstream v(f("other.tsv"));
    v << "<pad>\t0\n<unk>\t1\nzzz\t2\n";
  }
  o = run_cli({"eval", "--model-in", f("model.qcat"), "--vocab-in", f("other.tsv"), "--dataset-in",
               f("ds")});
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("vocab_hash_mismatch"), std::string::npos);
}

TEST(Cli, ConfigRejectsUnknownKeys) {
  testing::TempDir dir;
  {
    std::ofstream cfg(dir.file("c.toml"));
    cfg << "no_such_flag = 1\n";
  }
  EXPECT_EQ(run_cli({"gradcheck", "--config", dir.file("c.toml")}).code, 1);
  {
    std::ofstream cfg(dir.file("ok.toml"));
    cfg << "[gradcheck]\nseed = 4\n[train]\nepochs = 3\n";
  }
  EXPECT_EQ(run_cli({"gradcheck", "--config", dir.file("ok.toml")}).code, 0);
}

}  // namespace
}  // namespace querycat
