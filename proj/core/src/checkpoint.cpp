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

#include "querycat/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "querycat/error.hpp"
#include "querycat/io.hpp"

namespace querycat {
namespace {

using nlohmann::json;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

bool get_u32(std::istream& in, std::uint32_t& v) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) return false;
  v = static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
      (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
  return true;
}

[[noreturn]] void bad_format(const std::string& what) {
  throw Error(ErrorCode::kFormatVersionMismatch, what);
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
  json manifest = json::array();
  for (const NamedTensor& t : checkpoint.tensors) {
    manifest.push_back({{"name", t.name},
                        {"shape", {t.value.rows(), t.value.cols()}},
                        {"trainable", t.trainable}});
  }
  const json header = {{"kind", checkpoint.kind},
                       {"hyperparameters", checkpoint.hyperparameters},
                       {"tensors", manifest},
                       {"vocab_hash", checkpoint.vocab_hash},
                       {"class_ids", checkpoint.class_ids}};
  const std::string text = header.dump();

  out.write(kCheckpointMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  std::string payload;
  for (const NamedTensor& t : checkpoint.tensors) {
    payload.resize(static_cast<std::size_t>(t.value.size()) * 4);
    for (Eigen::Index i = 0; i < t.value.size(); ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(t.value.data()[i]));
      for (int byte = 0; byte < 4; ++byte) {
        payload[static_cast<std::size_t>(i) * 4 + static_cast<std::size_t>(byte)] =
            static_cast<char>((bits >> (8 * byte)) & 0xff);
      }
    }
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  }
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    bad_format("not a QCAT checkpoint");
  }
  std::uint32_t version = 0;
  std::uint32_t header_len = 0;
  if (!get_u32(in, version)) bad_format("missing format version");
  if (version != kCheckpointVersion) {
    bad_format("checkpoint format version " + std::to_string(version) + ", expected " +
               std::to_string(kCheckpointVersion));
  }
  if (!get_u32(in, header_len)) bad_format("missing header length");
  std::string text(header_len, '\0');
  if (!in.read(text.data(), header_len)) bad_format("truncated checkpoint header");

  Checkpoint cp;
  try {
    const json header = json::parse(text);
    cp.kind = header.at("kind").get<std::string>();
    cp.hyperparameters = header.at("hyperparameters");
    cp.vocab_hash = header.at("vocab_hash").get<std::string>();
    cp.class_ids = header.at("class_ids").get<std::vector<CategoryId>>();
    for (const json& t : header.at("tensors")) {
      NamedTensor tensor;
      tensor.name = t.at("name").get<std::string>();
      tensor.trainable = t.value("trainable", true);
      const auto shape = t.at("shape").get<std::vector<std::int64_t>>();
      if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0) bad_format("bad tensor shape");
      tensor.value.resize(shape[0], shape[1]);
      cp.tensors.push_back(std::move(tensor));
    }
  } catch (const json::exception& e) {
    bad_format(std::string("checkpoint header: ") + e.what());
  }

  std::string payload;
  for (NamedTensor& t : cp.tensors) {
    payload.resize(static_cast<std::size_t>(t.value.size()) * 4);
    if (!in.read(payload.data(), static_cast<std::streamsize>(payload.size()))) {
      throw Error(ErrorCode::kIoFailure, "checkpoint payload truncated in '" + t.name + "'");
    }
    for (Eigen::Index i = 0; i < t.value.size(); ++i) {
      std::uint32_t bits = 0;
      for (int byte = 0; byte < 4; ++byte) {
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(
                    payload[static_cast<std::size_t>(i) * 4 + static_cast<std::size_t>(byte)]))
                << (8 * byte);
      }
      t.value.data()[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) bad_format("trailing bytes after checkpoint payload");
  return cp;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  write_file_atomically(path, [&](std::ostream& out) { write_checkpoint(out, checkpoint); });
}

Checkpoint load_checkpoint(const std::string& path) {
  std::istringstream in(read_file(path));
  return read_checkpoint(in);
}

std::string checkpoint_version(const std::string& path) { return hex64(fnv1a64(read_file(path))); }

}  // namespace querycat
