// Copyright 2026 The ratiodqn Authors. All rights reserved.
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

#ifndef RATIODQN_CHECKPOINT_HPP_
#define RATIODQN_CHECKPOINT_HPP_

// Binary checkpoints: an 8-byte magic, a little-endian u64 header length, a
// JSON header describing every tensor, then the tensors as little-endian
// IEEE-754 doubles in row-major order.
//
//   "RDQNCKP1" | u64 header_len | header JSON | payload
//
// The header records the payload size and an FNV-1a hash of the payload;
// a file whose length or hash disagrees is rejected before anything is built.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ratiodqn/dqn.hpp"
#include "ratiodqn/errors.hpp"
#include "ratiodqn/nn.hpp"

namespace ratiodqn {

inline nlohmann::json NetworkSpecToJson(const NetworkSpec& spec) {
  nlohmann::json hidden = nlohmann::json::array();
  for (const auto& h : spec.hidden_layers) {
    hidden.push_back({{"width", h.width}, {"activation", "relu"}});
  }
  return {{"input_dim", spec.input_dim},
          {"hidden_layers", hidden},
          {"output_dim", spec.output_dim}};
}

inline NetworkSpec NetworkSpecFromJson(const nlohmann::json& j) {
  try {
    NetworkSpec spec;
    spec.input_dim = j.at("input_dim").get<int>();
    spec.output_dim = j.at("output_dim").get<int>();
    for (const auto& h : j.at("hidden_layers")) {
      if (h.value("activation", std::string("relu")) != "relu") {
        throw ConfigError("unsupported activation '" +
                          h.at("activation").get<std::string>() + "'");
      }
      spec.hidden_layers.push_back({h.at("width").get<int>()});
    }
    spec.Validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed network spec: ") + e.what());
  }
}

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'R', 'D', 'Q', 'N', 'C', 'K', 'P', '1'};

inline std::uint64_t Fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline void AppendU64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t ReadU64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return v;
}

inline void AppendDouble(std::string& out, double d) {
  AppendU64(out, std::bit_cast<std::uint64_t>(d));
}

struct TensorWriter {
  nlohmann::json index = nlohmann::json::array();
  std::string payload;

  void Add(const std::string& name, const Matrix& m) {
    index.push_back({{"name", name}, {"shape", {m.rows(), m.cols()}}});
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) AppendDouble(payload, m(r, c));
    }
  }
  void Add(const std::string& name, const Vector& v) {
    index.push_back({{"name", name}, {"shape", {v.size()}}});
    for (Eigen::Index i = 0; i < v.size(); ++i) AppendDouble(payload, v[i]);
  }
  void Add(const std::string& prefix, const ParamSet& p) {
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      Add(prefix + "/" + std::to_string(l) + "/weight", p.layers[l].weight);
      Add(prefix + "/" + std::to_string(l) + "/bias", p.layers[l].bias);
    }
  }
};

class TensorReader {
 public:
  TensorReader(const nlohmann::json& index, const std::string& payload)
      : index_(index), payload_(payload) {}

  void Read(const std::string& name, Matrix& m) {
    Expect(name, {m.rows(), m.cols()});
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = Next();
    }
  }
  void Read(const std::string& name, Vector& v) {
    Expect(name, {v.size()});
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = Next();
  }
  // `p` must already have the expected shapes.
  void Read(const std::string& prefix, ParamSet& p) {
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      Read(prefix + "/" + std::to_string(l) + "/weight", p.layers[l].weight);
      Read(prefix + "/" + std::to_string(l) + "/bias", p.layers[l].bias);
    }
  }
  void Finish() const {
    if (entry_ != index_.size() || offset_ != payload_.size()) {
      throw IntegrityError("checkpoint contains unexpected extra tensors");
    }
  }

 private:
  void Expect(const std::string& name, std::vector<Eigen::Index> shape) {
    if (entry_ >= index_.size()) throw IntegrityError("checkpoint is missing tensor " + name);
    const auto& e = index_[entry_++];
    if (e.at("name").get<std::string>() != name ||
        e.at("shape").get<std::vector<Eigen::Index>>() != shape) {
      throw IntegrityError("checkpoint tensor " + name + " has unexpected name or shape");
    }
  }
  double Next() {
    if (offset_ + 8 > payload_.size()) throw IntegrityError("checkpoint payload too short");
    const double d = std::bit_cast<double>(ReadU64(payload_.data() + offset_));
    offset_ += 8;
    return d;
  }

  const nlohmann::json& index_;
  const std::string& payload_;
  std::size_t entry_ = 0;
  std::size_t offset_ = 0;
};

inline std::string Frame(nlohmann::json header, const TensorWriter& tensors) {
  header["format"] = "ratiodqn-checkpoint";
  header["version"] = 1;
  header["byte_order"] = "little";
  header["tensors"] = tensors.index;
  header["payload_bytes"] = tensors.payload.size();
  header["payload_fnv1a"] = Fnv1a(tensors.payload);
  const std::string h = header.dump();
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  AppendU64(out, h.size());
  out += h;
  out += tensors.payload;
  return out;
}

struct Unframed {
  nlohmann::json header;
  std::string payload;
};

inline Unframed Unframe(const std::string& bytes, const std::string& kind) {
  constexpr std::size_t kPrefix = sizeof(kCheckpointMagic) + 8;
  if (bytes.size() < kPrefix ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw IntegrityError("not a ratiodqn checkpoint (bad magic or truncated prefix)");
  }
  const std::uint64_t header_len = ReadU64(bytes.data() + sizeof(kCheckpointMagic));
  if (header_len > bytes.size() - kPrefix) throw IntegrityError("checkpoint header truncated");
  Unframed u;
  try {
    u.header = nlohmann::json::parse(bytes.substr(kPrefix, header_len));
    if (u.header.at("format") != "ratiodqn-checkpoint" || u.header.at("version") != 1) {
      throw IntegrityError("unsupported checkpoint format or version");
    }
    if (u.header.at("kind") != kind) {
      throw IntegrityError("checkpoint holds a " + u.header.at("kind").get<std::string>() +
                           ", expected " + kind);
    }
    const auto payload_bytes = u.header.at("payload_bytes").get<std::uint64_t>();
    if (bytes.size() != kPrefix + header_len + payload_bytes) {
      throw IntegrityError("checkpoint length does not match its header (" +
                           std::to_string(bytes.size()) + " bytes, expected " +
                           std::to_string(kPrefix + header_len + payload_bytes) + ")");
    }
    u.payload = bytes.substr(kPrefix + header_len);
    if (Fnv1a(u.payload) != u.header.at("payload_fnv1a").get<std::uint64_t>()) {
      throw IntegrityError("checkpoint payload hash mismatch");
    }
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("checkpoint header unreadable: ") + e.what());
  }
  return u;
}

inline std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

// Writes to a sibling temporary file and renames it into place.
inline void WriteFileAtomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline std::string SerializeNetwork(const Network& net) {
  detail::TensorWriter w;
  w.Add("net", net.params);
  return detail::Frame({{"kind", "network"}, {"spec", NetworkSpecToJson(net.spec)}}, w);
}

inline Network DeserializeNetwork(const std::string& bytes) {
  const auto u = detail::Unframe(bytes, "network");
  Network net{NetworkSpecFromJson(u.header.at("spec")), {}};
  net.params = InitNetwork(net.spec, 0).params;
  detail::TensorReader r(u.header.at("tensors"), u.payload);
  r.Read("net", net.params);
  r.Finish();
  return net;
}

// Online and target networks, RMSProp statistics and the learning counters.
inline std::string SerializeAgent(const AgentState& a) {
  detail::TensorWriter w;
  w.Add("online", a.online.params);
  w.Add("target", a.target.params);
  w.Add("square_avg", a.optimizer.square_avg);
  nlohmann::json header = {
      {"kind", "agent"},
      {"spec", NetworkSpecToJson(a.online.spec)},
      {"learn_steps_done", a.learn_steps_done},
      {"target_sync_period", a.target_sync_period},
      {"discount", a.discount},
      {"loss", a.loss == LossKind::kMse ? "mse" : "huber"},
      {"rms_smoothing", a.optimizer.smoothing},
      {"rms_epsilon", a.optimizer.divisor_epsilon},
  };
  return detail::Frame(std::move(header), w);
}

inline AgentState DeserializeAgent(const std::string& bytes) {
  const auto u = detail::Unframe(bytes, "agent");
  try {
    const NetworkSpec spec = NetworkSpecFromJson(u.header.at("spec"));
    AgentOptions opts;
    opts.discount = u.header.at("discount").get<double>();
    opts.target_sync_period = u.header.at("target_sync_period").get<std::int64_t>();
    opts.loss = u.header.at("loss") == "huber" ? LossKind::kHuber : LossKind::kMse;
    opts.rms_smoothing = u.header.at("rms_smoothing").get<double>();
    opts.rms_epsilon = u.header.at("rms_epsilon").get<double>();
    AgentState a = AgentState::Create(spec, 0, opts);
    a.learn_steps_done = u.header.at("learn_steps_done").get<std::int64_t>();
    detail::TensorReader r(u.header.at("tensors"), u.payload);
    r.Read("online", a.online.params);
    r.Read("target", a.target.params);
    r.Read("square_avg", a.optimizer.square_avg);
    r.Finish();
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("checkpoint header incomplete: ") + e.what());
  } catch (const ConfigError& e) {
    throw IntegrityError(std::string("checkpoint header invalid: ") + e.what());
  }
}

inline void SaveAgent(const AgentState& agent, const std::filesystem::path& path) {
  WriteFileAtomic(path, SerializeAgent(agent));
}

inline AgentState LoadAgent(const std::filesystem::path& path) {
  return DeserializeAgent(detail::ReadFile(path));
}

inline void SaveNetwork(const Network& net, const std::filesystem::path& path) {
  WriteFileAtomic(path, SerializeNetwork(net));
}

inline Network LoadNetwork(const std::filesystem::path& path) {
  return DeserializeNetwork(detail::ReadFile(path));
}

}  // namespace ratiodqn

#endif  // RATIODQN_CHECKPOINT_HPP_
