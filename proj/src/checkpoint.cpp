// Copyright (c) 2026 The osdkit Authors
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

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "osd/checkpoint.hpp"
#include "osd/errors.hpp"

namespace osd {

namespace {

constexpr char kMagic[4] = {'O', 'S', 'D', '3'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::string& path) : file_(path, std::ios::binary) {
    if (!file_) throw DataError("cannot open checkpoint for writing: " + path);
  }
  void bytes(const void* data, size_t n) {
    file_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void i32(std::int32_t v) { bytes(&v, 4); }
  void i64(std::int64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }
  void f64s(const std::vector<double>& v) { bytes(v.data(), v.size() * 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void check(const std::string& path) {
    if (!file_) throw DataError("short write to checkpoint: " + path);
  }

 private:
  std::ofstream file_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path), file_(path, std::ios::binary) {
    if (!file_) throw DataError("cannot open checkpoint: " + path);
  }
  void bytes(void* data, size_t n) {
    file_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (file_.gcount() != static_cast<std::streamsize>(n)) {
      throw DataError("truncated checkpoint: " + path_);
    }
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, 4);
    return v;
  }
  std::int32_t i32() {
    std::int32_t v;
    bytes(&v, 4);
    return v;
  }
  std::int64_t i64() {
    std::int64_t v;
    bytes(&v, 8);
    return v;
  }
  double f64() {
    double v;
    bytes(&v, 8);
    return v;
  }
  void f64s(std::vector<double>& v) { bytes(v.data(), v.size() * 8); }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1u << 20)) throw DataError("corrupt string length in checkpoint: " + path_);
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

 private:
  std::string path_;
  std::ifstream file_;
};

void write_config(Writer& w, const ModelConfig& cfg) {
  w.i32(cfg.seq_len);
  w.i32(cfg.mel_bins);
  for (int c : cfg.conv_channels) w.i32(c);
  for (const auto& pool : cfg.pools) {
    w.i32(pool[0]);
    w.i32(pool[1]);
  }
  w.i32(cfg.gru_hidden);
  w.i32(cfg.gru_layers);
  w.i32(cfg.head_hidden);
  w.i32(cfg.num_classes);
  w.f64(cfg.dropout);
}

ModelConfig read_config(Reader& r) {
  ModelConfig cfg;
  cfg.seq_len = r.i32();
  cfg.mel_bins = r.i32();
  for (int& c : cfg.conv_channels) c = r.i32();
  for (auto& pool : cfg.pools) {
    pool[0] = r.i32();
    pool[1] = r.i32();
  }
  cfg.gru_hidden = r.i32();
  cfg.gru_layers = r.i32();
  cfg.head_hidden = r.i32();
  cfg.num_classes = r.i32();
  cfg.dropout = r.f64();
  return cfg;
}

void write_tensor(Writer& w, const std::string& name, const Tensor& t) {
  w.str(name);
  w.u32(static_cast<std::uint32_t>(t.rank()));
  for (int d : t.shape) w.i32(d);
  w.f64s(t.v);
}

}  // namespace

void save_checkpoint(const CrnnModel& model, const std::vector<AdamState>* opt_state,
                     const std::string& path) {
  Writer w(path);
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  write_config(w, model.config());

  std::uint32_t param_count = 0;
  for_each_param(model.params(), [&](const std::string&, const Tensor&) { param_count += 1; });
  w.u32(param_count);
  for_each_param(model.params(),
                 [&](const std::string& name, const Tensor& t) { write_tensor(w, name, t); });

  const auto& stats = model.bn_stats();
  w.u32(static_cast<std::uint32_t>(stats.size()));
  for (size_t i = 0; i < stats.size(); ++i) {
    w.str("bn_stats." + std::to_string(i));
    w.u32(static_cast<std::uint32_t>(stats[i].mean.size()));
    w.f64s(stats[i].mean);
    w.f64s(stats[i].var);
    w.i64(stats[i].num_updates);
  }

  const bool has_opt = (opt_state != nullptr && !opt_state->empty());
  w.u32(has_opt ? 1 : 0);
  if (has_opt) {
    if (opt_state->size() != param_count) {
      throw DataError("optimizer state count does not match parameter count");
    }
    for (const AdamState& s : *opt_state) {
      w.i64(s.step);
      w.u32(static_cast<std::uint32_t>(s.m.size()));
      w.f64s(s.m);
      w.f64s(s.v);
    }
  }
  w.check(path);
}

CrnnModel load_checkpoint(const std::string& path, std::vector<AdamState>* opt_state,
                          const ModelConfig* expected) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("not a checkpoint (bad magic bytes): " + path);
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version) + ": " + path);
  }
  const ModelConfig cfg = read_config(r);
  if (expected != nullptr && !(cfg == *expected)) {
    throw DataError("checkpoint model config does not match the requested config: " + path);
  }

  CrnnModel model(cfg);
  std::map<std::string, Tensor*> by_name;
  for_each_param(model.params(), [&](const std::string& name, Tensor& t) { by_name[name] = &t; });

  const std::uint32_t param_count = r.u32();
  if (param_count != by_name.size()) {
    throw DataError("checkpoint parameter count mismatch: " + path);
  }
  for (std::uint32_t i = 0; i < param_count; ++i) {
    const std::string name = r.str();
    auto it = by_name.find(name);
    if (it == by_name.end()) throw DataError("unknown parameter '" + name + "' in " + path);
    const std::uint32_t rank = r.u32();
    if (rank != static_cast<std::uint32_t>(it->second->rank())) {
      throw DataError("parameter rank mismatch for '" + name + "' in " + path);
    }
    for (int d = 0; d < it->second->rank(); ++d) {
      if (r.i32() != it->second->dim(d)) {
        throw DataError("parameter shape mismatch for '" + name + "' in " + path);
      }
    }
    r.f64s(it->second->v);
  }

  const std::uint32_t stats_count = r.u32();
  auto& stats = model.bn_stats();
  if (stats_count != stats.size()) throw DataError("BN statistics count mismatch: " + path);
  for (std::uint32_t i = 0; i < stats_count; ++i) {
    (void)r.str();
    const std::uint32_t c = r.u32();
    stats[i].mean.assign(c, 0.0);
    stats[i].var.assign(c, 0.0);
    r.f64s(stats[i].mean);
    r.f64s(stats[i].var);
    stats[i].num_updates = r.i64();
  }

  const std::uint32_t has_opt = r.u32();
  if (opt_state != nullptr) {
    opt_state->clear();
    if (has_opt == 1) {
      opt_state->resize(param_count);
      for (AdamState& s : *opt_state) {
        s.step = r.i64();
        const std::uint32_t n = r.u32();
        s.m.assign(n, 0.0);
        s.v.assign(n, 0.0);
        r.f64s(s.m);
        r.f64s(s.v);
      }
    }
  }
  return model;
}

}  // namespace osd
