// Copyright 2026 The vgsalign Authors.
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

#include "vgs/app/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace vgs::app {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::size_t> to_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream s(v);
  std::string item;
  while (std::getline(s, item, ',')) out.push_back(to_size(key, trim(item)));
  if (out.empty()) throw ConfigError(key + ": expected a comma-separated list");
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
std::string num(T v) {
  // shortest text that parses back to the same value
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"model.latent_dim",
       {[](RunConfig& c, auto& k, auto& v) { c.model.set_latent_dim(to_size(k, v)); },
        [](const RunConfig& c) { return num(c.model.audio.latent_dim); }}},
      {"model.gru_layers",
       {[](RunConfig& c, auto& k, auto& v) { c.model.audio.gru_layers = to_size(k, v); },
        [](const RunConfig& c) { return num(c.model.audio.gru_layers); }}},
      {"model.conv_stride",
       {[](RunConfig& c, auto& k, auto& v) { c.model.audio.conv_stride = to_size(k, v); },
        [](const RunConfig& c) { return num(c.model.audio.conv_stride); }}},
      {"model.growth",
       {[](RunConfig& c, auto& k, auto& v) { c.model.image.growth = to_size(k, v); },
        [](const RunConfig& c) { return num(c.model.image.growth); }}},
      {"model.blocks",
       {[](RunConfig& c, auto& k, auto& v) { c.model.image.block_config = to_list(k, v); },
        [](const RunConfig& c) { return join(c.model.image.block_config); }}},
      {"model.stem_channels",
       {[](RunConfig& c, auto& k, auto& v) { c.model.image.stem_channels = to_size(k, v); },
        [](const RunConfig& c) { return num(c.model.image.stem_channels); }}},
      {"model.bottleneck_mult",
       {[](RunConfig& c, auto& k, auto& v) { c.model.image.bottleneck_mult = to_size(k, v); },
        [](const RunConfig& c) { return num(c.model.image.bottleneck_mult); }}},
      {"optim.lr",
       {[](RunConfig& c, auto& k, auto& v) { c.train.schedule.eta_max = to_double(k, v); },
        [](const RunConfig& c) { return num(c.train.schedule.eta_max); }}},
      {"optim.lr_min",
       {[](RunConfig& c, auto& k, auto& v) { c.train.schedule.eta_min = to_double(k, v); },
        [](const RunConfig& c) { return num(c.train.schedule.eta_min); }}},
      {"optim.schedule",
       {[](RunConfig& c, auto&, auto& v) {
          try {
            c.train.schedule.kind = train::parse_schedule_kind(v);
          } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("optim.schedule: ") + e.what());
          }
        },
        [](const RunConfig& c) { return train::to_string(c.train.schedule.kind); }}},
      {"optim.t0",
       {[](RunConfig& c, auto& k, auto& v) { c.train.schedule.t0 = to_double(k, v); },
        [](const RunConfig& c) { return num(c.train.schedule.t0); }}},
      {"optim.mult",
       {[](RunConfig& c, auto& k, auto& v) { c.train.schedule.mult = to_double(k, v); },
        [](const RunConfig& c) { return num(c.train.schedule.mult); }}},
      {"optim.margin",
       {[](RunConfig& c, auto& k, auto& v) { c.train.hinge.beta = to_double(k, v); },
        [](const RunConfig& c) { return num(c.train.hinge.beta); }}},
      {"optim.batch_size",
       {[](RunConfig& c, auto& k, auto& v) { c.train.batch_size = to_size(k, v); },
        [](const RunConfig& c) { return num(c.train.batch_size); }}},
      {"optim.epochs",
       {[](RunConfig& c, auto& k, auto& v) { c.train.epochs = to_size(k, v); },
        [](const RunConfig& c) { return num(c.train.epochs); }}},
      {"optim.seed",
       {[](RunConfig& c, auto& k, auto& v) { c.train.seed = to_size(k, v); },
        [](const RunConfig& c) { return num(c.train.seed); }}},
      {"optim.eval_each_epoch",
       {[](RunConfig& c, auto& k, auto& v) { c.train.eval_each_epoch = to_bool(k, v); },
        [](const RunConfig& c) { return std::string(c.train.eval_each_epoch ? "true" : "false"); }}},
      {"data.manifest",
       {[](RunConfig& c, auto&, auto& v) { c.manifest = v; },
        [](const RunConfig& c) { return c.manifest.string(); }}},
      {"data.cache_root",
       {[](RunConfig& c, auto&, auto& v) { c.cache_root = v; },
        [](const RunConfig& c) { return c.cache_root.string(); }}},
      {"data.threads",
       {[](RunConfig& c, auto& k, auto& v) { c.threads = to_size(k, v); },
        [](const RunConfig& c) { return num(c.threads); }}},
      {"out.checkpoint_dir",
       {[](RunConfig& c, auto&, auto& v) { c.train.checkpoint_dir = v; },
        [](const RunConfig& c) { return c.train.checkpoint_dir.string(); }}},
      {"out.log",
       {[](RunConfig& c, auto&, auto& v) { c.train.log_path = v; },
        [](const RunConfig& c) { return c.train.log_path.string(); }}},
      {"eval.ks",
       {[](RunConfig& c, auto& k, auto& v) { c.eval_ks = to_list(k, v); },
        [](const RunConfig& c) { return join(c.eval_ks); }}},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  try {
    model.validate();
    train.validate();
    mfcc.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (model.audio.input_dim != mfcc.n_mfcc) {
    throw ConfigError("audio input size must equal the MFCC coefficient count");
  }
  if (threads == 0) throw ConfigError("data.threads must be at least 1");
  for (std::size_t k : eval_ks)
    if (k == 0) throw ConfigError("eval.ks entries must be positive");
}

std::vector<std::string> preset_names() {
  return {"DG2A1024", "DG3A1024", "DG4A1024", "DG2A2048", "DG4A2048", "tiny"};
}

void apply_preset(RunConfig& c, const std::string& name) {
  if (name == "tiny") {
    c.model.set_latent_dim(64);
    c.model.audio.gru_layers = 1;
    c.model.image.growth = 8;
    c.model.image.stem_channels = 16;
    c.model.image.block_config = {2, 2, 4, 3};
    c.train.batch_size = 32;
    c.train.epochs = 30;
    c.train.schedule.kind = train::ScheduleKind::kCalr;
    c.train.schedule.eta_max = 1e-3;
    return;
  }
  // GRU layers and latent size per named configuration
  static const std::map<std::string, std::pair<std::size_t, std::size_t>> named = {
      {"DG2A1024", {2, 1024}}, {"DG3A1024", {3, 1024}}, {"DG4A1024", {4, 1024}},
      {"DG2A2048", {2, 2048}}, {"DG4A2048", {4, 2048}}};
  if (const auto it = named.find(name); it != named.end()) {
    c.model = train::ModelConfig{};
    c.model.audio.gru_layers = it->second.first;
    c.model.set_latent_dim(it->second.second);
    c.train.batch_size = 64;
    return;
  }
  std::string known;
  for (const auto& n : preset_names()) known += " " + n;
  throw ConfigError("unknown preset '" + name + "' (known:" + known + ")");
}

void set_field(RunConfig& config, const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(config, key, trim(value));
}

void load_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = path.string() + ":" + std::to_string(no) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    try {
      set_field(config, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

std::string dump_config(const RunConfig& config) {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + " = " + f.get(config) + "\n";
  return out;
}

}  // namespace vgs::app
