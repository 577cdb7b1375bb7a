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

#include "vgs/app/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "vgs/dsp/wav.hpp"
#include "vgs/io/image_io.hpp"
#include "vgs/io/tensor_file.hpp"
#include "vgs/train/model.hpp"

namespace vgs::app {

namespace {

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

void require_manifest(const RunConfig& config) {
  if (config.manifest.empty()) throw ConfigError("data.manifest is not set");
}

std::vector<data::PairItem> prepare_items(const RunConfig& config, const std::vector<data::AlignedPair>& pairs) {
  const auto root = data_root(config);
  const auto cache = resolve_cache_root(config);
  data::build_mfcc_cache(pairs, config.mfcc, root, cache, config.threads);
  return data::load_items(pairs, root, cache);
}

train::AlignmentModel load_model(RunConfig& config, const fs::path& checkpoint) {
  if (!fs::is_regular_file(checkpoint)) {
    throw std::runtime_error("checkpoint not found: " + checkpoint.string());
  }
  apply_checkpoint_model(config, checkpoint);
  config.validate();
  return train::AlignmentModel(config.model);
}

}  // namespace

fs::path data_root(const RunConfig& config) {
  require_manifest(config);
  const fs::path m = fs::absolute(config.manifest);
  return fs::is_directory(m) ? m : m.parent_path();
}

fs::path resolve_cache_root(const RunConfig& config) {
  if (!config.cache_root.empty()) return config.cache_root;
  if (const char* env = std::getenv(kCacheRootEnv); env != nullptr && *env != '\0') return env;
  return data_root(config) / "mfcc_cache";
}

std::string model_fields(const RunConfig& config) {
  std::string out;
  std::istringstream dump(dump_config(config));
  std::string line;
  while (std::getline(dump, line)) {
    if (!line.starts_with("model.")) continue;
    const auto eq = line.find(" = ");
    if (!out.empty()) out += ';';
    out += line.substr(0, eq) + "=" + line.substr(eq + 3);
  }
  return out;
}

void apply_checkpoint_model(RunConfig& config, const fs::path& checkpoint) {
  const auto header = io::load_tensor_header(checkpoint);
  if (!header.has_meta("model_fields")) {
    throw ConfigError(checkpoint.string() + " does not record its model configuration");
  }
  for (const auto& kv : split_on(header.get_meta("model_fields"), ';')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed model_fields entry '" + kv + "'");
    set_field(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
}

data::CacheReport cmd_preprocess(const RunConfig& config, std::ostream& out) {
  config.validate();
  const auto pairs = data::scan_manifest(config.manifest);
  const auto cache = resolve_cache_root(config);
  const auto report =
      data::build_mfcc_cache(pairs, config.mfcc, data_root(config), cache, config.threads);
  out << "cache " << cache.string() << '\n'
      << "computed " << report.computed << '\n'
      << "skipped " << report.skipped << '\n'
      << "dropped " << report.dropped << '\n';
  for (const auto& id : report.dropped_ids)
    out << "dropped " << id << " (more than " << dsp::kMaxFrames << " frames)\n";
  return report;
}

std::vector<train::EpochStats> cmd_train(RunConfig config, const TrainOptions& options,
                                         std::ostream& out) {
  if (options.resume) apply_checkpoint_model(config, *options.resume);
  config.validate();
  if (!(options.lr_scale > 0.0)) throw ConfigError("--lr-scale must be positive");
  require_manifest(config);
  if (config.train.checkpoint_dir.empty()) throw ConfigError("out.checkpoint_dir is not set");
  if (config.train.log_path.empty()) config.train.log_path = config.train.checkpoint_dir / "metrics.csv";
  if (config.train.epochs == 0) {
    out << "configuration is valid; zero epochs requested\n";
    return {};
  }

  const auto pairs = data::scan_manifest(config.manifest);
  const auto items = prepare_items(config, pairs);
  std::vector<data::PairItem> train_items, val_items;
  for (std::size_t i = 0, j = 0; i < pairs.size() && j < items.size(); ++i) {
    if (pairs[i].pair_id != items[j].pair_id) continue;  // dropped clip
    if (pairs[i].split == data::Split::kTrain) train_items.push_back(items[j]);
    else if (pairs[i].split == data::Split::kVal) val_items.push_back(items[j]);
    ++j;
  }
  out << "train pairs " << train_items.size() << ", validation pairs " << val_items.size() << '\n';

  fs::create_directories(config.train.checkpoint_dir);
  config.train.checkpoint_meta = {{"model_fields", model_fields(config)}};
  train::AlignmentModel model(config.model);
  model.initialize(config.train.seed);
  train::Trainer trainer(model, config.train);
  if (options.resume) {
    trainer.restart_from(*options.resume, options.lr_scale);
    out << "resumed from " << options.resume->string() << " at epoch " << trainer.first_epoch()
        << " with lr scale " << options.lr_scale << '\n';
  } else if (options.lr_scale != 1.0) {
    throw ConfigError("--lr-scale applies only together with --resume");
  }
  return trainer.run(train_items, val_items, [&](const train::EpochStats& s) {
    out << "epoch " << s.epoch << " loss " << s.mean_loss << " lr " << s.lr;
    if (s.r10_s2i) out << " R@10 " << *s.r10_s2i << ' ' << *s.r10_i2s;
    out << std::endl;
  });
}

eval::RecallReport cmd_eval(RunConfig config, const fs::path& checkpoint, data::Split split) {
  auto model = load_model(config, checkpoint);
  train::load_checkpoint(checkpoint, model);
  const auto pairs = data::select_split(data::scan_manifest(config.manifest), split);
  if (pairs.empty()) throw std::runtime_error("no pairs in the " + data::to_string(split) + " split");
  const auto items = prepare_items(config, pairs);
  const auto [a, i] = train::embed_items(model, items);
  for (std::size_t k : config.eval_ks) {
    if (k > items.size()) {
      throw std::out_of_range("K=" + std::to_string(k) + " exceeds the " +
                              std::to_string(items.size()) + " evaluation pairs");
    }
  }
  return eval::evaluate_embeddings(a, i, config.eval_ks);
}

Modality modality_of(const fs::path& file) {
  std::string ext = file.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".wav") return Modality::kAudio;
  if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") return Modality::kImage;
  throw std::invalid_argument("cannot tell the modality of " + file.string() +
                              " (expected .wav, .png, .jpg)");
}

std::vector<Hit> cmd_query(RunConfig config, const fs::path& checkpoint, const fs::path& probe,
                           const fs::path& gallery_manifest, const QueryOptions& options,
                           std::ostream& warn) {
  if (options.k == 0) throw std::invalid_argument("k must be positive");
  auto model = load_model(config, checkpoint);
  train::load_checkpoint(checkpoint, model);

  const Modality probe_kind = modality_of(probe);
  const Modality gallery_kind = options.gallery.value_or(
      probe_kind == Modality::kAudio ? Modality::kImage : Modality::kAudio);

  auto audio_of = [&](const fs::path& p) {
    auto seq = dsp::mfcc(dsp::read_wav(p), config.mfcc);
    if (!dsp::within_length_limit(seq)) {
      throw std::runtime_error(p.string() + " has " + std::to_string(seq.frames) +
                               " frames, above the " + std::to_string(dsp::kMaxFrames) + " cap");
    }
    return seq;
  };

  core::Tensor<float> probe_emb;
  if (probe_kind == Modality::kAudio) {
    const std::vector<dsp::MfccSequence> one{audio_of(probe)};
    probe_emb = train::embed_audio(model, one);
  } else {
    const std::vector<model::ImageRaster> one{io::read_image(probe)};
    probe_emb = train::embed_images(model, one);
  }

  auto pairs = data::scan_manifest(gallery_manifest);
  if (options.split) pairs = data::select_split(pairs, *options.split);
  std::vector<std::string> ids;
  core::Tensor<float> gallery;
  if (gallery_kind == Modality::kAudio) {
    std::vector<dsp::MfccSequence> clips;
    for (const auto& p : pairs) {
      auto seq = dsp::mfcc(dsp::read_wav(p.audio_path), config.mfcc);
      if (!dsp::within_length_limit(seq)) {
        warn << "warning: skipping " << p.pair_id << ", above the frame cap\n";
        continue;
      }
      clips.push_back(std::move(seq));
      ids.push_back(p.pair_id);
    }
    if (clips.empty()) throw std::runtime_error("gallery is empty");
    gallery = train::embed_audio(model, clips);
  } else {
    std::vector<model::ImageRaster> images;
    for (const auto& p : pairs) {
      images.push_back(io::read_image(p.image_path));
      ids.push_back(p.pair_id);
    }
    if (images.empty()) throw std::runtime_error("gallery is empty");
    gallery = train::embed_images(model, images);
  }

  std::size_t k = options.k;
  if (k > ids.size()) {
    warn << "warning: k=" << k << " exceeds the gallery size, using " << ids.size() << '\n';
    k = ids.size();
  }
  const auto matches = eval::query<float>(probe_emb.data(), gallery, k);
  std::vector<Hit> hits;
  for (std::size_t r = 0; r < matches.size(); ++r)
    hits.push_back({r + 1, ids[matches[r].index], matches[r].score});
  return hits;
}

std::vector<MetricRow> read_metric_log(const fs::path& log) {
  std::ifstream in(log);
  if (!in) throw ConfigError("cannot open log " + log.string());
  std::vector<MetricRow> rows;
  std::string line;
  std::size_t no = 0;
  auto is_number = [](const std::string& s) {
    double d = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
    return !s.empty() && ec == std::errc() && p == s.data() + s.size();
  };
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string where = log.string() + ":" + std::to_string(no) + ": ";
    if (no == 1) {
      if (line != train::kMetricHeader) {
        throw ConfigError(where + "expected header '" + std::string(train::kMetricHeader) + "'");
      }
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_on(line, ',');
    if (f.size() != 5) throw ConfigError(where + "expected 5 fields, got " + std::to_string(f.size()));
    MetricRow row;
    const auto [p, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), row.epoch);
    if (f[0].empty() || ec != std::errc() || p != f[0].data() + f[0].size())
      throw ConfigError(where + "epoch is not an integer: '" + f[0] + "'");
    if (!is_number(f[1])) throw ConfigError(where + "loss is not a number: '" + f[1] + "'");
    if (!is_number(f[2])) throw ConfigError(where + "lr is not a number: '" + f[2] + "'");
    if (f[3].empty() != f[4].empty() || (!f[3].empty() && (!is_number(f[3]) || !is_number(f[4]))))
      throw ConfigError(where + "recall fields must both be numbers or both be empty");
    row.loss = f[1];
    row.lr = f[2];
    row.r10_s2i = f[3];
    row.r10_i2s = f[4];
    rows.push_back(std::move(row));
  }
  if (no == 0) throw ConfigError(log.string() + ":1: empty log");
  return rows;
}

void cmd_plot_data(const RunConfig& config, const fs::path& log,
                   const std::optional<fs::path>& fill_from, std::ostream& out) {
  auto rows = read_metric_log(log);
  if (fill_from) {
    std::optional<std::vector<data::PairItem>> val;
    for (auto& row : rows) {
      if (!row.r10_s2i.empty()) continue;
      const auto ckpt = train::checkpoint_name(*fill_from, row.epoch);
      RunConfig c = config;
      auto model = load_model(c, ckpt);
      train::load_checkpoint(ckpt, model);
      if (!val) {
        val = prepare_items(c, data::select_split(data::scan_manifest(c.manifest), data::Split::kVal));
        if (val->size() < 2) throw std::runtime_error("need at least two validation pairs");
      }
      const auto [a, i] = train::embed_items(model, *val);
      const auto [s2i, i2s] =
          eval::recall_at_k(eval::similarity_matrix(a, i), std::min<std::size_t>(10, val->size()));
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6g", s2i);
      row.r10_s2i = buf;
      std::snprintf(buf, sizeof buf, "%.6g", i2s);
      row.r10_i2s = buf;
    }
  }
  out << train::kMetricHeader << '\n';
  for (const auto& r : rows)
    out << r.epoch << ',' << r.loss << ',' << r.lr << ',' << r.r10_s2i << ',' << r.r10_i2s << '\n';
}

}  // namespace vgs::app
