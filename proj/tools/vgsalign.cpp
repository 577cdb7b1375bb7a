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

// Command-line front end: preprocess, train, eval, query, plot-data, synth.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "vgs/app/commands.hpp"

namespace app = vgs::app;
namespace data = vgs::data;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string preset;
  std::string config_file;
  std::vector<std::string> sets;
  std::string manifest;
  std::string cache_root;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--preset", c.preset, "named configuration (DG2A1024 ... DG4A2048, tiny)");
  cmd->add_option("--config", c.config_file, "key = value configuration file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", c.sets, "override one key, e.g. --set optim.lr=5e-4")
      ->allow_extra_args(false);
  cmd->add_option("--manifest", c.manifest, "dataset manifest or directory holding manifest.csv");
  cmd->add_option("--cache-root", c.cache_root, "MFCC cache directory");
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--threads", c.threads, "preprocessing workers");
}

// Preset, then file, then --set overrides, then dedicated flags.
app::RunConfig build_config(const Common& c) {
  app::RunConfig cfg;
  if (!c.preset.empty()) app::apply_preset(cfg, c.preset);
  if (!c.config_file.empty()) app::load_config_file(cfg, c.config_file);
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw app::ConfigError("--set expects key=value, got '" + s + "'");
    app::set_field(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (!c.manifest.empty()) cfg.manifest = c.manifest;
  if (!c.cache_root.empty()) cfg.cache_root = c.cache_root;
  if (c.seed) cfg.train.seed = *c.seed;
  if (c.threads) cfg.threads = *c.threads;
  return cfg;
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  file.open(path);
  if (!file) throw std::runtime_error("cannot write " + path);
  return file;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Speech-image alignment: training and cross-modal retrieval"};
  cli.require_subcommand(1);

  Common common;

  auto* pre = cli.add_subcommand("preprocess", "compute the MFCC cache for a manifest");
  add_common(pre, common);

  auto* tr = cli.add_subcommand("train", "train and write checkpoints plus a metric log");
  add_common(tr, common);
  app::TrainOptions train_opts;
  std::string resume;
  std::optional<std::size_t> epochs;
  std::string ckpt_dir, log_path;
  tr->add_option("--resume", resume, "checkpoint to restart from")->check(CLI::ExistingFile);
  tr->add_option("--lr-scale", train_opts.lr_scale, "peak learning rate multiplier on restart");
  tr->add_option("--epochs", epochs, "epochs to run; 0 validates and exits");
  tr->add_option("--checkpoint-dir", ckpt_dir, "output directory");
  tr->add_option("--log", log_path, "metric CSV (default: <checkpoint-dir>/metrics.csv)");

  auto* ev = cli.add_subcommand("eval", "recall@K on a split");
  add_common(ev, common);
  std::string eval_ckpt, eval_split = "test", eval_format = "table", ranks_out, eval_out;
  std::vector<std::size_t> ks;
  ev->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  ev->add_option("--split", eval_split, "train, val or test")->capture_default_str();
  ev->add_option("-k,--k", ks, "cutoffs (default 1 5 10)");
  ev->add_option("--format", eval_format, "table or csv")
      ->check(CLI::IsMember({"table", "csv"}))
      ->capture_default_str();
  ev->add_option("--out", eval_out, "write the report here instead of stdout");
  ev->add_option("--ranks", ranks_out, "also write per-query ranks as CSV");

  auto* qu = cli.add_subcommand("query", "rank a gallery against one audio or image file");
  add_common(qu, common);
  std::string q_ckpt, q_probe, q_gallery, q_modality, q_split;
  app::QueryOptions q_opts;
  qu->add_option("--checkpoint", q_ckpt, "checkpoint file")->required();
  qu->add_option("--probe", q_probe, "probe .wav, .png or .jpg")->required()->check(CLI::ExistingFile);
  qu->add_option("--gallery", q_gallery, "gallery manifest or directory")->required();
  qu->add_option("-k", q_opts.k, "results to return")->capture_default_str();
  qu->add_option("--gallery-modality", q_modality, "audio or image (default: opposite of probe)")
      ->check(CLI::IsMember({"audio", "image"}));
  qu->add_option("--split", q_split, "restrict the gallery to one split");

  auto* pd = cli.add_subcommand("plot-data", "per-epoch loss and R@10 as CSV");
  add_common(pd, common);
  std::string pd_log, pd_fill, pd_out;
  pd->add_option("--log", pd_log, "training metric log")->required();
  pd->add_option("--fill-from", pd_fill, "checkpoint directory used to compute missing R@10");
  pd->add_option("--out", pd_out, "output CSV (default stdout)");

  auto* sy = cli.add_subcommand("synth", "write the synthetic tone/shape corpus");
  std::string sy_out;
  data::SyntheticSpec spec;
  std::uint64_t sy_seed = 1;
  sy->add_option("--out", sy_out, "output directory")->required();
  sy->add_option("--classes", spec.n_classes, "number of classes")->capture_default_str();
  sy->add_option("--per-class", spec.pairs_per_class, "pairs per class")->capture_default_str();
  sy->add_option("--seed", sy_seed, "random seed")->capture_default_str();

  CLI11_PARSE(cli, argc, argv);

  try {
    if (*sy) {
      const auto pairs = data::generate_synthetic(spec, sy_out, sy_seed);
      std::cout << "wrote " << pairs.size() << " pairs to " << sy_out << '\n';
      return 0;
    }
    auto cfg = build_config(common);
    if (*pre) {
      app::cmd_preprocess(cfg, std::cout);
    } else if (*tr) {
      if (epochs) cfg.train.epochs = *epochs;
      if (!ckpt_dir.empty()) cfg.train.checkpoint_dir = ckpt_dir;
      if (!log_path.empty()) cfg.train.log_path = log_path;
      if (!resume.empty()) train_opts.resume = resume;
      app::cmd_train(cfg, train_opts, std::cout);
    } else if (*ev) {
      if (!ks.empty()) cfg.eval_ks = ks;
      const auto report = app::cmd_eval(cfg, eval_ckpt, data::parse_split(eval_split));
      std::ofstream file;
      auto& out = open_out(eval_out, file);
      if (eval_format == "csv") report.write_csv(out);
      else report.write_table(out);
      if (!ranks_out.empty()) {
        std::ofstream r(ranks_out);
        if (!r) throw std::runtime_error("cannot write " + ranks_out);
        report.write_ranks_csv(r);
      }
    } else if (*qu) {
      if (!q_modality.empty())
        q_opts.gallery = q_modality == "audio" ? app::Modality::kAudio : app::Modality::kImage;
      if (!q_split.empty()) q_opts.split = data::parse_split(q_split);
      const auto hits = app::cmd_query(cfg, q_ckpt, q_probe, q_gallery, q_opts, std::cerr);
      std::cout << "rank,pair_id,score\n";
      for (const auto& h : hits) std::cout << h.rank << ',' << h.pair_id << ',' << h.score << '\n';
    } else if (*pd) {
      std::ofstream file;
      auto& out = open_out(pd_out, file);
      app::cmd_plot_data(cfg, pd_log,
                         pd_fill.empty() ? std::nullopt : std::optional<fs::path>(pd_fill), out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
