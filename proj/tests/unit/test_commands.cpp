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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "vgs/app/commands.hpp"
#include "vgs/train/model.hpp"

namespace app = vgs::app;
namespace data = vgs::data;
namespace train = vgs::train;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("vgs_cmd_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// One small corpus shared by the cases below; built on first use.
const fs::path& corpus() {
  static const fs::path root = [] {
    const auto r = scratch("corpus");
    data::SyntheticSpec spec;
    spec.n_classes = 4;
    spec.pairs_per_class = 5;
    data::generate_synthetic(spec, r / "data", 11);
    return r;
  }();
  return root;
}

app::RunConfig small_config(const std::string& run) {
  app::RunConfig cfg;
  app::apply_preset(cfg, "tiny");
  app::set_field(cfg, "model.latent_dim", "16");
  app::set_field(cfg, "model.growth", "4");
  app::set_field(cfg, "model.stem_channels", "8");
  app::set_field(cfg, "model.blocks", "1,1");
  app::set_field(cfg, "optim.batch_size", "8");
  app::set_field(cfg, "optim.epochs", "2");
  cfg.manifest = corpus() / "data";
  cfg.cache_root = corpus() / "cache";
  cfg.train.checkpoint_dir = corpus() / run;
  return cfg;
}

// Trains once and returns the last checkpoint.
const fs::path& trained() {
  static const fs::path ckpt = [] {
    auto cfg = small_config("run");
    fs::remove_all(cfg.train.checkpoint_dir);
    std::ostringstream log;
    app::cmd_train(cfg, {}, log);
    return train::checkpoint_name(cfg.train.checkpoint_dir, 2);
  }();
  return ckpt;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("preprocess reports computed, then skipped") {
  auto cfg = small_config("pre");
  cfg.cache_root = scratch("pre_cache");
  std::ostringstream out;
  const auto first = app::cmd_preprocess(cfg, out);
  CHECK(first.computed == 20);
  CHECK(out.str().find("computed 20") != std::string::npos);
  const auto second = app::cmd_preprocess(cfg, out);
  CHECK(second.skipped == 20);
  CHECK(second.computed == 0);
}

TEST_CASE("cache root: config, then environment, then beside the manifest") {
  app::RunConfig cfg;
  cfg.manifest = corpus() / "data";
  ::unsetenv(app::kCacheRootEnv);
  CHECK(app::resolve_cache_root(cfg) == fs::absolute(corpus() / "data") / "mfcc_cache");
  ::setenv(app::kCacheRootEnv, "/tmp/elsewhere", 1);
  CHECK(app::resolve_cache_root(cfg) == fs::path("/tmp/elsewhere"));
  cfg.cache_root = "/tmp/explicit";
  CHECK(app::resolve_cache_root(cfg) == fs::path("/tmp/explicit"));
  ::unsetenv(app::kCacheRootEnv);
}

TEST_CASE("train validates first; zero epochs only validates") {
  auto cfg = small_config("zero");
  cfg.train.epochs = 0;
  std::ostringstream out;
  CHECK(app::cmd_train(cfg, {}, out).empty());
  CHECK_FALSE(fs::exists(cfg.train.checkpoint_dir / "epoch_0001.ckpt"));

  auto bad = small_config("bad");
  bad.train.batch_size = 1;
  CHECK_THROWS(app::cmd_train(bad, {}, out));
  bad = small_config("bad");
  bad.train.checkpoint_dir.clear();
  CHECK(error_of([&] { app::cmd_train(bad, {}, out); }).find("checkpoint_dir") != std::string::npos);
  bad = small_config("bad");
  app::TrainOptions opts;
  opts.lr_scale = 0.5;
  CHECK(error_of([&] { app::cmd_train(bad, opts, out); }).find("--resume") != std::string::npos);
}

TEST_CASE("presets set the named shape") {
  app::RunConfig cfg;
  app::apply_preset(cfg, "DG3A1024");
  CHECK(cfg.model.audio.latent_dim == 1024);
  CHECK(cfg.model.audio.gru_layers == 3);
  app::apply_preset(cfg, "DG4A2048");
  CHECK(cfg.model.image.latent_dim == 2048);
  CHECK(cfg.model.audio.gru_layers == 4);
}

TEST_CASE("training writes checkpoints and a log; resume continues the numbering") {
  const auto& ckpt = trained();
  REQUIRE(fs::exists(ckpt));
  const auto dir = ckpt.parent_path();
  const auto rows = app::read_metric_log(dir / "metrics.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].epoch == 1);
  CHECK(rows[1].epoch == 2);
  // no temporary files left behind
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    CHECK((name.ends_with(".ckpt") || name == "metrics.csv"));
  }

  // resuming adopts the checkpoint's model even from a different preset
  app::RunConfig cfg;
  app::apply_preset(cfg, "tiny");
  cfg.manifest = corpus() / "data";
  cfg.cache_root = corpus() / "cache";
  cfg.train.batch_size = 8;
  cfg.train.epochs = 1;
  cfg.train.checkpoint_dir = corpus() / "resumed";
  fs::remove_all(cfg.train.checkpoint_dir);
  app::TrainOptions opts;
  opts.resume = ckpt;
  opts.lr_scale = 0.5;
  std::ostringstream out;
  const auto stats = app::cmd_train(cfg, opts, out);
  REQUIRE(stats.size() == 1);
  CHECK(stats[0].epoch == 3);
  CHECK(fs::exists(cfg.train.checkpoint_dir / "epoch_0003.ckpt"));
  CHECK(stats[0].lr <= 0.5 * 1e-3 + 1e-15);
}

TEST_CASE("eval matches the library evaluation exactly") {
  const auto& ckpt = trained();
  auto cfg = small_config("run");
  cfg.eval_ks = {1, 2, 4};
  const auto report = app::cmd_eval(cfg, ckpt, data::Split::kTrain);

  app::apply_checkpoint_model(cfg, ckpt);
  train::AlignmentModel model(cfg.model);
  train::load_checkpoint(ckpt, model);
  const auto pairs = data::select_split(data::scan_manifest(cfg.manifest), data::Split::kTrain);
  const auto items = data::load_items(pairs, app::data_root(cfg), cfg.cache_root);
  const auto [a, i] = train::embed_items(model, items);
  const auto direct = vgs::eval::evaluate_embeddings(a, i, cfg.eval_ks);
  CHECK(report.queries == direct.queries);
  CHECK(report.r_at_k == direct.r_at_k);

  CHECK(error_of([&] { app::cmd_eval(cfg, corpus() / "missing.ckpt", data::Split::kTest); })
            .find("not found") != std::string::npos);
  cfg.eval_ks = {50};
  CHECK_THROWS_AS(app::cmd_eval(cfg, ckpt, data::Split::kTest), std::out_of_range);
}

TEST_CASE("query: self first, clamped k, cross-modal ids") {
  const auto& ckpt = trained();
  auto cfg = small_config("run");
  const auto pairs = data::scan_manifest(corpus() / "data");
  const auto& probe = pairs[7];

  app::QueryOptions same;
  same.k = 3;
  same.gallery = app::Modality::kImage;
  std::ostringstream warn;
  auto hits = app::cmd_query(cfg, ckpt, probe.image_path, corpus() / "data", same, warn);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0].pair_id == probe.pair_id);
  CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(warn.str().empty());

  same.gallery = app::Modality::kAudio;
  hits = app::cmd_query(cfg, ckpt, probe.audio_path, corpus() / "data", same, warn);
  CHECK(hits[0].pair_id == probe.pair_id);

  // audio probe over the image gallery; scores follow the similarity matrix
  app::QueryOptions cross;
  cross.k = 100;
  hits = app::cmd_query(cfg, ckpt, probe.audio_path, corpus() / "data", cross, warn);
  CHECK(hits.size() == pairs.size());
  CHECK(warn.str().find("exceeds the gallery size") != std::string::npos);
  for (std::size_t r = 1; r < hits.size(); ++r) {
    CHECK(hits[r].rank == r + 1);
    CHECK(hits[r - 1].score >= hits[r].score);
  }
  std::set<std::string> ids;
  for (const auto& h : hits) ids.insert(h.pair_id);
  CHECK(ids.size() == pairs.size());

  CHECK_THROWS(app::modality_of("clip.mp3"));
}

TEST_CASE("plot-data: schema, row count, line-numbered errors, fill") {
  const auto dir = scratch("plot");
  const auto log = dir / "log.csv";
  std::ofstream(log) << train::kMetricHeader << "\n1,0.5,0.001,,\n2,0.4,0.0009,0.5,0.25\n3,0.3,0.0005,,\n";
  std::ostringstream out;
  app::cmd_plot_data({}, log, std::nullopt, out);
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "epoch,loss,lr,r_at_10_s2i,r_at_10_i2s");
  std::size_t n = 0;
  while (std::getline(lines, line)) ++n;
  CHECK(n == 3);
  CHECK(out.str().find("2,0.4,0.0009,0.5,0.25") != std::string::npos);

  std::ofstream(log) << train::kMetricHeader << "\n1,0.5,0.001,,\n2,0.4\n";
  CHECK(error_of([&] { app::read_metric_log(log); }).find("log.csv:3") != std::string::npos);
  std::ofstream(log) << "epoch,loss\n";
  CHECK(error_of([&] { app::read_metric_log(log); }).find("log.csv:1") != std::string::npos);
  std::ofstream(log) << train::kMetricHeader << "\n1,0.5,0.001,0.5,\n";
  CHECK(error_of([&] { app::read_metric_log(log); }).find("log.csv:2") != std::string::npos);

  // fill from checkpoints: recall against the validation split
  const auto& ckpt = trained();
  auto cfg = small_config("run");
  std::ostringstream filled;
  app::cmd_plot_data(cfg, ckpt.parent_path() / "metrics.csv", ckpt.parent_path(), filled);
  const auto rows = [&] {
    std::ofstream(dir / "filled.csv") << filled.str();
    return app::read_metric_log(dir / "filled.csv");
  }();
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK_FALSE(r.r10_s2i.empty());
    CHECK_FALSE(r.r10_i2s.empty());
  }
}

TEST_CASE("model fields round trip through a checkpoint") {
  const auto& ckpt = trained();
  app::RunConfig fresh;
  app::apply_checkpoint_model(fresh, ckpt);
  const auto cfg = small_config("run");
  CHECK(app::model_fields(fresh) == app::model_fields(cfg));
  CHECK(fresh.model.describe() == cfg.model.describe());
}
