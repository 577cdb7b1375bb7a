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

#include "vgs/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "vgs/eval/retrieval.hpp"

namespace vgs::train {

void TrainConfig::validate() const {
  if (batch_size < 2 || batch_size > 64) throw std::invalid_argument("batch size must be in [2, 64]");
  schedule.validate();
  hinge.validate();
}

std::filesystem::path checkpoint_name(const std::filesystem::path& dir, std::int64_t epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%04lld.ckpt", static_cast<long long>(epoch));
  return dir / buf;
}

Trainer::Trainer(AlignmentModel& model, TrainConfig config)
    : model_(model), config_(std::move(config)), adam_(model.store()), rng_(config_.seed) {
  config_.validate();
}

void Trainer::restart_from(const std::filesystem::path& checkpoint, double lr_scale) {
  if (!(lr_scale > 0.0)) throw std::invalid_argument("lr scale must be positive");
  const auto f = load_checkpoint(checkpoint, model_, nullptr);
  adam_.reset();
  config_.schedule.eta_max *= lr_scale;
  config_.schedule.validate();
  first_epoch_ = f.epoch + 1;
  if (f.has_meta("rng")) rng_ = core::rng_from_string(f.get_meta("rng"));
}

std::vector<EpochStats> Trainer::run(std::span<const data::PairItem> train,
                                     std::span<const data::PairItem> val,
                                     const std::function<void(const EpochStats&)>& on_epoch) {
  std::vector<EpochStats> history;
  if (config_.epochs == 0) return history;
  if (train.size() < 2) throw std::invalid_argument("training needs at least two pairs");
  ScheduleConfig sched = config_.schedule;
  if (sched.kind == ScheduleKind::kCalr) sched.total_epochs = static_cast<double>(config_.epochs);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // a trailing single item cannot form a contrastive batch
  std::size_t batches = (order.size() + config_.batch_size - 1) / config_.batch_size;
  if (order.size() % config_.batch_size == 1) --batches;

  for (std::size_t e = 0; e < config_.epochs; ++e) {
    EpochStats stats;
    stats.epoch = first_epoch_ + static_cast<std::int64_t>(e);
    std::shuffle(order.begin(), order.end(), rng_);
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t start = b * config_.batch_size;
      const std::size_t stop = std::min(order.size(), start + config_.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      const auto batch = data::load_batch(train, idx, data::BatchMode::kTrain, rng_,
                                          model_.config().image.input_size);
      const auto [a, i] = model_.embed(batch, core::BatchNormMode::kTrain);
      const auto loss = model::hinge_loss(a, i, config_.hinge);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "non-finite loss (" << value << ") at epoch " << stats.epoch << ", batch " << b + 1
            << " of " << batches << "; pairs:";
        for (std::size_t k : idx) msg << ' ' << train[k].pair_id;
        throw TrainingDiverged(msg.str());
      }
      model_.store().zero_grad();
      core::backward(loss);
      stats.lr = lr_at(sched, static_cast<double>(e) +
                                  static_cast<double>(b) / static_cast<double>(batches));
      adam_.step(stats.lr);
      stats.batch_losses.push_back(value);
    }
    stats.mean_loss = std::accumulate(stats.batch_losses.begin(), stats.batch_losses.end(), 0.0) /
                      static_cast<double>(stats.batch_losses.size());
    if (config_.eval_each_epoch && val.size() >= 2) {
      const auto [va, vi] = embed_items(model_, val);
      const auto [s2i, i2s] =
          eval::recall_at_k(eval::similarity_matrix(va, vi), std::min<std::size_t>(10, val.size()));
      stats.r10_s2i = s2i;
      stats.r10_i2s = i2s;
    }
    if (!config_.checkpoint_dir.empty()) {
      auto meta = config_.checkpoint_meta;
      meta.emplace_back("rng", core::rng_to_string(rng_));
      save_checkpoint(checkpoint_name(config_.checkpoint_dir, stats.epoch), model_, &adam_,
                      stats.epoch, meta);
    }
    if (!config_.log_path.empty()) append_metric_row(config_.log_path, stats);
    if (on_epoch) on_epoch(stats);
    history.push_back(std::move(stats));
  }
  first_epoch_ += static_cast<std::int64_t>(config_.epochs);
  return history;
}

void append_metric_row(const std::filesystem::path& log, const EpochStats& stats) {
  const bool fresh = !std::filesystem::exists(log) || std::filesystem::file_size(log) == 0;
  if (log.has_parent_path()) std::filesystem::create_directories(log.parent_path());
  std::ofstream out(log, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + log.string());
  if (fresh) out << kMetricHeader << '\n';
  char buf[64];
  out << stats.epoch << ',';
  std::snprintf(buf, sizeof buf, "%.9g,%.9g,", stats.mean_loss, stats.lr);
  out << buf;
  if (stats.r10_s2i) {
    std::snprintf(buf, sizeof buf, "%.6g,%.6g", *stats.r10_s2i, *stats.r10_i2s);
    out << buf;
  } else {
    out << ',';
  }
  out << '\n';
}

}  // namespace vgs::train
