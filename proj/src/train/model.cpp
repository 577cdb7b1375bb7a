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

#include "vgs/train/model.hpp"

#include <sstream>

namespace vgs::train {

void ModelConfig::set_latent_dim(std::size_t n) {
  audio.latent_dim = n;
  image.latent_dim = n;
}

void ModelConfig::validate() const {
  audio.validate();
  image.validate();
  if (audio.latent_dim != image.latent_dim) {
    throw std::invalid_argument("audio and image embeddings must share one latent size");
  }
}

std::string ModelConfig::describe() const {
  std::ostringstream s;
  s << "audio N=" << audio.latent_dim << " G=" << audio.gru_layers << " in=" << audio.input_dim
    << " conv=" << audio.conv_kernels << "x" << audio.conv_len << "/" << audio.conv_stride
    << " attn=" << audio.attention_inner << "; image growth=" << image.growth << " blocks=";
  for (std::size_t i = 0; i < image.block_config.size(); ++i)
    s << (i ? "," : "") << image.block_config[i];
  s << " bottleneck=" << image.bottleneck_mult << " stem=" << image.stem_channels
    << " N=" << image.latent_dim << " size=" << image.input_size;
  return s.str();
}

AlignmentModel::AlignmentModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  audio_ = std::make_unique<model::AudioEmbedder<float>>(config_.audio, store_);
  image_ = std::make_unique<model::ImageEmbedder<float>>(config_.image, store_);
}

void AlignmentModel::initialize(std::uint64_t seed) {
  core::Rng rng(seed);
  audio_->initialize(rng);
  image_->initialize(rng);
  for (auto& b : store_.buffers()) {
    const bool var = b.name.ends_with(".running_var");
    b.tensor->fill(var ? 1.0f : 0.0f);
  }
}

std::pair<core::Var<float>, core::Var<float>> AlignmentModel::embed(
    const data::Batch& batch, core::BatchNormMode mode) const {
  auto a = audio_->forward(core::Var<float>(batch.mfcc), batch.lengths);
  auto i = image_->forward(core::Var<float>(batch.images), mode);
  return {a, i};
}

std::pair<core::Tensor<float>, core::Tensor<float>> embed_items(
    const AlignmentModel& model, std::span<const data::PairItem> items, std::size_t batch_size) {
  if (items.empty()) throw std::invalid_argument("embed_items: no items");
  const std::size_t n = model.config().audio.latent_dim;
  core::Tensor<float> audio({items.size(), n}), images({items.size(), n});
  core::NoGradGuard no_grad;
  core::Rng unused(0);
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < items.size(); start += batch_size) {
    idx.clear();
    for (std::size_t i = start; i < std::min(items.size(), start + batch_size); ++i) idx.push_back(i);
    const auto batch = data::load_batch(items, idx, data::BatchMode::kEval, unused,
                                        model.config().image.input_size);
    const auto [a, im] = model.embed(batch, core::BatchNormMode::kEval);
    std::copy(a.value().data().begin(), a.value().data().end(), audio.ptr() + start * n);
    std::copy(im.value().data().begin(), im.value().data().end(), images.ptr() + start * n);
  }
  return {std::move(audio), std::move(images)};
}

core::Tensor<float> embed_audio(const AlignmentModel& model,
                                std::span<const dsp::MfccSequence> clips, std::size_t batch_size) {
  if (clips.empty()) throw std::invalid_argument("embed_audio: no clips");
  const std::size_t n = model.config().audio.latent_dim;
  const std::size_t c = model.config().audio.input_dim;
  core::Tensor<float> out({clips.size(), n});
  core::NoGradGuard no_grad;
  for (std::size_t start = 0; start < clips.size(); start += batch_size) {
    const std::size_t stop = std::min(clips.size(), start + batch_size);
    std::size_t longest = 0;
    for (std::size_t i = start; i < stop; ++i) {
      if (clips[i].coeffs != c) {
        throw core::ShapeError("clip has " + std::to_string(clips[i].coeffs) +
                               " coefficients, model expects " + std::to_string(c));
      }
      longest = std::max(longest, clips[i].frames);
    }
    core::Tensor<float> x({stop - start, longest, c});
    std::vector<std::size_t> lengths;
    for (std::size_t i = start; i < stop; ++i) {
      std::copy(clips[i].data.begin(), clips[i].data.end(), x.ptr() + (i - start) * longest * c);
      lengths.push_back(clips[i].frames);
    }
    const auto e = model.audio().forward(core::Var<float>(std::move(x)), lengths);
    std::copy(e.value().data().begin(), e.value().data().end(), out.ptr() + start * n);
  }
  return out;
}

core::Tensor<float> embed_images(const AlignmentModel& model,
                                 std::span<const model::ImageRaster> images,
                                 std::size_t batch_size) {
  if (images.empty()) throw std::invalid_argument("embed_images: no images");
  const std::size_t n = model.config().image.latent_dim;
  const std::size_t side = model.config().image.input_size;
  core::Tensor<float> out({images.size(), n});
  core::NoGradGuard no_grad;
  std::vector<model::ImageRaster> crops;
  for (std::size_t start = 0; start < images.size(); start += batch_size) {
    crops.clear();
    for (std::size_t i = start; i < std::min(images.size(), start + batch_size); ++i)
      crops.push_back(model::preprocess_eval(images[i], side));
    const auto e = model.image().forward(core::Var<float>(model::stack_images<float>(crops)),
                                         core::BatchNormMode::kEval);
    std::copy(e.value().data().begin(), e.value().data().end(), out.ptr() + start * n);
  }
  return out;
}

io::TensorFile checkpoint_contents(AlignmentModel& model, const Adam<float>* adam,
                                   std::int64_t epoch) {
  io::TensorFile f;
  f.fingerprint = model.fingerprint();
  f.epoch = epoch;
  f.set_meta("model", model.config().describe());
  auto& store = model.store();
  for (const auto& e : store.params()) f.add_tensor("param/" + e.name, e.var.value());
  for (const auto& b : store.buffers()) f.add_tensor("buffer/" + b.name, *b.tensor);
  if (adam) {
    const auto& a = *adam;
    f.set_meta("adam_steps", std::to_string(a.step_count()));
    const auto& params = store.params();
    for (std::size_t p = 0; p < params.size(); ++p) {
      f.add_tensor("adam_m/" + params[p].name, a.first_moments()[p]);
      f.add_tensor("adam_v/" + params[p].name, a.second_moments()[p]);
    }
  }
  return f;
}

void save_checkpoint(const std::filesystem::path& path, AlignmentModel& model,
                     const Adam<float>* adam, std::int64_t epoch,
                     const std::vector<std::pair<std::string, std::string>>& meta) {
  auto f = checkpoint_contents(model, adam, epoch);
  for (const auto& [k, v] : meta) f.set_meta(k, v);
  io::save_tensor_file(path, f);
}

io::TensorFile load_checkpoint(const std::filesystem::path& path, AlignmentModel& model,
                               Adam<float>* adam) {
  auto f = io::load_tensor_file(path);
  if (f.fingerprint != model.fingerprint()) {
    throw io::TensorFileError(path.string() + ": checkpoint was written for a different model (" +
                              (f.has_meta("model") ? f.get_meta("model") : f.fingerprint) + ")");
  }
  auto copy_into = [&](const std::string& name, core::Tensor<float>& dst) {
    const auto& src = f.tensor(name);
    if (src.shape() != dst.shape()) {
      throw io::TensorFileError(path.string() + ": shape mismatch for " + name);
    }
    std::copy(src.data().begin(), src.data().end(), dst.ptr());
  };
  auto& store = model.store();
  for (const auto& e : store.params()) {
    core::Var<float> v = e.var;
    copy_into("param/" + e.name, v.mutable_value());
  }
  for (const auto& b : store.buffers()) copy_into("buffer/" + b.name, *b.tensor);
  if (adam) {
    adam->reset();
    if (f.has_meta("adam_steps")) {
      const auto& params = store.params();
      for (std::size_t p = 0; p < params.size(); ++p) {
        copy_into("adam_m/" + params[p].name, adam->first_moments()[p]);
        copy_into("adam_v/" + params[p].name, adam->second_moments()[p]);
      }
      adam->set_step_count(std::stoull(f.get_meta("adam_steps")));
    }
  }
  return f;
}

}  // namespace vgs::train
