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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <sstream>

#include "vgs/app/commands.hpp"
#include "vgs/dsp/mfcc.hpp"
#include "vgs/dsp/wav.hpp"
#include "vgs/eval/retrieval.hpp"
#include "vgs/io/image_io.hpp"
#include "vgs/model/alignment.hpp"
#include "vgs/train/model.hpp"
#include "vgs/train/schedule.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace vgs;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using F32 = py::array_t<float, py::array::c_style | py::array::forcecast>;

template <typename T>
core::Tensor<T> matrix_from(const py::array_t<T, py::array::c_style | py::array::forcecast>& a,
                            const char* what) {
  if (a.ndim() != 2) throw py::value_error(std::string(what) + " must be two-dimensional");
  const auto r = static_cast<std::size_t>(a.shape(0)), c = static_cast<std::size_t>(a.shape(1));
  return core::Tensor<T>({r, c}, std::vector<T>(a.data(), a.data() + r * c));
}

template <typename T>
py::array_t<T> to_numpy(const core::Tensor<T>& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<T> out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

py::array_t<float> mfcc_array(const dsp::MfccSequence& s) {
  py::array_t<float> out({static_cast<py::ssize_t>(s.frames), static_cast<py::ssize_t>(s.coeffs)});
  std::copy(s.data.begin(), s.data.end(), out.mutable_data());
  return out;
}

dsp::MfccSequence mfcc_from(const F32& a) {
  if (a.ndim() != 2) throw py::value_error("MFCCs must be [frames, coefficients]");
  dsp::MfccSequence s;
  s.frames = static_cast<std::size_t>(a.shape(0));
  s.coeffs = static_cast<std::size_t>(a.shape(1));
  s.data.assign(a.data(), a.data() + s.frames * s.coeffs);
  return s;
}

// A trained model restored from a checkpoint, for embedding and querying.
class Model {
 public:
  explicit Model(const fs::path& checkpoint) {
    app::apply_checkpoint_model(config_, checkpoint);
    model_ = std::make_unique<train::AlignmentModel>(config_.model);
    const auto f = train::load_checkpoint(checkpoint, *model_);
    epoch_ = f.epoch;
  }

  py::array_t<float> embed_audio(const py::list& inputs) const {
    std::vector<dsp::MfccSequence> clips;
    for (const auto& item : inputs) {
      if (py::isinstance<py::array>(item)) {
        clips.push_back(mfcc_from(item.cast<F32>()));
      } else {
        clips.push_back(dsp::mfcc(dsp::read_wav(item.cast<fs::path>()), config_.mfcc));
      }
      if (!dsp::within_length_limit(clips.back()))
        throw py::value_error("clip exceeds the 8192-frame cap");
    }
    core::Tensor<float> e;
    {
      py::gil_scoped_release release;
      e = train::embed_audio(*model_, clips);
    }
    return to_numpy(e);
  }

  py::array_t<float> embed_images(const std::vector<fs::path>& paths) const {
    std::vector<model::ImageRaster> images;
    for (const auto& p : paths) images.push_back(io::read_image(p));
    core::Tensor<float> e;
    {
      py::gil_scoped_release release;
      e = train::embed_images(*model_, images);
    }
    return to_numpy(e);
  }

  std::int64_t epoch() const { return epoch_; }
  std::size_t latent_dim() const { return config_.model.audio.latent_dim; }
  std::string describe() const { return config_.model.describe(); }

 private:
  app::RunConfig config_;
  std::unique_ptr<train::AlignmentModel> model_;
  std::int64_t epoch_ = 0;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Speech-image alignment engine";

  m.def("audio_param_count", [](std::size_t latent_dim, std::size_t gru_layers) {
    model::AudioEmbedderConfig c;
    c.latent_dim = latent_dim;
    c.gru_layers = gru_layers;
    return model::audio_param_count(c);
  }, py::arg("latent_dim"), py::arg("gru_layers"));
  m.def("image_param_count", [](std::size_t latent_dim) {
    model::ImageEmbedderConfig c;
    c.latent_dim = latent_dim;
    return model::image_param_count(c);
  }, py::arg("latent_dim"));

  m.attr("MAX_FRAMES") = dsp::kMaxFrames;
  m.def("frame_count", [](std::size_t length) { return dsp::frame_count(length, {}); },
        py::arg("length"));
  m.def("mfcc", [](const F64& samples, int sample_rate) {
    if (samples.ndim() != 1) throw py::value_error("samples must be one-dimensional");
    dsp::RawAudio a{std::vector<double>(samples.data(), samples.data() + samples.size()), sample_rate};
    return mfcc_array(dsp::mfcc(a));
  }, py::arg("samples"), py::arg("sample_rate") = dsp::kSampleRate,
        "MFCCs of mono audio in [-1, 1], [frames, 40].");
  m.def("read_wav_mfcc", [](const fs::path& path) { return mfcc_array(dsp::mfcc(dsp::read_wav(path))); },
        py::arg("path"));

  m.def("hinge_loss", [](const F64& audio, const F64& images, double beta) {
    const core::Var<double> a(matrix_from(audio, "audio")), i(matrix_from(images, "images"));
    return model::hinge_loss(a, i, model::HingeConfig{beta}).item();
  }, py::arg("audio"), py::arg("images"), py::arg("beta") = 0.2);
  m.def("similarity_matrix", [](const F64& audio, const F64& images) {
    return to_numpy(eval::similarity_matrix(matrix_from(audio, "audio"), matrix_from(images, "images")));
  }, py::arg("audio"), py::arg("images"));
  m.def("recall_at_k", [](const F64& sim, std::size_t k) {
    return eval::recall_at_k(matrix_from(sim, "similarity"), k);
  }, py::arg("similarity"), py::arg("k"), "(speech->image, image->speech) recall.");

  m.def("lr_at", [](const std::string& kind, double progress, double eta_max, double eta_min,
                    double t0, double mult, double total_epochs) {
    train::ScheduleConfig c;
    c.kind = train::parse_schedule_kind(kind);
    c.eta_max = eta_max;
    c.eta_min = eta_min;
    c.t0 = t0;
    c.mult = mult;
    c.total_epochs = total_epochs;
    c.validate();
    return train::lr_at(c, progress);
  }, py::arg("kind"), py::arg("progress"), py::arg("eta_max") = 2e-4, py::arg("eta_min") = 0.0,
        py::arg("t0") = 1.0, py::arg("mult") = 2.0, py::arg("total_epochs") = 1.0);
  m.def("restart_points", [](double horizon, double t0, double mult) {
    train::ScheduleConfig c;
    c.t0 = t0;
    c.mult = mult;
    return train::restart_points(c, horizon);
  }, py::arg("horizon"), py::arg("t0") = 1.0, py::arg("mult") = 2.0);

  m.def("generate_synthetic", [](const fs::path& out, std::size_t classes, std::size_t per_class,
                                 std::uint64_t seed) {
    data::SyntheticSpec spec;
    spec.n_classes = classes;
    spec.pairs_per_class = per_class;
    return data::generate_synthetic(spec, out, seed).size();
  }, py::arg("out_dir"), py::arg("classes") = 16, py::arg("per_class") = 25, py::arg("seed") = 1,
        "Writes the tone/shape corpus and returns the number of pairs.");
  m.def("preprocess", [](const fs::path& manifest, const fs::path& cache_root) {
    app::RunConfig c;
    c.manifest = manifest;
    c.cache_root = cache_root;
    std::ostringstream sink;
    const auto r = app::cmd_preprocess(c, sink);
    py::dict d;
    d["computed"] = r.computed;
    d["skipped"] = r.skipped;
    d["dropped"] = r.dropped;
    d["dropped_ids"] = r.dropped_ids;
    return d;
  }, py::arg("manifest"), py::arg("cache_root") = fs::path{});
  m.def("train", [](const fs::path& manifest, const fs::path& checkpoint_dir,
                    const std::string& preset, const std::map<std::string, std::string>& overrides,
                    const fs::path& cache_root) {
    app::RunConfig c;
    app::apply_preset(c, preset);
    for (const auto& [k, v] : overrides) app::set_field(c, k, v);
    c.manifest = manifest;
    c.cache_root = cache_root;
    c.train.checkpoint_dir = checkpoint_dir;
    std::ostringstream sink;
    std::vector<double> losses;
    {
      py::gil_scoped_release release;
      for (const auto& e : app::cmd_train(c, {}, sink)) losses.push_back(e.mean_loss);
    }
    return losses;
  }, py::arg("manifest"), py::arg("checkpoint_dir"), py::arg("preset") = "tiny",
        py::arg("overrides") = std::map<std::string, std::string>{},
        py::arg("cache_root") = fs::path{}, "Trains and returns the mean loss of every epoch.");
  m.def("presets", &app::preset_names);

  py::class_<Model>(m, "Model")
      .def(py::init<const fs::path&>(), py::arg("checkpoint"))
      .def("embed_audio", &Model::embed_audio, py::arg("clips"),
           "Rows for .wav paths or [frames, 40] MFCC arrays.")
      .def("embed_images", &Model::embed_images, py::arg("paths"))
      .def_property_readonly("epoch", &Model::epoch)
      .def_property_readonly("latent_dim", &Model::latent_dim)
      .def("__repr__", [](const Model& m) { return "<Model " + m.describe() + ">"; });

  py::register_exception<app::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<data::DatasetError>(m, "DatasetError", PyExc_RuntimeError);
}
