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

#include "vgs/io/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unistd.h>

namespace vgs::io {

namespace {

constexpr const char* kMagic = "VGSCKPT 1";

void check_token(const std::string& s, const char* what) {
  if (s.empty() || s.find_first_of(" \t\r\n") != std::string::npos) {
    throw TensorFileError(std::string(what) + " '" + s + "' must be a non-empty word");
  }
}

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

struct Entry {
  std::string name;
  core::Shape shape;
  std::uint64_t offset = 0;
};

TensorFile parse_header(std::istream& in, const std::filesystem::path& path,
                        std::vector<Entry>& entries) {
  auto fail = [&](const std::string& why) {
    return TensorFileError(path.string() + ": " + why);
  };
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw fail("not a tensor file (bad magic)");
  TensorFile f;
  bool ended = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "end") {
      ended = true;
      break;
    } else if (tag == "fingerprint") {
      ls >> f.fingerprint;
    } else if (tag == "epoch") {
      if (!(ls >> f.epoch)) throw fail("bad epoch line");
    } else if (tag == "meta") {
      std::string key, value;
      ls >> key;
      std::getline(ls >> std::ws, value);
      f.meta.emplace_back(key, value);
    } else if (tag == "tensor") {
      Entry e;
      std::string dtype;
      std::size_t ndim = 0;
      if (!(ls >> e.name >> dtype >> ndim) || dtype != "f32") throw fail("bad tensor line: " + line);
      e.shape.resize(ndim);
      for (auto& d : e.shape)
        if (!(ls >> d)) throw fail("bad tensor shape: " + line);
      if (!(ls >> e.offset)) throw fail("bad tensor offset: " + line);
      entries.push_back(std::move(e));
    } else {
      throw fail("unknown header line: " + line);
    }
  }
  if (!ended) throw fail("truncated header");
  return f;
}

}  // namespace

void TensorFile::set_meta(const std::string& key, const std::string& value) {
  check_token(key, "meta key");
  if (value.find('\n') != std::string::npos) throw TensorFileError("meta value contains a newline");
  for (auto& [k, v] : meta) {
    if (k == key) {
      v = value;
      return;
    }
  }
  meta.emplace_back(key, value);
}

const std::string& TensorFile::get_meta(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  throw TensorFileError("missing meta entry '" + key + "'");
}

bool TensorFile::has_meta(const std::string& key) const {
  for (const auto& kv : meta)
    if (kv.first == key) return true;
  return false;
}

void TensorFile::add_tensor(const std::string& name, core::Tensor<float> t) {
  check_token(name, "tensor name");
  if (has_tensor(name)) throw TensorFileError("duplicate tensor '" + name + "'");
  tensors.emplace_back(name, std::move(t));
}

const core::Tensor<float>& TensorFile::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw TensorFileError("missing tensor '" + name + "'");
}

bool TensorFile::has_tensor(const std::string& name) const {
  for (const auto& kv : tensors)
    if (kv.first == name) return true;
  return false;
}

void save_tensor_file(const std::filesystem::path& path, const TensorFile& file) {
  check_token(file.fingerprint.empty() ? "-" : file.fingerprint, "fingerprint");
  std::ostringstream header;
  header << kMagic << '\n';
  header << "fingerprint " << (file.fingerprint.empty() ? "-" : file.fingerprint) << '\n';
  header << "epoch " << file.epoch << '\n';
  for (const auto& [k, v] : file.meta) header << "meta " << k << ' ' << v << '\n';
  std::uint64_t offset = 0;
  for (const auto& [name, t] : file.tensors) {
    header << "tensor " << name << " f32 " << t.rank();
    for (auto d : t.shape()) header << ' ' << d;
    header << ' ' << offset << '\n';
    offset += t.size() * sizeof(float);
  }
  header << "end\n";

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw TensorFileError("cannot write " + tmp.string());
    const std::string h = header.str();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    std::vector<char> buf;
    for (const auto& [name, t] : file.tensors) {
      buf.resize(t.size() * sizeof(float));
      for (std::size_t i = 0; i < t.size(); ++i) {
        const std::uint32_t bits = to_little(std::bit_cast<std::uint32_t>(t[i]));
        std::memcpy(buf.data() + i * 4, &bits, 4);
      }
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw TensorFileError("write failed for " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw TensorFileError("cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

TensorFile load_tensor_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TensorFileError("cannot open " + path.string());
  std::vector<Entry> entries;
  return parse_header(in, path, entries);
}

TensorFile load_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TensorFileError("cannot open " + path.string());
  std::vector<Entry> entries;
  TensorFile f = parse_header(in, path, entries);
  const auto base = in.tellg();
  std::vector<char> buf;
  for (const auto& e : entries) {
    core::Tensor<float> t(e.shape);
    buf.resize(t.size() * sizeof(float));
    in.seekg(base + static_cast<std::streamoff>(e.offset));
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!in) throw TensorFileError(path.string() + ": truncated data for tensor " + e.name);
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, buf.data() + i * 4, 4);
      t[i] = std::bit_cast<float>(to_little(bits));
    }
    f.tensors.emplace_back(e.name, std::move(t));
  }
  return f;
}

std::string fingerprint(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

}  // namespace vgs::io
