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

#include <fstream>
#include <set>
#include <sstream>

#include "vgs/data/dataset.hpp"

namespace vgs::data {

namespace {

constexpr const char* kHeader = "pair_id,audio_path,image_path,split";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream s(line);
  while (std::getline(s, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw DatasetError("unknown split '" + text + "'");
}

std::vector<AlignedPair> scan_manifest(const fs::path& manifest_or_dir) {
  const fs::path manifest =
      fs::is_directory(manifest_or_dir) ? manifest_or_dir / "manifest.csv" : manifest_or_dir;
  std::ifstream in(manifest);
  if (!in) throw DatasetError("cannot open manifest " + manifest.string());
  const fs::path root = fs::absolute(manifest).parent_path();
  std::vector<AlignedPair> pairs;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line == kHeader) continue;
    const std::string where = manifest.string() + ":" + std::to_string(line_no);
    const auto f = split_csv(line);
    if (f.size() != 4) throw DatasetError(where + ": expected 4 fields, got " + std::to_string(f.size()));
    AlignedPair p;
    p.pair_id = f[0];
    if (p.pair_id.empty()) throw DatasetError(where + ": empty pair_id");
    if (!ids.insert(p.pair_id).second) throw DatasetError(where + ": duplicate pair_id " + p.pair_id);
    p.audio_path = fs::path(f[1]).is_absolute() ? fs::path(f[1]) : root / f[1];
    p.image_path = fs::path(f[2]).is_absolute() ? fs::path(f[2]) : root / f[2];
    try {
      p.split = parse_split(f[3]);
    } catch (const DatasetError& e) {
      throw DatasetError(where + ": " + e.what());
    }
    if (!fs::is_regular_file(p.audio_path))
      throw DatasetError(where + " (" + p.pair_id + "): missing audio file " + p.audio_path.string());
    if (!fs::is_regular_file(p.image_path))
      throw DatasetError(where + " (" + p.pair_id + "): missing image file " + p.image_path.string());
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void write_manifest(const fs::path& manifest, std::span<const AlignedPair> pairs) {
  const fs::path root = fs::absolute(manifest).parent_path();
  fs::create_directories(root);
  std::ofstream out(manifest, std::ios::trunc);
  if (!out) throw DatasetError("cannot write manifest " + manifest.string());
  auto rel = [&](const fs::path& p) {
    const fs::path r = fs::absolute(p).lexically_relative(root);
    return (r.empty() || *r.begin() == "..") ? fs::absolute(p).string() : r.generic_string();
  };
  out << kHeader << '\n';
  for (const auto& p : pairs) {
    out << p.pair_id << ',' << rel(p.audio_path) << ',' << rel(p.image_path) << ','
        << to_string(p.split) << '\n';
  }
  if (!out) throw DatasetError("write failed for " + manifest.string());
}

std::vector<AlignedPair> select_split(std::span<const AlignedPair> pairs, Split split) {
  std::vector<AlignedPair> out;
  for (const auto& p : pairs)
    if (p.split == split) out.push_back(p);
  return out;
}

}  // namespace vgs::data
