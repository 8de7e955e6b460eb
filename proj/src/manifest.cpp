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

#include "osd/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "osd/errors.hpp"
#include "osd/labels.hpp"
#include "osd/wav.hpp"

namespace osd {

void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open manifest for writing: " + path);
  for (const ManifestEntry& e : entries) out << e.wav_path << '\t' << e.label_path << '\n';
  if (!out) throw DataError("failed writing manifest: " + path);
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size() ||
        line.find('\t', tab + 1) != std::string::npos) {
      throw DataError("manifest " + path + " line " + std::to_string(lineno) +
                      ": expected exactly two tab-separated paths");
    }
    entries.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return entries;
}

std::vector<ManifestEntry> write_clips(const std::vector<LabeledClip>& clips,
                                       const std::string& dir, const std::string& prefix) {
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> entries;
  entries.reserve(clips.size());
  char name[64];
  for (std::size_t i = 0; i < clips.size(); ++i) {
    std::snprintf(name, sizeof(name), "%s%04zu", prefix.c_str(), i);
    ManifestEntry e;
    e.wav_path = dir + "/" + name + ".wav";
    e.label_path = dir + "/" + name + ".lab";
    write_wav(clips[i].wav, e.wav_path);
    write_label_file(e.label_path, clips[i].labels);
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace osd
