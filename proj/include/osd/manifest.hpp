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

#ifndef OSD_MANIFEST_HPP
#define OSD_MANIFEST_HPP

#include <string>
#include <vector>

#include "osd/augment.hpp"

namespace osd {

// One corpus item: "wav_path<TAB>label_path" per manifest line.
struct ManifestEntry {
  std::string wav_path;
  std::string label_path;
};

void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& path);
std::vector<ManifestEntry> read_manifest(const std::string& path);

// Writes clip i as <dir>/<prefix><i>.wav plus the matching .lab track and
// returns the manifest entries in order. Creates <dir> if needed.
std::vector<ManifestEntry> write_clips(const std::vector<LabeledClip>& clips,
                                       const std::string& dir, const std::string& prefix);

}  // namespace osd

#endif  // OSD_MANIFEST_HPP
