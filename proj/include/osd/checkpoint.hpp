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

#ifndef OSD_CHECKPOINT_HPP
#define OSD_CHECKPOINT_HPP

#include <string>
#include <vector>

#include "osd/model.hpp"
#include "osd/optim.hpp"

namespace osd {

// Little-endian binary checkpoint. Layout (see README for byte-level detail):
// magic "OSD3", format version u32, the full ModelConfig, every named
// parameter tensor, the BN running statistics, then optionally the Adam
// state. Values round-trip bit-exactly. Throws DataError for bad magic,
// unsupported version, or truncation.
void save_checkpoint(const CrnnModel& model, const std::vector<AdamState>* opt_state,
                     const std::string& path);

// Rebuilds the model from the stored config. When `expected` is non-null and
// differs from the stored config, throws DataError (config mismatch). When
// `opt_state` is non-null and the file carries optimizer state, it is filled;
// a missing optimizer section leaves it empty.
CrnnModel load_checkpoint(const std::string& path, std::vector<AdamState>* opt_state = nullptr,
                          const ModelConfig* expected = nullptr);

}  // namespace osd

#endif  // OSD_CHECKPOINT_HPP
