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

#ifndef OSD_SEGMENTS_HPP
#define OSD_SEGMENTS_HPP

#include <string>

namespace osd {

// Half-open time interval [onset, offset) in seconds. The label carries a
// class name or speaker id depending on context.
struct TimedSegment {
  double onset_s = 0.0;
  double offset_s = 0.0;
  std::string label;

  double duration_s() const { return offset_s - onset_s; }
  bool operator==(const TimedSegment& other) const = default;
};

}  // namespace osd

#endif  // OSD_SEGMENTS_HPP
