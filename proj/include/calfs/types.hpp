// Copyright 2026 The calfs-sim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CALFS_TYPES_HPP
#define CALFS_TYPES_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace calfs {

using ProcessId = std::uint32_t;
using Height = std::uint64_t;
using Distance = std::uint32_t;

/// Distance to an empty source set.
inline constexpr Distance kInfiniteDistance = std::numeric_limits<Distance>::max();

/// Sentinel for "no such configuration index" in reports.
inline constexpr std::size_t kNoIndex = std::numeric_limits<std::size_t>::max();

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The S-variables of one process. An empty parent is the NIL pointer.
struct ProcessState {
  std::optional<ProcessId> parent;
  Height height = 0;

  friend bool operator==(const ProcessState&, const ProcessState&) = default;
};

inline std::string to_string(const ProcessState& s) {
  std::string p = s.parent ? std::to_string(*s.parent) : std::string("nil");
  return "(" + p + "," + std::to_string(s.height) + ")";
}

}  // namespace calfs

#endif  // CALFS_TYPES_HPP
