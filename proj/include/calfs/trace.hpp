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

#ifndef CALFS_TRACE_HPP
#define CALFS_TRACE_HPP

#include <vector>

#include "calfs/protocol.hpp"
#include "calfs/topology.hpp"

namespace calfs {

struct TraceStep {
  std::vector<ProcessId> activated;  // sorted
  std::vector<Action> actions;       // sorted by process

  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

enum class StopReason {
  converged,   // no correct process enabled and no Byzantine can ever write again
  quiescent,   // zone-legitimate, zone-stable, and the adversary padding elapsed quietly
  max_steps,   // step budget exhausted before either of the above
};

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::converged: return "converged";
    case StopReason::quiescent: return "quiescent";
    case StopReason::max_steps: return "max_steps";
  }
  return "?";
}

inline StopReason parse_stop_reason(const std::string& s) {
  if (s == "converged") return StopReason::converged;
  if (s == "quiescent") return StopReason::quiescent;
  if (s == "max_steps") return StopReason::max_steps;
  throw Error("unknown stop reason '" + s + "'");
}

/// An execution prefix: configs[i+1] results from applying steps[i] to configs[i].
struct Trace {
  Topology topo;
  std::vector<Configuration> configs;
  std::vector<TraceStep> steps;
  bool truncated = false;
  StopReason stop_reason = StopReason::max_steps;
  std::size_t fairness_bound = 0;
  std::size_t padding = 0;

  [[nodiscard]] std::size_t length() const { return steps.size(); }
  [[nodiscard]] const Configuration& final_config() const { return configs.back(); }
};

}  // namespace calfs

#endif  // CALFS_TRACE_HPP
