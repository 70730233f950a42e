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

// The min+1 breadth-first spanning tree protocol with circular tie-breaking.
//
// Each non-root process adopts a minimum-height neighbor as parent (the
// first such neighbor strictly after its current parent in circular id
// order) and takes that neighbor's height plus one. The root pins itself
// to (nil, 0). Steps are composite-atomic: every activated process reads
// the configuration as it was at the beginning of the step.

#ifndef CALFS_PROTOCOL_HPP
#define CALFS_PROTOCOL_HPP

#include <algorithm>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "calfs/topology.hpp"
#include "calfs/types.hpp"

namespace calfs {

struct Configuration {
  std::vector<ProcessState> states;

  Configuration() = default;
  explicit Configuration(std::vector<ProcessState> s) : states(std::move(s)) {}
  explicit Configuration(std::size_t n) : states(n) {}

  [[nodiscard]] std::size_t size() const { return states.size(); }
  const ProcessState& operator[](ProcessId v) const { return states[v]; }
  ProcessState& operator[](ProcessId v) { return states[v]; }

  friend bool operator==(const Configuration&, const Configuration&) = default;
};

enum class Rule { root_rule, nonroot_rule, byzantine_write };

inline const char* to_string(Rule r) {
  switch (r) {
    case Rule::root_rule: return "root";
    case Rule::nonroot_rule: return "nonroot";
    case Rule::byzantine_write: return "byzantine";
  }
  return "?";
}

inline Rule parse_rule(const std::string& s) {
  if (s == "root") return Rule::root_rule;
  if (s == "nonroot") return Rule::nonroot_rule;
  if (s == "byzantine") return Rule::byzantine_write;
  throw Error("unknown rule '" + s + "'");
}

struct Action {
  ProcessId process = 0;
  ProcessState old_state;
  ProcessState new_state;
  Rule rule = Rule::nonroot_rule;

  /// Number of S-variables (parent, height) this action modified.
  [[nodiscard]] int modified_variables() const {
    return int(old_state.parent != new_state.parent) + int(old_state.height != new_state.height);
  }

  friend bool operator==(const Action&, const Action&) = default;
};

inline void check_shape(const Topology& topo, const Configuration& config) {
  if (config.size() != topo.size()) {
    throw Error("configuration has " + std::to_string(config.size()) + " states, topology has " +
                std::to_string(topo.size()) + " processes");
  }
}

/// Smallest height among v's neighbors, as published in `config`.
inline Height min_neighbor_height(const Topology& topo, const Configuration& config, ProcessId v) {
  const auto& nbrs = topo.neighbors(v);
  Height m = std::numeric_limits<Height>::max();
  for (ProcessId q : nbrs) m = std::min(m, config[q].height);
  return m;
}

inline bool guard_root(const Topology& topo, const Configuration& config, ProcessId v) {
  if (v != topo.root()) throw Error("guard_root: process " + std::to_string(v) + " is not the root");
  const ProcessState& s = config[v];
  return s.parent.has_value() || s.height != 0;
}

// A parent outside N_v cannot be read locally, so it is treated as broken.
inline bool guard_nonroot(const Topology& topo, const Configuration& config, ProcessId v) {
  if (v == topo.root()) throw Error("guard_nonroot: process " + std::to_string(v) + " is the root");
  const ProcessState& s = config[v];
  if (!s.parent || *s.parent >= topo.size() || !topo.adjacent(v, *s.parent)) return true;
  const Height parent_height = config[*s.parent].height;
  return s.height != parent_height + 1 || parent_height != min_neighbor_height(topo, config, v);
}

/// Guard of whichever rule applies to v (correct processes only).
inline bool is_enabled(const Topology& topo, const Configuration& config, ProcessId v) {
  return v == topo.root() ? guard_root(topo, config, v) : guard_nonroot(topo, config, v);
}

/**
 * Circular successor among `candidates`: scanning N_v in ascending id order,
 * starting strictly after `current_parent` and wrapping around, return the
 * first candidate met. The current parent itself is reached last. With no
 * parent, or a parent outside N_v, the smallest candidate is returned.
 */
inline ProcessId suivant(const Topology& topo, ProcessId v, std::optional<ProcessId> current_parent,
                         std::span<const ProcessId> candidates) {
  if (candidates.empty()) throw Error("suivant: empty candidate set");
  const auto& nbrs = topo.neighbors(v);
  auto is_candidate = [&](ProcessId q) {
    return std::find(candidates.begin(), candidates.end(), q) != candidates.end();
  };
  for (ProcessId c : candidates) {
    if (!topo.adjacent(v, c)) throw Error("suivant: candidate " + std::to_string(c) + " is not a neighbor");
  }
  std::size_t start = 0;
  if (current_parent) {
    auto it = std::lower_bound(nbrs.begin(), nbrs.end(), *current_parent);
    if (it != nbrs.end() && *it == *current_parent) start = static_cast<std::size_t>(it - nbrs.begin()) + 1;
  }
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    ProcessId q = nbrs[(start + i) % nbrs.size()];
    if (is_candidate(q)) return q;
  }
  throw Error("suivant: no candidate found");  // unreachable given the checks above
}

/// The state v would move to if it executed its rule in `config`. Does not check the guard.
inline ProcessState next_state(const Topology& topo, const Configuration& config, ProcessId v) {
  if (v == topo.root()) return ProcessState{std::nullopt, 0};
  const Height m = min_neighbor_height(topo, config, v);
  std::vector<ProcessId> argmin;
  for (ProcessId q : topo.neighbors(v)) {
    if (config[q].height == m) argmin.push_back(q);
  }
  ProcessId p = suivant(topo, v, config[v].parent, argmin);
  return ProcessState{p, config[p].height + 1};
}

/// Executes v's enabled rule against `config` without mutating it.
inline Action apply_action(const Topology& topo, const Configuration& config, ProcessId v) {
  check_shape(topo, config);
  if (v >= topo.size()) throw Error("apply_action: invalid process id " + std::to_string(v));
  if (topo.is_byzantine(v)) throw Error("apply_action: process " + std::to_string(v) + " is byzantine");
  if (!is_enabled(topo, config, v)) throw Error("apply_action: process " + std::to_string(v) + " not enabled");
  Action a;
  a.process = v;
  a.old_state = config[v];
  a.new_state = next_state(topo, config, v);
  a.rule = v == topo.root() ? Rule::root_rule : Rule::nonroot_rule;
  if (a.old_state == a.new_state) {
    throw Error("apply_action: enabled rule of process " + std::to_string(v) + " left its state unchanged");
  }
  return a;
}

/// Activatable processes: enabled correct ones, and every Byzantine.
struct EnabledSet {
  std::vector<ProcessId> correct;
  std::vector<ProcessId> byzantine;

  [[nodiscard]] bool empty() const { return correct.empty() && byzantine.empty(); }
};

inline EnabledSet enabled_set(const Topology& topo, const Configuration& config) {
  check_shape(topo, config);
  EnabledSet e;
  for (ProcessId v = 0; v < topo.size(); ++v) {
    if (topo.is_byzantine(v)) {
      e.byzantine.push_back(v);
    } else if (is_enabled(topo, config, v)) {
      e.correct.push_back(v);
    }
  }
  return e;
}

struct StepResult {
  Configuration config;
  std::vector<Action> actions;
};

/**
 * One step. Correct activated processes compute their actions from the
 * start-of-step snapshot, then everything is applied at once. Byzantine
 * writes are applied verbatim; an activated Byzantine without a write
 * leaves its state as is.
 */
inline StepResult step(const Topology& topo, const Configuration& config, std::span<const ProcessId> activated,
                       const std::map<ProcessId, ProcessState>& byz_writes) {
  check_shape(topo, config);
  if (activated.empty()) throw Error("step: empty activation set");
  std::vector<bool> active(topo.size(), false);
  for (ProcessId v : activated) {
    if (v >= topo.size()) throw Error("step: invalid process id " + std::to_string(v));
    if (active[v]) throw Error("step: process " + std::to_string(v) + " activated twice");
    active[v] = true;
  }
  for (const auto& [b, _] : byz_writes) {
    if (b >= topo.size() || !topo.is_byzantine(b)) {
      throw Error("step: byzantine write for correct process " + std::to_string(b));
    }
    if (!active[b]) throw Error("step: byzantine write for inactive process " + std::to_string(b));
  }

  StepResult r;
  std::vector<ProcessId> order(activated.begin(), activated.end());
  std::sort(order.begin(), order.end());
  for (ProcessId v : order) {
    if (topo.is_byzantine(v)) {
      auto it = byz_writes.find(v);
      if (it != byz_writes.end()) r.actions.push_back({v, config[v], it->second, Rule::byzantine_write});
    } else {
      r.actions.push_back(apply_action(topo, config, v));
    }
  }
  r.config = config;
  for (const Action& a : r.actions) r.config[a.process] = a.new_state;
  return r;
}

/// The configuration where every process holds its BFS distance to the root
/// and points at its smallest-id neighbor one hop closer. Byzantines get the
/// same treatment, as if they were correct.
inline Configuration legitimate_configuration(const Topology& topo) {
  auto dist = bfs_distances(topo, {topo.root()});
  Configuration c(topo.size());
  for (ProcessId v = 0; v < topo.size(); ++v) {
    c[v].height = dist[v];
    if (v == topo.root()) continue;
    for (ProcessId q : topo.neighbors(v)) {
      if (dist[q] + 1 == dist[v]) {
        c[v].parent = q;
        break;
      }
    }
  }
  return c;
}

}  // namespace calfs

#endif  // CALFS_PROTOCOL_HPP
