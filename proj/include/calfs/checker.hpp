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

// Predicates over configurations and traces: the local specification of a
// BFS forest rooted at the root or at Byzantines, zone legitimacy and
// stability, perturbation counting, and strict containment.
//
// All trace-level checks are finite-prefix surrogates of properties that
// quantify over infinite executions. They rely on the run's stop condition
// (a quiet adversary-active suffix) to make "never changes again" meaningful.

#ifndef CALFS_CHECKER_HPP
#define CALFS_CHECKER_HPP

#include <map>
#include <optional>
#include <vector>

#include "calfs/protocol.hpp"
#include "calfs/topology.hpp"
#include "calfs/trace.hpp"

namespace calfs {

namespace detail {

// One hop of a correct path: child's parent pointer and height agree with
// `parent`, and parent's height is minimal among child's neighbors.
inline bool correct_link(const Topology& topo, const Configuration& config, ProcessId child, ProcessId parent) {
  if (parent >= topo.size() || !topo.adjacent(child, parent)) return false;
  const Height hp = config[parent].height;
  return config[child].height == hp + 1 && hp == min_neighbor_height(topo, config, child);
}

inline bool root_like(const Topology& topo, const Configuration& config, ProcessId v) {
  const ProcessState& s = config[v];
  return !s.parent && s.height == 0 && (v == topo.root() || topo.is_byzantine(v));
}

}  // namespace detail

/// spec(v) for a correct process v.
inline bool check_spec(const Topology& topo, const Configuration& config, ProcessId v) {
  check_shape(topo, config);
  if (v >= topo.size()) throw Error("check_spec: invalid process id " + std::to_string(v));
  if (topo.is_byzantine(v)) throw Error("check_spec: process " + std::to_string(v) + " is byzantine");
  if (v == topo.root()) return detail::root_like(topo, config, v);
  // Heights strictly decrease along a valid chain, so the walk ends within H_v hops.
  ProcessId cur = v;
  if (!config[cur].parent) return false;
  while (config[cur].parent) {
    ProcessId p = *config[cur].parent;
    if (!detail::correct_link(topo, config, cur, p)) return false;
    cur = p;
  }
  return detail::root_like(topo, config, cur);
}

/// spec(v) for every correct process at once, memoizing shared chain suffixes.
/// Entries for Byzantine processes are false.
inline std::vector<bool> check_spec_all(const Topology& topo, const Configuration& config) {
  check_shape(topo, config);
  const std::size_t n = topo.size();
  enum : unsigned char { kUnknown, kYes, kNo };
  // chain_ok[u]: following parents from u yields a correct path suffix ending at a root-like process.
  std::vector<unsigned char> chain_ok(n, kUnknown);
  std::vector<ProcessId> pending;
  for (ProcessId start = 0; start < n; ++start) {
    ProcessId cur = start;
    pending.clear();
    unsigned char verdict = kUnknown;
    while (verdict == kUnknown) {
      if (chain_ok[cur] != kUnknown) {
        verdict = chain_ok[cur];
        break;
      }
      pending.push_back(cur);
      const auto& parent = config[cur].parent;
      if (!parent) {
        verdict = detail::root_like(topo, config, cur) ? kYes : kNo;
      } else if (!detail::correct_link(topo, config, cur, *parent)) {
        verdict = kNo;
      } else {
        cur = *parent;
      }
    }
    for (ProcessId u : pending) chain_ok[u] = verdict;
  }
  std::vector<bool> out(n, false);
  for (ProcessId v = 0; v < n; ++v) {
    if (topo.is_byzantine(v)) continue;
    if (v == topo.root()) {
      out[v] = detail::root_like(topo, config, v);
    } else {
      out[v] = config[v].parent.has_value() && chain_ok[v] == kYes;
    }
  }
  return out;
}

/// Every correct process outside the zone satisfies spec.
inline bool is_zone_legitimate(const Topology& topo, const ZoneReport& zones, const Configuration& config,
                               Zone zone) {
  auto ok = check_spec_all(topo, config);
  for (ProcessId v = 0; v < topo.size(); ++v) {
    if (zone_correct(topo, zones, zone, v) && !ok[v]) return false;
  }
  return true;
}

/// No correct process outside the zone is enabled. Equivalent to the
/// "does not move while Byzantines stay idle" definition because every
/// enabled rule of this protocol changes an S-variable.
inline bool is_zone_stable(const Topology& topo, const ZoneReport& zones, const Configuration& config, Zone zone) {
  check_shape(topo, config);
  for (ProcessId v = 0; v < topo.size(); ++v) {
    if (zone_correct(topo, zones, zone, v) && is_enabled(topo, config, v)) return false;
  }
  return true;
}

inline bool is_zone_legitimate_and_stable(const Topology& topo, const ZoneReport& zones,
                                          const Configuration& config, Zone zone) {
  return is_zone_stable(topo, zones, config, zone) && is_zone_legitimate(topo, zones, config, zone);
}

/// Rebuilds every configuration from the initial one and the recorded
/// activations and Byzantine writes, and checks it against the trace.
inline void validate_trace(const Trace& trace) {
  if (trace.configs.size() != trace.steps.size() + 1) throw Error("corrupt trace: configs/steps length mismatch");
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const TraceStep& s = trace.steps[i];
    std::map<ProcessId, ProcessState> writes;
    for (const Action& a : s.actions) {
      if (a.rule == Rule::byzantine_write) writes[a.process] = a.new_state;
    }
    StepResult r;
    try {
      r = step(trace.topo, trace.configs[i], s.activated, writes);
    } catch (const Error& e) {
      throw Error("corrupt trace: step " + std::to_string(i) + ": " + e.what());
    }
    if (r.actions != s.actions || r.config != trace.configs[i + 1]) {
      throw Error("corrupt trace: step " + std::to_string(i) + " does not replay");
    }
  }
}

struct Perturbation {
  std::size_t start = 0;
  std::size_t end = 0;   // first zone-legitimate-and-stable configuration after start
  bool closed = true;    // false when the trace ended first; `end` is then the last index

  friend bool operator==(const Perturbation&, const Perturbation&) = default;
};

struct PerturbationReport {
  Zone zone = Zone::SB;
  std::vector<Perturbation> perturbations;
  std::size_t perturbation_count = 0;
  /// S-variable modifications (parent and height counted separately) per
  /// zone-correct process, from `first_stable` onwards.
  std::map<ProcessId, std::size_t> per_process_s_var_changes;
  std::size_t max_changes = 0;
  /// Same count restricted to steps after `contained_at`.
  std::map<ProcessId, std::size_t> changes_after_containment;
  /// First zone-legitimate-and-stable configuration.
  std::size_t first_stable = kNoIndex;
  /// First zone-legitimate-and-stable configuration after which no
  /// zone-correct process modifies an S-variable for the rest of the trace.
  std::size_t contained_at = kNoIndex;
};

/// Whether the step modifies an S-variable of a correct process outside the zone.
inline bool step_perturbs_zone(const Topology& topo, const ZoneReport& zones, Zone zone, const TraceStep& s) {
  for (const Action& a : s.actions) {
    if (zone_correct(topo, zones, zone, a.process) && a.modified_variables() > 0) return true;
  }
  return false;
}

inline PerturbationReport analyze_trace(const Trace& trace, const ZoneReport& zones, Zone zone) {
  validate_trace(trace);
  const Topology& topo = trace.topo;
  PerturbationReport rep;
  rep.zone = zone;

  const std::size_t configs = trace.configs.size();
  std::vector<bool> stable(configs);
  for (std::size_t i = 0; i < configs; ++i) {
    stable[i] = is_zone_legitimate_and_stable(topo, zones, trace.configs[i], zone);
  }
  std::vector<bool> perturbing(trace.steps.size());
  std::size_t last_change_step = kNoIndex;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    perturbing[i] = step_perturbs_zone(topo, zones, zone, trace.steps[i]);
    if (perturbing[i]) last_change_step = i;
  }

  for (std::size_t i = 0; i < configs; ++i) {
    if (stable[i]) {
      rep.first_stable = i;
      break;
    }
  }
  const std::size_t silent_from = last_change_step == kNoIndex ? 0 : last_change_step + 1;
  for (std::size_t i = silent_from; i < configs; ++i) {
    if (stable[i]) {
      rep.contained_at = i;
      break;
    }
  }

  // Perturbations: between consecutive zone-legitimate-and-stable
  // configurations, at least one zone-correct S-variable change.
  std::size_t a = rep.first_stable;
  while (a != kNoIndex) {
    std::size_t b = kNoIndex;
    bool changed = false;
    for (std::size_t i = a; i + 1 < configs; ++i) {
      changed = changed || perturbing[i];
      if (stable[i + 1]) {
        b = i + 1;
        break;
      }
    }
    if (b == kNoIndex) {
      if (changed) rep.perturbations.push_back({a, configs - 1, false});
      break;
    }
    if (changed) rep.perturbations.push_back({a, b, true});
    a = b;
  }
  rep.perturbation_count = rep.perturbations.size();

  if (rep.first_stable != kNoIndex) {
    for (std::size_t i = rep.first_stable; i < trace.steps.size(); ++i) {
      for (const Action& act : trace.steps[i].actions) {
        if (!zone_correct(topo, zones, zone, act.process)) continue;
        const int m = act.modified_variables();
        if (m == 0) continue;
        rep.per_process_s_var_changes[act.process] += m;
        if (rep.contained_at != kNoIndex && i >= rep.contained_at) rep.changes_after_containment[act.process] += m;
      }
    }
  }
  for (const auto& [_, c] : rep.per_process_s_var_changes) rep.max_changes = std::max(rep.max_changes, c);
  return rep;
}

struct StrictVerdict {
  /// kNoIndex means FAIL.
  std::size_t contained_at = kNoIndex;
  bool truncated = false;
  /// Steps after contained_at that activated at least one Byzantine.
  std::size_t adversary_steps_after = 0;

  [[nodiscard]] bool ok() const { return contained_at != kNoIndex && !truncated; }
};

/// First index whose configuration is SB-legitimate and after which no
/// SB-correct process modifies an S-variable. A truncated trace is a FAIL
/// (the candidate index is still reported).
inline StrictVerdict verify_td_strict(const Trace& trace, const ZoneReport& zones) {
  validate_trace(trace);
  const Topology& topo = trace.topo;
  StrictVerdict v;
  v.truncated = trace.truncated;
  std::size_t silent_from = 0;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    if (step_perturbs_zone(topo, zones, Zone::SB, trace.steps[i])) silent_from = i + 1;
  }
  for (std::size_t i = silent_from; i < trace.configs.size(); ++i) {
    if (is_zone_legitimate(topo, zones, trace.configs[i], Zone::SB)) {
      v.contained_at = i;
      break;
    }
  }
  if (v.contained_at != kNoIndex) {
    for (std::size_t i = v.contained_at; i < trace.steps.size(); ++i) {
      for (ProcessId p : trace.steps[i].activated) {
        if (topo.is_byzantine(p)) {
          ++v.adversary_steps_after;
          break;
        }
      }
    }
  }
  return v;
}

}  // namespace calfs

#endif  // CALFS_CHECKER_HPP
