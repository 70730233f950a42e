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

#ifndef CALFS_SCHEDULER_HPP
#define CALFS_SCHEDULER_HPP

#include <algorithm>
#include <array>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "calfs/adversary.hpp"
#include "calfs/checker.hpp"
#include "calfs/protocol.hpp"
#include "calfs/topology.hpp"
#include "calfs/trace.hpp"

namespace calfs {

enum class SchedulerKind { round_robin, randomized, central_random, adversarial_greedy };

inline constexpr std::array<SchedulerKind, 4> kAllSchedulers = {
    SchedulerKind::round_robin, SchedulerKind::randomized, SchedulerKind::central_random,
    SchedulerKind::adversarial_greedy};

inline const char* to_string(SchedulerKind k) {
  switch (k) {
    case SchedulerKind::round_robin: return "round_robin";
    case SchedulerKind::randomized: return "randomized";
    case SchedulerKind::central_random: return "central_random";
    case SchedulerKind::adversarial_greedy: return "adversarial_greedy";
  }
  return "?";
}

inline SchedulerKind parse_scheduler_kind(const std::string& s) {
  for (SchedulerKind k : kAllSchedulers) {
    if (s == to_string(k)) return k;
  }
  throw Error("unknown scheduler policy '" + s + "'");
}

struct SchedulerPolicy {
  SchedulerKind kind = SchedulerKind::round_robin;
  std::uint64_t seed = 0;
  std::size_t fairness_bound = 0;  // 0 selects the default 2n
};

inline std::size_t default_fairness_bound(const Topology& topo) { return 2 * topo.size(); }

/// Per-process count of consecutive steps spent activatable but unselected.
struct FairnessLedger {
  std::vector<std::size_t> starvation_count;
  std::optional<ProcessId> last_picked;  // round-robin cursor
};

/// What adversarial_greedy needs to look one step ahead.
struct Lookahead {
  const Topology* topo = nullptr;
  const Configuration* config = nullptr;
  const AdversaryStrategy* adversary = nullptr;
  std::size_t step_index = 0;
};

/**
 * The daemon. Picks a nonempty subset of the activatable processes each
 * step, and forcibly includes any process that has been starved for
 * fairness_bound - 1 consecutive steps, so no activatable process ever
 * waits fairness_bound steps.
 */
class Daemon {
 public:
  Daemon(SchedulerPolicy policy, std::size_t n) : policy_(policy), rng_(policy.seed) {
    if (policy_.fairness_bound == 0) policy_.fairness_bound = 2 * n;
    if (policy_.fairness_bound < 1) throw Error("scheduler: fairness bound must be >= 1");
    ledger_.starvation_count.assign(n, 0);
  }

  [[nodiscard]] const SchedulerPolicy& policy() const { return policy_; }
  [[nodiscard]] const FairnessLedger& ledger() const { return ledger_; }
  FairnessLedger& ledger() { return ledger_; }

  std::vector<ProcessId> select(const std::vector<ProcessId>& enabled_correct, const std::vector<ProcessId>& byzantines,
                                const Lookahead& look = {}) {
    std::vector<ProcessId> activatable;
    activatable.reserve(enabled_correct.size() + byzantines.size());
    std::merge(enabled_correct.begin(), enabled_correct.end(), byzantines.begin(), byzantines.end(),
               std::back_inserter(activatable));
    if (activatable.empty()) throw Error("scheduler: deadlock reached");
    for (ProcessId v : activatable) {
      if (v >= ledger_.starvation_count.size()) throw Error("scheduler: process id out of range");
    }

    std::vector<ProcessId> chosen;
    switch (policy_.kind) {
      case SchedulerKind::round_robin: {
        auto it = activatable.begin();
        if (ledger_.last_picked) it = std::upper_bound(activatable.begin(), activatable.end(), *ledger_.last_picked);
        if (it == activatable.end()) it = activatable.begin();
        chosen.push_back(*it);
        break;
      }
      case SchedulerKind::randomized: {
        std::bernoulli_distribution coin(0.5);
        for (ProcessId v : activatable) {
          if (coin(rng_)) chosen.push_back(v);
        }
        if (chosen.empty()) chosen.push_back(pick_one(activatable));
        break;
      }
      case SchedulerKind::central_random:
        chosen.push_back(pick_one(activatable));
        break;
      case SchedulerKind::adversarial_greedy:
        chosen = greedy(enabled_correct, byzantines, look);
        break;
    }

    for (ProcessId v : activatable) {
      if (ledger_.starvation_count[v] + 1 >= policy_.fairness_bound) chosen.push_back(v);
    }
    std::sort(chosen.begin(), chosen.end());
    chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());

    std::vector<bool> is_activatable(ledger_.starvation_count.size(), false);
    for (ProcessId v : activatable) is_activatable[v] = true;
    for (ProcessId v = 0; v < ledger_.starvation_count.size(); ++v) {
      bool picked = std::binary_search(chosen.begin(), chosen.end(), v);
      ledger_.starvation_count[v] = (is_activatable[v] && !picked) ? ledger_.starvation_count[v] + 1 : 0;
    }
    if (policy_.kind == SchedulerKind::round_robin) ledger_.last_picked = chosen.front();
    return chosen;
  }

 private:
  ProcessId pick_one(const std::vector<ProcessId>& from) {
    std::uniform_int_distribution<std::size_t> d(0, from.size() - 1);
    return from[d(rng_)];
  }

  // One correct process (the highest one, ties to the lowest id), plus every
  // Byzantine whose next write alone would enable a currently disabled
  // correct process.
  static std::vector<ProcessId> greedy(const std::vector<ProcessId>& enabled_correct,
                                       const std::vector<ProcessId>& byzantines, const Lookahead& look) {
    if (!look.topo || !look.config || !look.adversary) {
      throw Error("scheduler: adversarial_greedy needs lookahead context");
    }
    const Topology& topo = *look.topo;
    const Configuration& config = *look.config;
    std::vector<ProcessId> chosen;
    if (!enabled_correct.empty()) {
      ProcessId best = enabled_correct.front();
      for (ProcessId v : enabled_correct) {
        if (config[v].height > config[best].height) best = v;
      }
      chosen.push_back(best);
    }
    for (ProcessId b : byzantines) {
      auto w = byz_write(*look.adversary, topo, config, b, look.step_index);
      if (!w || *w == config[b]) continue;
      Configuration next = config;
      next[b] = *w;
      bool enables = false;
      for (ProcessId q : topo.neighbors(b)) {
        if (topo.is_correct(q) && !is_enabled(topo, config, q) && is_enabled(topo, next, q)) {
          enables = true;
          break;
        }
      }
      if (enables) chosen.push_back(b);
    }
    if (chosen.empty()) chosen.push_back(byzantines.front());
    return chosen;
  }

  SchedulerPolicy policy_;
  FairnessLedger ledger_;
  std::mt19937_64 rng_;
};

struct RunOptions {
  std::size_t max_steps = 100000;
  /// Quiet adversary-active steps required before stopping; 0 selects 10 * n * max_degree.
  std::size_t padding = 0;
  /// Zone used by the stop condition.
  Zone stop_zone = Zone::SB;
};

inline std::size_t default_padding(const Topology& topo) { return 10 * topo.size() * topo.max_degree(); }

/**
 * Runs the daemon, the adversary, and the protocol until one of:
 *  - no correct process is enabled and no Byzantine will ever write
 *    (always the case without Byzantines): the configuration is final;
 *  - the configuration is zone-legitimate and zone-stable, and since then
 *    `padding` steps activating a Byzantine passed with no zone-correct
 *    S-variable change;
 *  - max_steps steps were executed (the trace is marked truncated).
 */
inline Trace run(const Topology& topo, const Configuration& initial, const SchedulerPolicy& policy,
                 const AdversaryStrategy& adversary, const RunOptions& options = {}) {
  check_shape(topo, initial);
  if (options.max_steps < 1) throw Error("run: max_steps must be >= 1");
  Daemon daemon(policy, topo.size());
  const ZoneReport zones = compute_zones(topo);
  const std::size_t padding = options.padding ? options.padding : default_padding(topo);
  const bool byzantine_idle = topo.byzantine().empty() || adversary.kind == AdversaryKind::silent;

  Trace trace;
  trace.topo = topo;
  trace.configs.push_back(initial);
  trace.fairness_bound = daemon.policy().fairness_bound;
  trace.padding = padding;

  bool armed = is_zone_legitimate_and_stable(topo, zones, initial, options.stop_zone);
  std::size_t quiet = 0;
  for (std::size_t i = 0;; ++i) {
    const Configuration& config = trace.configs.back();
    EnabledSet en = enabled_set(topo, config);
    if (en.correct.empty() && byzantine_idle) {
      trace.stop_reason = StopReason::converged;
      return trace;
    }
    if (armed && quiet >= padding) {
      trace.stop_reason = StopReason::quiescent;
      return trace;
    }
    if (i == options.max_steps) break;

    Lookahead look{&topo, &config, &adversary, i};
    std::vector<ProcessId> chosen = daemon.select(en.correct, en.byzantine, look);
    std::map<ProcessId, ProcessState> writes;
    bool byzantine_active = false;
    for (ProcessId v : chosen) {
      if (!topo.is_byzantine(v)) continue;
      byzantine_active = true;
      if (auto w = byz_write(adversary, topo, config, v, i)) writes[v] = *w;
    }
    StepResult r = step(topo, config, chosen, writes);
    const bool perturbed = step_perturbs_zone(topo, zones, options.stop_zone, TraceStep{{}, r.actions});
    trace.steps.push_back(TraceStep{std::move(chosen), std::move(r.actions)});
    trace.configs.push_back(std::move(r.config));

    if (perturbed) armed = false;
    if (!armed) {
      armed = is_zone_legitimate_and_stable(topo, zones, trace.configs.back(), options.stop_zone);
      quiet = 0;
    } else if (byzantine_active) {
      ++quiet;
    }
  }
  trace.truncated = true;
  trace.stop_reason = StopReason::max_steps;
  return trace;
}

/// Largest number of consecutive steps any correct process spent enabled
/// without being selected, scanning the whole trace.
inline std::size_t max_starvation(const Trace& trace) {
  const Topology& topo = trace.topo;
  std::vector<std::size_t> run(topo.size(), 0);
  std::size_t worst = 0;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& act = trace.steps[i].activated;
    for (ProcessId v = 0; v < topo.size(); ++v) {
      if (topo.is_byzantine(v)) continue;
      bool enabled = is_enabled(topo, trace.configs[i], v);
      bool picked = std::binary_search(act.begin(), act.end(), v);
      run[v] = (enabled && !picked) ? run[v] + 1 : 0;
      worst = std::max(worst, run[v]);
    }
  }
  return worst;
}

}  // namespace calfs

#endif  // CALFS_SCHEDULER_HPP
