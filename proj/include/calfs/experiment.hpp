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

#ifndef CALFS_EXPERIMENT_HPP
#define CALFS_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "calfs/adversary.hpp"
#include "calfs/checker.hpp"
#include "calfs/scheduler.hpp"
#include "calfs/topology.hpp"
#include "calfs/trace_io.hpp"
#include "json.hpp"

namespace calfs {

/// SplitMix64 finalizer; derives independent per-component seeds from one master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

enum class InitKind { legitimate, random, file };

struct InitSpec {
  InitKind kind = InitKind::random;
  std::optional<std::uint64_t> seed;
  Height height_bound = 0;  // 0 selects 2n
  std::string path;
};

struct ExperimentConfig {
  std::optional<std::string> graph_file;
  GraphSpec graph;  // used when graph_file is empty
  std::optional<std::uint64_t> graph_seed;
  std::optional<ProcessId> root;
  std::optional<std::vector<ProcessId>> byzantine;
  /// When set, that many Byzantines are placed uniformly among non-root processes.
  std::optional<std::size_t> random_byzantine_count;
  std::uint64_t seed = 0;
  InitSpec init;
  SchedulerPolicy scheduler;
  std::optional<std::uint64_t> scheduler_seed;
  AdversaryStrategy adversary;
  std::optional<std::uint64_t> adversary_seed;
  std::optional<Height> height_cap;  // default 4n
  std::size_t max_steps = 100000;
  std::size_t padding = 0;  // 0 selects 10 * n * max_degree
  Zone zone = Zone::SBstar;
  std::string trace_out;
  std::string zones_out;
  std::string metrics_out;
};

namespace seed_tag {
inline constexpr std::uint64_t init = 1, scheduler = 2, adversary = 3, graph = 4, byzantine = 5;
}

inline std::uint64_t init_seed(const ExperimentConfig& c) {
  return c.init.seed ? *c.init.seed : derive_seed(c.seed, seed_tag::init);
}

inline ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw Error("config: top level must be a JSON object");
  std::vector<std::string> errors;
  ExperimentConfig c;
  auto note = [&](const std::string& field, const std::string& what) { errors.push_back(field + ": " + what); };
  auto check_keys = [&](const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; })) {
        note(where + it.key(), "unknown field");
      }
    }
  };
  auto guarded = [&](const std::string& field, auto&& fn) {
    try {
      fn();
    } catch (const Json::exception& e) {
      note(field, e.what());
    } catch (const Error& e) {
      note(field, e.what());
    }
  };

  check_keys(j, "",
             {"graph", "root", "byzantine", "random_byzantine", "seed", "init", "scheduler", "adversary",
              "max_steps", "padding", "zone", "output"});

  if (j.contains("graph")) {
    guarded("graph", [&] {
      const Json& g = j.at("graph");
      check_keys(g, "graph.", {"file", "kind", "n", "rows", "cols", "p", "seed"});
      if (g.contains("file")) {
        c.graph_file = g.at("file").get<std::string>();
      } else {
        c.graph.kind = parse_graph_kind(g.at("kind").get<std::string>());
        c.graph.n = g.value("n", std::size_t{0});
        c.graph.rows = g.value("rows", std::size_t{0});
        c.graph.cols = g.value("cols", std::size_t{0});
        c.graph.edge_probability = g.value("p", 0.0);
        if (g.contains("seed")) c.graph_seed = g.at("seed").get<std::uint64_t>();
      }
    });
  }
  guarded("root", [&] {
    if (j.contains("root")) c.root = j.at("root").get<ProcessId>();
  });
  guarded("byzantine", [&] {
    if (j.contains("byzantine")) c.byzantine = j.at("byzantine").get<std::vector<ProcessId>>();
  });
  guarded("random_byzantine", [&] {
    if (j.contains("random_byzantine")) c.random_byzantine_count = j.at("random_byzantine").get<std::size_t>();
  });
  guarded("seed", [&] { c.seed = j.value("seed", std::uint64_t{0}); });
  guarded("init", [&] {
    if (!j.contains("init")) return;
    const Json& i = j.at("init");
    check_keys(i, "init.", {"kind", "seed", "height_bound", "path"});
    std::string kind = i.value("kind", std::string("random"));
    if (kind == "legitimate") c.init.kind = InitKind::legitimate;
    else if (kind == "random") c.init.kind = InitKind::random;
    else if (kind == "file") c.init.kind = InitKind::file;
    else note("init.kind", "unknown '" + kind + "'");
    if (i.contains("seed")) c.init.seed = i.at("seed").get<std::uint64_t>();
    c.init.height_bound = i.value("height_bound", Height{0});
    c.init.path = i.value("path", std::string());
    if (c.init.kind == InitKind::file && c.init.path.empty()) note("init.path", "required for kind=file");
  });
  guarded("scheduler", [&] {
    if (!j.contains("scheduler")) return;
    const Json& s = j.at("scheduler");
    check_keys(s, "scheduler.", {"kind", "seed", "fairness_bound"});
    c.scheduler.kind = parse_scheduler_kind(s.value("kind", std::string("round_robin")));
    if (s.contains("seed")) c.scheduler_seed = s.at("seed").get<std::uint64_t>();
    c.scheduler.fairness_bound = s.value("fairness_bound", std::size_t{0});
  });
  guarded("adversary", [&] {
    if (!j.contains("adversary")) return;
    const Json& a = j.at("adversary");
    check_keys(a, "adversary.", {"kind", "seed", "height_cap"});
    c.adversary.kind = parse_adversary_kind(a.value("kind", std::string("silent")));
    if (a.contains("seed")) c.adversary_seed = a.at("seed").get<std::uint64_t>();
    if (a.contains("height_cap")) c.height_cap = a.at("height_cap").get<Height>();
  });
  guarded("max_steps", [&] {
    c.max_steps = j.value("max_steps", c.max_steps);
    if (c.max_steps < 1) note("max_steps", "must be >= 1");
  });
  guarded("padding", [&] { c.padding = j.value("padding", c.padding); });
  guarded("zone", [&] {
    if (j.contains("zone")) c.zone = parse_zone(j.at("zone").get<std::string>());
  });
  guarded("output", [&] {
    if (!j.contains("output")) return;
    const Json& o = j.at("output");
    check_keys(o, "output.", {"trace", "zones", "metrics"});
    c.trace_out = o.value("trace", std::string());
    c.zones_out = o.value("zones", std::string());
    c.metrics_out = o.value("metrics", std::string());
  });

  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw Error(msg);
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error("config file '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

inline Topology load_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open graph file '" + path + "'");
  try {
    return parse_edge_list(in);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

/// Graph, root, and Byzantine set as configured; validates the Byzantine constraints.
inline Topology build_topology(const ExperimentConfig& c) {
  Topology base;
  if (c.graph_file) {
    base = load_graph_file(*c.graph_file);
  } else {
    GraphSpec spec = c.graph;
    spec.seed = c.graph_seed ? *c.graph_seed : derive_seed(c.seed, seed_tag::graph);
    spec.byzantine.clear();
    base = generate_graph(spec);
  }
  const std::size_t n = base.size();
  std::vector<std::string> errors;
  ProcessId root = c.root.value_or(base.root());
  if (root >= n) errors.push_back("root: " + std::to_string(root) + " out of range");
  std::vector<ProcessId> byz = c.byzantine.value_or(base.byzantine());
  if (c.random_byzantine_count) {
    if (c.byzantine) errors.push_back("byzantine: cannot combine explicit ids with random_byzantine");
    if (*c.random_byzantine_count > n - 1) errors.push_back("random_byzantine: more than n-1 Byzantines");
    if (errors.empty()) {
      std::vector<ProcessId> pool;
      for (ProcessId v = 0; v < n; ++v) {
        if (v != root) pool.push_back(v);
      }
      std::mt19937_64 rng(derive_seed(c.seed, seed_tag::byzantine));
      std::shuffle(pool.begin(), pool.end(), rng);
      pool.resize(*c.random_byzantine_count);
      std::sort(pool.begin(), pool.end());
      byz = pool;
    }
  }
  for (ProcessId b : byz) {
    if (b >= n) errors.push_back("byzantine: id " + std::to_string(b) + " out of range");
    if (b == root) errors.push_back("byzantine: the root cannot be byzantine");
  }
  if (byz.size() > n - 1) errors.push_back("byzantine: more than n-1 Byzantines");
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw Error(msg);
  }
  return Topology::from_edges(n, base.edges(), root, byz);
}

/// Parent uniform in N_v and nil, height uniform in [0, height_bound].
inline Configuration random_configuration(const Topology& topo, std::uint64_t seed, Height height_bound) {
  std::mt19937_64 rng(seed);
  Configuration c(topo.size());
  for (ProcessId v = 0; v < topo.size(); ++v) {
    const auto& nbrs = topo.neighbors(v);
    std::uniform_int_distribution<std::size_t> pick(0, nbrs.size());
    std::uniform_int_distribution<Height> height(0, height_bound);
    std::size_t i = pick(rng);
    if (i < nbrs.size()) c[v].parent = nbrs[i];
    c[v].height = height(rng);
  }
  return c;
}

inline Configuration build_initial(const ExperimentConfig& c, const Topology& topo) {
  switch (c.init.kind) {
    case InitKind::legitimate:
      return legitimate_configuration(topo);
    case InitKind::random: {
      Height bound = c.init.height_bound ? c.init.height_bound : 2 * static_cast<Height>(topo.size());
      return random_configuration(topo, init_seed(c), bound);
    }
    case InitKind::file: {
      std::ifstream in(c.init.path);
      if (!in) throw Error("cannot open initial configuration '" + c.init.path + "'");
      Json j;
      try {
        j = Json::parse(in);
      } catch (const Json::exception& e) {
        throw Error(c.init.path + ": " + e.what());
      }
      Configuration conf = configuration_from_json(j);
      check_shape(topo, conf);
      for (ProcessId v = 0; v < topo.size(); ++v) {
        const auto& p = conf[v].parent;
        if (p && topo.is_correct(v) && (*p >= topo.size() || !topo.adjacent(v, *p))) {
          throw Error(c.init.path + ": parent of correct process " + std::to_string(v) + " is not a neighbor");
        }
      }
      return conf;
    }
  }
  throw Error("unreachable init kind");
}

struct RunMetrics {
  std::size_t n = 0;
  std::size_t delta = 0;
  std::size_t steps = 0;
  bool truncated = false;
  StopReason stop_reason = StopReason::max_steps;
  std::size_t fairness_bound = 0;
  std::size_t padding = 0;
  Zone zone = Zone::SBstar;
  std::size_t contained_at = kNoIndex;  // strict containment (SB)
  std::size_t adversary_steps_after = 0;
  std::size_t first_stable = kNoIndex;  // in the reported zone
  std::size_t perturbation_count = 0;
  std::size_t max_changes = 0;
  std::size_t bound = 0;  // n * delta
  bool bound_applies = false;
  bool bound_respected = true;

  [[nodiscard]] bool contained() const { return contained_at != kNoIndex && !truncated; }
  [[nodiscard]] bool claim_violation() const { return !contained() || !bound_respected; }

  friend bool operator==(const RunMetrics&, const RunMetrics&) = default;
};

inline Json index_json(std::size_t i) { return i == kNoIndex ? Json(nullptr) : Json(i); }

inline std::size_t index_from_json(const Json& j) { return j.is_null() ? kNoIndex : j.get<std::size_t>(); }

inline Json to_json(const RunMetrics& m) {
  Json j;
  j["n"] = m.n;
  j["delta"] = m.delta;
  j["steps"] = m.steps;
  j["truncated"] = m.truncated;
  j["stop_reason"] = to_string(m.stop_reason);
  j["fairness_bound"] = m.fairness_bound;
  j["padding"] = m.padding;
  j["zone"] = to_string(m.zone);
  j["contained_at"] = index_json(m.contained_at);
  j["verdict"] = m.contained() ? "contained" : "FAIL";
  j["adversary_steps_after"] = m.adversary_steps_after;
  j["first_stable"] = index_json(m.first_stable);
  j["perturbation_count"] = m.perturbation_count;
  j["max_changes"] = m.max_changes;
  j["bound"] = m.bound;
  j["bound_applies"] = m.bound_applies;
  j["bound_respected"] = m.bound_respected;
  return j;
}

inline RunMetrics metrics_from_json(const Json& j) {
  RunMetrics m;
  m.n = j.at("n");
  m.delta = j.at("delta");
  m.steps = j.at("steps");
  m.truncated = j.at("truncated");
  m.stop_reason = parse_stop_reason(j.at("stop_reason"));
  m.fairness_bound = j.at("fairness_bound");
  m.padding = j.at("padding");
  m.zone = parse_zone(j.at("zone"));
  m.contained_at = index_from_json(j.at("contained_at"));
  m.adversary_steps_after = j.at("adversary_steps_after");
  m.first_stable = index_from_json(j.at("first_stable"));
  m.perturbation_count = j.at("perturbation_count");
  m.max_changes = j.at("max_changes");
  m.bound = j.at("bound");
  m.bound_applies = j.at("bound_applies");
  m.bound_respected = j.at("bound_respected");
  return m;
}

/// Everything in RunMetrics is a function of the trace and the zone.
inline RunMetrics compute_metrics(const Trace& trace, Zone zone) {
  const ZoneReport zones = compute_zones(trace.topo);
  RunMetrics m;
  m.n = trace.topo.size();
  m.delta = trace.topo.max_degree();
  m.steps = trace.length();
  m.truncated = trace.truncated;
  m.stop_reason = trace.stop_reason;
  m.fairness_bound = trace.fairness_bound;
  m.padding = trace.padding;
  m.zone = zone;
  StrictVerdict v = verify_td_strict(trace, zones);
  m.contained_at = v.contained_at;
  m.adversary_steps_after = v.adversary_steps_after;
  PerturbationReport rep = analyze_trace(trace, zones, zone);
  m.first_stable = rep.first_stable;
  m.perturbation_count = rep.perturbation_count;
  m.max_changes = rep.max_changes;
  m.bound = m.n * m.delta;
  m.bound_applies = zone == Zone::SBstar;
  m.bound_respected = !m.bound_applies || m.perturbation_count <= m.bound;
  return m;
}

inline Json zone_report_json(const Topology& topo, const ZoneReport& z) {
  Json j;
  j["n"] = topo.size();
  j["root"] = topo.root();
  j["byzantine"] = topo.byzantine();
  Json procs = Json::array();
  std::vector<ProcessId> sb, sbstar;
  for (ProcessId v = 0; v < topo.size(); ++v) {
    Json p;
    p["id"] = v;
    p["dist_root"] = z.dist_root[v];
    p["dist_byz"] = z.dist_byz[v] == kInfiniteDistance ? Json(nullptr) : Json(z.dist_byz[v]);
    p["in_SB"] = bool(z.in_sb[v]);
    p["in_SBstar"] = bool(z.in_sbstar[v]);
    procs.push_back(p);
    if (z.in_sb[v]) sb.push_back(v);
    if (z.in_sbstar[v]) sbstar.push_back(v);
  }
  j["processes"] = procs;
  j["SB"] = sb;
  j["SBstar"] = sbstar;
  return j;
}

struct ExperimentResult {
  Topology topo;
  ZoneReport zones;
  Trace trace;
  RunMetrics metrics;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
}

inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  ExperimentResult r;
  r.topo = build_topology(c);
  r.zones = compute_zones(r.topo);
  Configuration initial = build_initial(c, r.topo);
  SchedulerPolicy policy = c.scheduler;
  policy.seed = c.scheduler_seed ? *c.scheduler_seed : derive_seed(c.seed, seed_tag::scheduler);
  AdversaryStrategy adv = c.adversary;
  adv.seed = c.adversary_seed ? *c.adversary_seed : derive_seed(c.seed, seed_tag::adversary);
  adv.height_cap = c.height_cap ? *c.height_cap : default_height_cap(r.topo);
  RunOptions opts;
  opts.max_steps = c.max_steps;
  opts.padding = c.padding;
  r.trace = run(r.topo, initial, policy, adv, opts);
  r.metrics = compute_metrics(r.trace, c.zone);

  if (!c.trace_out.empty()) {
    std::ofstream out(c.trace_out, std::ios::binary);
    if (!out) throw Error("cannot write '" + c.trace_out + "'");
    write_trace(out, r.trace);
  }
  if (!c.zones_out.empty()) write_file(c.zones_out, zone_report_json(r.topo, r.zones).dump(2) + "\n");
  if (!c.metrics_out.empty()) write_file(c.metrics_out, to_json(r.metrics).dump(2) + "\n");
  return r;
}

struct CampaignResult {
  Json report;
  std::size_t failures = 0;
  std::size_t bound_violations = 0;
  std::size_t errors = 0;

  [[nodiscard]] bool ok() const { return failures == 0 && bound_violations == 0 && errors == 0; }
};

/// Config of run `i`: every seed shifted by i * stride.
inline ExperimentConfig campaign_run_config(const ExperimentConfig& base, std::size_t i, std::uint64_t stride) {
  ExperimentConfig c = base;
  const std::uint64_t shift = i * stride;
  c.seed = base.seed + shift;
  if (c.init.seed) c.init.seed = *c.init.seed + shift;
  if (c.scheduler_seed) c.scheduler_seed = *c.scheduler_seed + shift;
  if (c.adversary_seed) c.adversary_seed = *c.adversary_seed + shift;
  if (c.graph_seed) c.graph_seed = *c.graph_seed + shift;
  c.trace_out.clear();
  c.zones_out.clear();
  c.metrics_out.clear();
  return c;
}

/// Independent runs fanned out over `jobs` workers, merged by run index.
inline CampaignResult run_campaign(const ExperimentConfig& base, std::size_t num_runs, std::uint64_t stride,
                                   std::size_t jobs = 1, const std::string& trace_dir = {}) {
  if (num_runs < 1) throw Error("campaign: num_runs must be >= 1");
  jobs = std::max<std::size_t>(1, std::min(jobs, num_runs));
  struct Slot {
    std::optional<RunMetrics> metrics;
    std::string error;
  };
  std::vector<Slot> slots(num_runs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < num_runs; i = next++) {
      try {
        ExperimentConfig c = campaign_run_config(base, i, stride);
        if (!trace_dir.empty()) {
          c.trace_out = (std::filesystem::path(trace_dir) / ("run_" + std::to_string(i) + ".jsonl")).string();
        }
        slots[i].metrics = run_experiment(c).metrics;
      } catch (const std::exception& e) {
        slots[i].error = e.what();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(worker);
  }

  CampaignResult res;
  Json runs = Json::array();
  std::size_t counted = 0, max_t = 0, max_k = 0, sum_t = 0, sum_k = 0;
  for (std::size_t i = 0; i < num_runs; ++i) {
    Json r;
    r["run"] = i;
    if (!slots[i].metrics) {
      ++res.errors;
      r["error"] = slots[i].error;
      runs.push_back(r);
      continue;
    }
    const RunMetrics& m = *slots[i].metrics;
    r["metrics"] = to_json(m);
    runs.push_back(r);
    ++counted;
    if (!m.contained()) ++res.failures;
    if (!m.bound_respected) ++res.bound_violations;
    max_t = std::max(max_t, m.perturbation_count);
    max_k = std::max(max_k, m.max_changes);
    sum_t += m.perturbation_count;
    sum_k += m.max_changes;
  }
  Json agg;
  agg["runs"] = num_runs;
  agg["completed"] = counted;
  agg["errors"] = res.errors;
  agg["failures"] = res.failures;
  agg["bound_checks"] = base.zone == Zone::SBstar ? counted : 0;
  agg["bound_violations"] = res.bound_violations;
  agg["max_perturbations"] = max_t;
  agg["mean_perturbations"] = counted ? double(sum_t) / double(counted) : 0.0;
  agg["max_changes"] = max_k;
  agg["mean_changes"] = counted ? double(sum_k) / double(counted) : 0.0;
  agg["zone"] = to_string(base.zone);
  res.report["aggregate"] = agg;
  res.report["runs"] = runs;
  return res;
}

}  // namespace calfs

#endif  // CALFS_EXPERIMENT_HPP
