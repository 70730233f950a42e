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

// Acceptance suite: one PASS/FAIL line per criterion. Exits 1 if any fails.
//
// Usage: calfs_acceptance [--cli PATH] [--only N[,N...]]

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "calfs/exhaustive.hpp"
#include "calfs/experiment.hpp"
#include "support.hpp"

namespace {

using namespace calfs;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Runs fn(i) for i in [0, count) on all cores.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
}

// Keeps the first few failure descriptions.
class Failures {
 public:
  void add(const std::string& what) {
    std::lock_guard lock(mu_);
    ++count_;
    if (examples_.size() < 3) examples_.push_back(what);
  }
  [[nodiscard]] std::size_t count() const { return count_; }
  [[nodiscard]] std::string summary() const {
    std::string s;
    for (const auto& e : examples_) s += "\n      " + e;
    return s;
  }

 private:
  std::mutex mu_;
  std::size_t count_ = 0;
  std::vector<std::string> examples_;
};

Topology random_graph(std::size_t n, std::uint64_t seed) {
  const double p = std::min(1.0, 1.5 * std::log(double(n)) / double(n) + 0.05);
  return generate_graph({GraphKind::random_connected, n, 0, 0, p, seed});
}

// 1. Byzantine-free convergence to exact BFS heights within 20 n^2 steps.
Outcome criterion_1() {
  constexpr std::size_t kGraphs = 200, kInits = 5;
  const std::array<SchedulerKind, 3> schedulers = {SchedulerKind::round_robin, SchedulerKind::randomized,
                                                   SchedulerKind::central_random};
  Failures fails;
  std::size_t runs = 0, worst_steps = 0;
  double worst_ratio = 0.0;
  std::mutex mu;
  parallel_for(kGraphs, [&](std::size_t g) {
    const std::size_t n = 2 + derive_seed(g, 100) % 49;  // 2..50
    Topology t = random_graph(n, derive_seed(g, 101));
    auto oracle = testing::floyd_warshall(t);
    for (std::size_t i = 0; i < kInits; ++i) {
      Configuration init = random_configuration(t, derive_seed(g * 16 + i, 102), 2 * n);
      for (SchedulerKind k : schedulers) {
        RunOptions o;
        o.max_steps = 20 * n * n;
        Trace tr = run(t, init, {k, derive_seed(g * 16 + i, 103), 0}, {}, o);
        const Configuration& f = tr.final_config();
        bool ok = !tr.truncated && enabled_set(t, f).correct.empty();
        for (ProcessId v = 0; v < n && ok; ++v) {
          ok = f[v].height == oracle[0][v];
          if (v != 0) ok = ok && f[v].parent && f[*f[v].parent].height + 1 == f[v].height;
        }
        if (!ok) {
          fails.add("graph " + std::to_string(g) + " n=" + std::to_string(n) + " init " + std::to_string(i) + " " +
                    to_string(k) + (tr.truncated ? " truncated" : " wrong heights"));
        }
        std::lock_guard lock(mu);
        ++runs;
        worst_steps = std::max(worst_steps, tr.length());
        worst_ratio = std::max(worst_ratio, double(tr.length()) / double(n * n));
      }
    }
  });
  std::ostringstream d;
  d << runs << " runs, " << fails.count() << " failures, max steps " << worst_steps << ", max steps/n^2 "
    << worst_ratio << fails.summary();
  return {fails.count() == 0, d.str()};
}

// Criteria 2-4 share one campaign.
struct ByzCampaign {
  std::size_t runs = 0;
  Failures strict, bound, oblivion;
  std::size_t max_t = 0, max_k = 0;
  double max_t_over_bound = 0.0;
};

ByzCampaign& byz_campaign() {
  static ByzCampaign* c = [] {
    auto* out = new ByzCampaign;
    constexpr std::size_t kGraphs = 100;
    std::mutex mu;
    parallel_for(kGraphs, [&](std::size_t g) {
      const std::size_t n = 5 + derive_seed(g, 200) % 26;  // 5..30
      Topology base = random_graph(n, derive_seed(g, 201));
      auto oracle = testing::floyd_warshall(base);
      const std::size_t delta = base.max_degree();
      const std::size_t bound = n * delta;
      for (std::size_t f : {std::size_t{1}, std::size_t{2}, std::max<std::size_t>(1, n / 4)}) {
        std::vector<ProcessId> pool;
        for (ProcessId v = 1; v < n; ++v) pool.push_back(v);
        std::mt19937_64 rng(derive_seed(g * 8 + f, 202));
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(f);
        Topology t = base.with_byzantine(pool);
        ZoneReport z = compute_zones(t);
        for (std::size_t ai = 0; ai < kAllAdversaries.size(); ++ai) {
          AdversaryKind a = kAllAdversaries[ai];
          // The greedy daemon always, plus one of the others in rotation.
          for (SchedulerKind k : {SchedulerKind::adversarial_greedy, kAllSchedulers[(g + ai) % 3]}) {
            const std::uint64_t seed = derive_seed(g * 1000 + f * 10 + ai, static_cast<std::uint64_t>(k));
            Configuration init = random_configuration(t, seed, 2 * n);
            Trace tr = run(t, init, {k, seed, 0}, {a, seed, default_height_cap(t)});
            std::string label = "graph " + std::to_string(g) + " n=" + std::to_string(n) + " |B|=" +
                                std::to_string(f) + " " + to_string(a) + " " + to_string(k);

            StrictVerdict v = verify_td_strict(tr, z);
            const bool quiet_enough =
                tr.stop_reason == StopReason::converged || v.adversary_steps_after >= 10 * n * delta;
            if (!v.ok() || !quiet_enough) {
              out->strict.add(label + (v.truncated ? " truncated" : "") +
                              (v.contained_at == kNoIndex ? " no containment" : "") +
                              (quiet_enough ? "" : " short adversary suffix"));
            }
            PerturbationReport star = analyze_trace(tr, z, Zone::SBstar);
            if (star.perturbation_count > bound) {
              out->bound.add(label + " t=" + std::to_string(star.perturbation_count) + " > " + std::to_string(bound));
            }
            if (v.contained_at != kNoIndex) {
              for (std::size_t idx : {v.contained_at, tr.configs.size() - 1}) {
                const Configuration& c = tr.configs[idx];
                for (ProcessId p = 0; p < n; ++p) {
                  if (t.is_byzantine(p)) continue;
                  std::uint64_t db = testing::INF;
                  for (ProcessId b : pool) db = std::min(db, oracle[p][b]);
                  if (oracle[p][0] >= db) continue;
                  bool ok = c[p].height == oracle[p][0];
                  if (p == 0) {
                    ok = ok && !c[p].parent;
                  } else {
                    ok = ok && c[p].parent && t.adjacent(p, *c[p].parent) &&
                         c[*c[p].parent].height + 1 == oracle[p][0];
                  }
                  if (!ok) {
                    out->oblivion.add(label + " process " + std::to_string(p) + " at config " + std::to_string(idx));
                    break;
                  }
                }
              }
            }
            std::lock_guard lock(mu);
            ++out->runs;
            out->max_t = std::max(out->max_t, star.perturbation_count);
            out->max_k = std::max(out->max_k, star.max_changes);
            out->max_t_over_bound = std::max(out->max_t_over_bound, double(star.perturbation_count) / double(bound));
          }
        }
      }
    });
    return out;
  }();
  return *c;
}

Outcome criterion_2() {
  auto& c = byz_campaign();
  std::ostringstream d;
  d << c.runs << " runs, " << c.strict.count() << " failures" << c.strict.summary();
  return {c.strict.count() == 0, d.str()};
}

Outcome criterion_3() {
  auto& c = byz_campaign();
  std::ostringstream d;
  d << c.runs << " runs, " << c.bound.count() << " violations, max t " << c.max_t << ", max t/(n Delta) "
    << c.max_t_over_bound << ", max k " << c.max_k << c.bound.summary();
  return {c.bound.count() == 0, d.str()};
}

Outcome criterion_4() {
  auto& c = byz_campaign();
  std::ostringstream d;
  d << c.runs << " runs, " << c.oblivion.count() << " mismatches" << c.oblivion.summary();
  return {c.oblivion.count() == 0, d.str()};
}

// 5. Path r-u-m-w-b: the equidistant m keeps changing after an SB*-stable configuration.
Outcome criterion_5() {
  using testing::NIL;
  using testing::st;
  const Topology t = testing::path(5, {4});
  const ZoneReport z = compute_zones(t);
  constexpr ProcessId m = 2;
  Outcome out;
  if (!z.in_sb[m] || z.in_sbstar[m]) return {false, "m is not in SB \\ SB*"};
  const Configuration init = testing::conf({st(NIL, 0), st(0, 1), st(3, 1), st(4, 0), st(NIL, 0)});
  Trace tr = run(t, init, {SchedulerKind::adversarial_greedy, 0, 0}, {AdversaryKind::min_under_cutter, 0, 20});

  std::size_t first = kNoIndex;
  for (std::size_t i = 0; i < tr.configs.size(); ++i) {
    if (is_zone_stable(t, z, tr.configs[i], Zone::SBstar)) {
      first = i;
      break;
    }
  }
  std::size_t changes = 0;
  if (first != kNoIndex) {
    for (std::size_t i = first; i < tr.steps.size(); ++i) {
      for (const Action& a : tr.steps[i].actions) {
        if (a.process == m) changes += a.modified_variables();
      }
    }
  }
  PerturbationReport star = analyze_trace(tr, z, Zone::SBstar);
  const std::size_t bound = t.size() * t.max_degree();
  StrictVerdict v = verify_td_strict(tr, z);
  std::ostringstream d;
  d << "first SB*-stable config " << (first == kNoIndex ? std::string("none") : std::to_string(first))
    << ", m modified " << changes << " S-variables after it, t(SB*) = " << star.perturbation_count << " <= "
    << bound << ", SB containment " << (v.ok() ? "yes" : "no");
  out.pass = first != kNoIndex && changes >= 2 && star.perturbation_count <= bound && v.ok();
  out.detail = d.str();
  return out;
}

// 6. Exhaustive fair-branch search, n <= 5, |B| <= 1.
Outcome criterion_6() {
  auto t0 = Clock::now();
  ExhaustiveReport rep =
      exhaustive_check(5, {GraphKind::path, GraphKind::ring, GraphKind::star, GraphKind::complete});
  const double secs = seconds_since(t0);
  std::uint64_t explored = 0, initial = 0;
  std::string bad;
  for (const auto& i : rep.instances) {
    explored += i.explored_states;
    initial += i.initial_states;
    if (!i.ok() && bad.size() < 400) {
      bad += "\n      " + i.family + " n=" + std::to_string(i.n) + " B=" +
             (i.byzantine ? std::to_string(*i.byzantine) : "-") + ": " + i.witness;
    }
  }
  std::ostringstream d;
  d << rep.instances.size() << " instances, " << initial << " initial configurations, " << explored
    << " non-legitimate states explored, " << rep.violations() << " violations, " << rep.exhausted()
    << " budget exhaustions, " << static_cast<int>(secs) << " s" << bad;
  return {rep.ok() && secs <= 600.0, d.str()};
}

// 7. Zones against all-pairs shortest paths; check_spec against brute-force path enumeration.
Outcome criterion_7() {
  std::vector<Topology> graphs;
  for (std::size_t n = 1; n <= 8; ++n) {
    graphs.push_back(generate_graph({GraphKind::path, n}));
    graphs.push_back(generate_graph({GraphKind::star, n}));
    graphs.push_back(generate_graph({GraphKind::complete, n}));
    if (n >= 3) graphs.push_back(generate_graph({GraphKind::ring, n}));
    for (std::size_t cols = 1; cols <= n; ++cols) {
      if (n % cols == 0) graphs.push_back(generate_graph({GraphKind::grid, 0, n / cols, cols}));
    }
    for (std::uint64_t seed = 0; seed < 8 && n > 1; ++seed) {
      graphs.push_back(generate_graph({GraphKind::random_connected, n, 0, 0, seed < 4 ? 0.3 : 0.6, seed}));
    }
  }
  std::size_t zone_cases = 0, zone_bad = 0;
  for (const Topology& g : graphs) {
    const std::size_t n = g.size();
    auto d = testing::floyd_warshall(g);
    for (ProcessId root = 0; root < n; ++root) {
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        if (mask >> root & 1) continue;
        std::vector<ProcessId> byz;
        for (ProcessId v = 0; v < n; ++v)
          if (mask >> v & 1) byz.push_back(v);
        Topology t = Topology::from_edges(n, g.edges(), root, byz);
        ZoneReport z = compute_zones(t);
        ++zone_cases;
        for (ProcessId v = 0; v < n; ++v) {
          std::uint64_t db = testing::INF;
          for (ProcessId b : byz) db = std::min(db, d[v][b]);
          const bool ok = z.dist_root[v] == d[v][root] && z.in_sb[v] == (db <= d[v][root]) &&
                          z.in_sbstar[v] == (db < d[v][root]) &&
                          (byz.empty() ? z.dist_byz[v] == kInfiniteDistance : z.dist_byz[v] == db);
          if (!ok) {
            ++zone_bad;
            break;
          }
        }
      }
    }
  }

  std::atomic<std::size_t> spec_cases{0}, spec_bad{0};
  std::vector<std::pair<std::size_t, std::vector<Edge>>> small;
  for (std::size_t n = 1; n <= 4; ++n)
    for (auto& e : testing::connected_graphs(n)) small.emplace_back(n, e);
  parallel_for(small.size(), [&](std::size_t i) {
    const auto& [n, edges] = small[i];
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); mask += 2) {  // root 0 never Byzantine
      std::vector<ProcessId> byz;
      for (ProcessId v = 0; v < n; ++v)
        if (mask >> v & 1) byz.push_back(v);
      Topology t = Topology::from_edges(n, edges, 0, byz);
      std::size_t cases = 0, bad = 0;
      testing::for_each_configuration(t, 4, [&](const Configuration& c) {
        auto all = check_spec_all(t, c);
        for (ProcessId v = 0; v < n; ++v) {
          if (t.is_byzantine(v)) continue;
          ++cases;
          const bool want = testing::brute_spec(t, c, v);
          if (check_spec(t, c, v) != want || all[v] != want) ++bad;
        }
      });
      spec_cases += cases;
      spec_bad += bad;
    }
  });
  std::ostringstream d;
  d << zone_cases << " (graph, root, B) zone cases over " << graphs.size() << " graphs, " << zone_bad
    << " mismatches; " << spec_cases << " spec evaluations, " << spec_bad << " mismatches";
  return {zone_bad == 0 && spec_bad == 0, d.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 8. Byte-identical artifacts on repetition.
Outcome criterion_8(const std::string& cli) {
  const fs::path dir = fs::temp_directory_path() / ("calfs_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::size_t compared = 0, differing = 0;
  std::string notes;

  for (std::size_t i = 0; i < kAllAdversaries.size() * kAllSchedulers.size(); ++i) {
    ExperimentConfig c;
    c.graph.kind = GraphKind::random_connected;
    c.graph.n = 16;
    c.graph.edge_probability = 0.25;
    c.random_byzantine_count = 1 + i % 3;
    c.seed = 40 + i;
    c.adversary.kind = kAllAdversaries[i % kAllAdversaries.size()];
    c.scheduler.kind = kAllSchedulers[i / kAllAdversaries.size()];
    std::string first[3];
    for (int rep = 0; rep < 2; ++rep) {
      c.trace_out = (dir / ("t" + std::to_string(rep) + ".jsonl")).string();
      c.zones_out = (dir / ("z" + std::to_string(rep) + ".json")).string();
      c.metrics_out = (dir / ("m" + std::to_string(rep) + ".json")).string();
      run_experiment(c);
      std::string now[3] = {slurp(c.trace_out), slurp(c.zones_out), slurp(c.metrics_out)};
      for (int k = 0; k < 3 && rep == 1; ++k) {
        ++compared;
        if (now[k] != first[k]) ++differing;
      }
      for (int k = 0; k < 3; ++k) first[k] = now[k];
    }
  }

  ExperimentConfig base;
  base.graph.kind = GraphKind::random_connected;
  base.graph.n = 12;
  base.graph.edge_probability = 0.3;
  base.random_byzantine_count = 2;
  base.adversary.kind = AdversaryKind::random_writer;
  base.scheduler.kind = SchedulerKind::randomized;
  const std::string a = run_campaign(base, 40, 1, 1).report.dump(2);
  const std::string b = run_campaign(base, 40, 1, 4).report.dump(2);
  ++compared;
  if (a != b) ++differing;

  if (!cli.empty()) {
    std::string reports[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = dir / ("campaign" + std::to_string(rep) + ".json");
      const fs::path traces = dir / ("traces" + std::to_string(rep));
      std::string cmd = "\"" + cli + "\" campaign --kind random_connected --n 10 --p 0.35 --random-byzantine 1 " +
                        "--adversary min_under_cutter --scheduler adversarial_greedy --runs 12 --seed 7 " +
                        "--jobs " + std::to_string(rep + 1) + " --report \"" + out.string() + "\" --trace-dir \"" +
                        traces.string() + "\" 2>/dev/null";
      const int rc = std::system(cmd.c_str());
      if (rc != 0) notes += " (cli exit status " + std::to_string(rc) + ")";
      reports[rep] = slurp(out);
      for (int r = 0; r < 12 && rep == 1; ++r) {
        const std::string name = "run_" + std::to_string(r) + ".jsonl";
        ++compared;
        if (slurp(dir / "traces0" / name) != slurp(traces / name) || slurp(traces / name).empty()) ++differing;
      }
    }
    ++compared;
    if (reports[0] != reports[1] || reports[0].empty()) ++differing;
  }
  fs::remove_all(dir);
  std::ostringstream d;
  d << compared << " artifact pairs compared, " << differing << " differ" << notes;
  return {differing == 0 && notes.empty(), d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc) {
      cli = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
    } else {
      std::cerr << "usage: calfs_acceptance [--cli PATH] [--only N[,N...]]\n";
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"Byzantine-free convergence to BFS heights within 20 n^2 steps", criterion_1},
      {"strict containment outside SB with a quiet adversary suffix of 10 n Delta steps", criterion_2},
      {"perturbations t <= n Delta for zone SB*", criterion_3},
      {"processes closer to the root than to any Byzantine hold BFS heights", criterion_4},
      {"equidistant process on r-u-m-w-b changes twice after an SB*-stable configuration", criterion_5},
      {"exhaustive fair-branch search, n <= 5, |B| <= 1", criterion_6},
      {"oracle cross-validation of zones and spec", criterion_7},
      {"byte-identical traces and reports on repetition", [&] { return criterion_8(cli); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %d: %s  %s [%.1f s]\n    %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                seconds_since(t0), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, only.empty() ? criteria.size() : only.size());
  return failed ? 1 : 0;
}
