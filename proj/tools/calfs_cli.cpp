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

// calfs: simulate, check, and exhaustively verify the min+1 BFS tree
// protocol under Byzantine processes.
//
// Exit status: 0 ok, 1 claim violation, 2 usage or input error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "calfs/exhaustive.hpp"
#include "calfs/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kUsage = 2;

// Command-line overrides; anything left empty keeps the --config value.
struct Flags {
  std::string config;
  std::optional<std::string> graph_file, kind, init, init_file, scheduler, adversary, zone;
  std::optional<std::string> byzantine;
  std::optional<std::size_t> n, rows, cols, random_byzantine, fairness_bound, max_steps, padding;
  std::optional<double> p;
  std::optional<std::uint64_t> graph_seed, seed, init_seed, scheduler_seed, adversary_seed;
  std::optional<calfs::Height> height_bound, height_cap;
  std::optional<calfs::ProcessId> root;
  std::string trace_out, zones_out, metrics_out;
};

void add_graph_flags(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON experiment config");
  app->add_option("--graph", f.graph_file, "edge-list file");
  app->add_option("--kind", f.kind, "generator: path, ring, grid, star, complete, random_connected");
  app->add_option("--n", f.n, "number of processes");
  app->add_option("--rows", f.rows, "grid rows");
  app->add_option("--cols", f.cols, "grid columns");
  app->add_option("--p", f.p, "edge probability (random_connected)");
  app->add_option("--graph-seed", f.graph_seed, "generator seed");
  app->add_option("--root", f.root, "root id");
  app->add_option("--byzantine", f.byzantine, "comma-separated Byzantine ids");
  app->add_option("--random-byzantine", f.random_byzantine, "place this many Byzantines at random");
  app->add_option("--seed", f.seed, "master seed");
}

void add_run_flags(CLI::App* app, Flags& f) {
  add_graph_flags(app, f);
  app->add_option("--init", f.init, "legitimate, random, or file");
  app->add_option("--init-file", f.init_file, "initial configuration JSON (with --init file)");
  app->add_option("--init-seed", f.init_seed, "seed of the random initial configuration");
  app->add_option("--height-bound", f.height_bound, "max random initial height (default 2n)");
  app->add_option("--scheduler", f.scheduler, "round_robin, randomized, central_random, adversarial_greedy");
  app->add_option("--scheduler-seed", f.scheduler_seed, "daemon seed");
  app->add_option("--fairness-bound", f.fairness_bound, "bounded fairness k (default 2n)");
  app->add_option("--adversary", f.adversary, "silent, fake_root, oscillator, random_writer, min_under_cutter");
  app->add_option("--adversary-seed", f.adversary_seed, "adversary seed");
  app->add_option("--height-cap", f.height_cap, "largest Byzantine-published height (default 4n)");
  app->add_option("--max-steps", f.max_steps, "step budget");
  app->add_option("--padding", f.padding, "quiet adversary-active steps before stopping (default 10 n Delta)");
  app->add_option("--zone", f.zone, "zone for perturbation counting: SB or SBstar");
}

std::vector<calfs::ProcessId> parse_id_list(const std::string& s) {
  std::vector<calfs::ProcessId> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      unsigned long v = std::stoul(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<calfs::ProcessId>(v));
    } catch (const std::exception&) {
      throw calfs::Error("--byzantine: invalid id '" + item + "'");
    }
  }
  return out;
}

calfs::ExperimentConfig build_config(const Flags& f) {
  calfs::ExperimentConfig c = f.config.empty() ? calfs::ExperimentConfig{} : calfs::load_config(f.config);
  if (f.graph_file) c.graph_file = *f.graph_file;
  if (f.kind) {
    c.graph_file.reset();
    c.graph.kind = calfs::parse_graph_kind(*f.kind);
  }
  if (f.n) c.graph.n = *f.n;
  if (f.rows) c.graph.rows = *f.rows;
  if (f.cols) c.graph.cols = *f.cols;
  if (f.p) c.graph.edge_probability = *f.p;
  if (f.graph_seed) c.graph_seed = *f.graph_seed;
  if (f.root) c.root = *f.root;
  if (f.byzantine) c.byzantine = parse_id_list(*f.byzantine);
  if (f.random_byzantine) c.random_byzantine_count = *f.random_byzantine;
  if (f.seed) c.seed = *f.seed;
  if (f.init) {
    if (*f.init == "legitimate") c.init.kind = calfs::InitKind::legitimate;
    else if (*f.init == "random") c.init.kind = calfs::InitKind::random;
    else if (*f.init == "file") c.init.kind = calfs::InitKind::file;
    else throw calfs::Error("--init: unknown kind '" + *f.init + "'");
  }
  if (f.init_file) c.init.path = *f.init_file;
  if (c.init.kind == calfs::InitKind::file && c.init.path.empty()) {
    throw calfs::Error("--init file requires --init-file");
  }
  if (f.init_seed) c.init.seed = *f.init_seed;
  if (f.height_bound) c.init.height_bound = *f.height_bound;
  if (f.scheduler) c.scheduler.kind = calfs::parse_scheduler_kind(*f.scheduler);
  if (f.scheduler_seed) c.scheduler_seed = *f.scheduler_seed;
  if (f.fairness_bound) c.scheduler.fairness_bound = *f.fairness_bound;
  if (f.adversary) c.adversary.kind = calfs::parse_adversary_kind(*f.adversary);
  if (f.adversary_seed) c.adversary_seed = *f.adversary_seed;
  if (f.height_cap) c.height_cap = *f.height_cap;
  if (f.max_steps) c.max_steps = *f.max_steps;
  if (f.padding) c.padding = *f.padding;
  if (f.zone) c.zone = calfs::parse_zone(*f.zone);
  if (!f.trace_out.empty()) c.trace_out = f.trace_out;
  if (!f.zones_out.empty()) c.zones_out = f.zones_out;
  if (!f.metrics_out.empty()) c.metrics_out = f.metrics_out;
  if (c.max_steps < 1) throw calfs::Error("max_steps must be >= 1");
  return c;
}

void emit(const calfs::Json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    calfs::write_file(path, j.dump(2) + "\n");
  }
}

int cmd_run(const Flags& f) {
  calfs::ExperimentConfig c = build_config(f);
  calfs::ExperimentResult r = calfs::run_experiment(c);
  if (c.metrics_out.empty()) std::cout << calfs::to_json(r.metrics).dump(2) << '\n';
  return r.metrics.claim_violation() ? kViolation : kOk;
}

int cmd_campaign(const Flags& f, std::size_t runs, std::uint64_t stride, std::size_t jobs, const std::string& report,
                 const std::string& trace_dir) {
  calfs::ExperimentConfig c = build_config(f);
  if (!trace_dir.empty()) std::filesystem::create_directories(trace_dir);
  calfs::CampaignResult res = calfs::run_campaign(c, runs, stride, jobs, trace_dir);
  emit(res.report, report);
  const auto& agg = res.report["aggregate"];
  std::cerr << "runs " << agg["runs"] << ", failures " << agg["failures"] << ", bound violations "
            << agg["bound_violations"] << ", errors " << agg["errors"] << '\n';
  if (res.failures || res.bound_violations) return kViolation;
  return res.errors ? kUsage : kOk;
}

int cmd_zones(const Flags& f, const std::string& out) {
  calfs::ExperimentConfig c = build_config(f);
  calfs::Topology topo = calfs::build_topology(c);
  emit(calfs::zone_report_json(topo, calfs::compute_zones(topo)), out);
  return kOk;
}

int cmd_exhaustive(std::size_t n_max, const std::string& families, std::uint64_t budget, const std::string& out) {
  std::vector<calfs::GraphKind> kinds;
  std::stringstream ss(families);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) kinds.push_back(calfs::parse_graph_kind(item));
  }
  if (kinds.empty()) throw calfs::Error("--families: empty list");
  calfs::ExhaustiveOptions opts;
  opts.state_budget = budget;
  calfs::Json instances = calfs::Json::array();
  bool ok = true;
  for (const auto& inst : calfs::exhaustive_instances(n_max, kinds)) {
    calfs::InstanceResult r = calfs::exhaustive_instance(inst.topo, inst.family, opts);
    ok = ok && r.ok();
    calfs::Json j;
    j["family"] = r.family;
    j["n"] = r.n;
    j["byzantine"] = r.byzantine ? calfs::Json(*r.byzantine) : calfs::Json(nullptr);
    j["universe"] = r.universe;
    j["initial_states"] = r.initial_states;
    j["explored_states"] = r.explored_states;
    j["edges"] = r.edges;
    j["budget_exhausted"] = r.budget_exhausted;
    j["violation"] = r.violation;
    j["witness"] = r.witness;
    instances.push_back(j);
    std::cerr << r.family << " n=" << r.n << " B=" << (r.byzantine ? std::to_string(*r.byzantine) : "-") << ": "
              << (r.ok() ? "ok" : (r.violation ? "VIOLATION" : "BUDGET EXHAUSTED")) << '\n';
  }
  calfs::Json rep;
  rep["n_max"] = n_max;
  rep["ok"] = ok;
  rep["instances"] = instances;
  emit(rep, out);
  return ok ? kOk : kViolation;
}

int cmd_replay(const std::string& trace_path, const std::string& zone, const std::string& metrics_out,
               const std::string& expect) {
  std::ifstream in(trace_path);
  if (!in) throw calfs::Error("cannot open trace '" + trace_path + "'");
  calfs::Trace t;
  try {
    t = calfs::read_trace(in);
  } catch (const calfs::Error& e) {
    throw calfs::Error(trace_path + ": " + e.what());
  }
  calfs::RunMetrics m = calfs::compute_metrics(t, calfs::parse_zone(zone));
  emit(calfs::to_json(m), metrics_out);
  if (!expect.empty()) {
    std::ifstream ein(expect);
    if (!ein) throw calfs::Error("cannot open metrics '" + expect + "'");
    calfs::RunMetrics want = calfs::metrics_from_json(calfs::Json::parse(ein));
    if (!(want == m)) {
      std::cerr << "replay: recomputed metrics differ from " << expect << '\n';
      return kViolation;
    }
  }
  return m.claim_violation() ? kViolation : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-stabilizing BFS tree simulator and checker under Byzantine faults"};
  app.require_subcommand(1);

  Flags run_flags;
  auto* run = app.add_subcommand("run", "run one simulation");
  add_run_flags(run, run_flags);
  run->add_option("--trace", run_flags.trace_out, "trace output (JSON lines)");
  run->add_option("--zones-out", run_flags.zones_out, "zone report output");
  run->add_option("--metrics", run_flags.metrics_out, "metrics output (default stdout)");

  Flags camp_flags;
  std::size_t runs = 100, jobs = std::max(1u, std::thread::hardware_concurrency());
  std::uint64_t stride = 1;
  std::string report, trace_dir;
  auto* camp = app.add_subcommand("campaign", "run many seeds and aggregate");
  add_run_flags(camp, camp_flags);
  camp->add_option("--runs", runs, "number of runs")->check(CLI::PositiveNumber);
  camp->add_option("--stride", stride, "seed increment between runs");
  camp->add_option("--jobs", jobs, "parallel workers")->check(CLI::PositiveNumber);
  camp->add_option("--report", report, "aggregate report output (default stdout)");
  camp->add_option("--trace-dir", trace_dir, "write each run's trace here");

  Flags zone_flags;
  std::string zones_out;
  auto* zones = app.add_subcommand("zones", "print the containment zones of a graph");
  add_graph_flags(zones, zone_flags);
  zones->add_option("--out", zones_out, "output file (default stdout)");

  std::size_t n_max = 4;
  std::string families = "path,ring,star,complete", ex_out;
  std::uint64_t budget = calfs::ExhaustiveOptions{}.state_budget;
  auto* ex = app.add_subcommand("exhaustive", "explore every fair execution of small instances");
  ex->add_option("--n-max", n_max, "largest instance size (<= 5)");
  ex->add_option("--families", families, "comma-separated: path, ring, star, complete");
  ex->add_option("--budget", budget, "largest state universe per instance");
  ex->add_option("--out", ex_out, "report output (default stdout)");

  std::string trace_path, replay_zone = "SBstar", replay_out, expect;
  auto* rep = app.add_subcommand("replay", "validate a trace and recompute its metrics");
  rep->add_option("trace", trace_path, "trace file")->required();
  rep->add_option("--zone", replay_zone, "SB or SBstar");
  rep->add_option("--metrics", replay_out, "metrics output (default stdout)");
  rep->add_option("--expect", expect, "compare against a metrics file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*camp) return cmd_campaign(camp_flags, runs, stride, jobs, report, trace_dir);
    if (*zones) return cmd_zones(zone_flags, zones_out);
    if (*ex) return cmd_exhaustive(n_max, families, budget, ex_out);
    if (*rep) return cmd_replay(trace_path, replay_zone, replay_out, expect);
  } catch (const calfs::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const calfs::Json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
