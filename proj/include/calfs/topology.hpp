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

#ifndef CALFS_TOPOLOGY_HPP
#define CALFS_TOPOLOGY_HPP

#include <algorithm>
#include <cstdint>
#include <deque>
#include <istream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "calfs/types.hpp"

namespace calfs {

using Edge = std::pair<ProcessId, ProcessId>;

/**
 * Static communication graph with a designated root and Byzantine set.
 *
 * Neighbor lists are kept sorted by id. That order is also the circular
 * order used by the protocol to break ties between minimum-height
 * neighbors. Instances are immutable after construction and always valid:
 * undirected, connected, simple, and with a correct root.
 */
class Topology {
 public:
  Topology() = default;

  static Topology from_edges(std::size_t n, const std::vector<Edge>& edges, ProcessId root,
                             std::vector<ProcessId> byzantine = {}) {
    if (n == 0) throw Error("topology: graph must have at least one process");
    if (root >= n) throw Error("topology: root " + std::to_string(root) + " out of range");
    Topology t;
    t.adjacency_.assign(n, {});
    for (const auto& [u, v] : edges) {
      if (u >= n || v >= n) {
        throw Error("topology: edge (" + std::to_string(u) + "," + std::to_string(v) +
                    ") references a process out of range");
      }
      if (u == v) throw Error("topology: self-loop on " + std::to_string(u));
      t.adjacency_[u].push_back(v);
      t.adjacency_[v].push_back(u);
    }
    for (auto& nbrs : t.adjacency_) {
      std::sort(nbrs.begin(), nbrs.end());
      if (std::adjacent_find(nbrs.begin(), nbrs.end()) != nbrs.end()) {
        throw Error("topology: duplicate edge");
      }
    }
    t.root_ = root;
    t.byzantine_flag_.assign(n, false);
    for (ProcessId b : byzantine) {
      if (b >= n) throw Error("topology: byzantine id " + std::to_string(b) + " out of range");
      if (b == root) throw Error("topology: the root cannot be byzantine");
      if (t.byzantine_flag_[b]) throw Error("topology: duplicate byzantine id " + std::to_string(b));
      t.byzantine_flag_[b] = true;
    }
    std::sort(byzantine.begin(), byzantine.end());
    t.byzantine_ = std::move(byzantine);
    if (!t.connected()) throw Error("topology: graph is not connected");
    return t;
  }

  /// Same graph and root, different Byzantine set.
  [[nodiscard]] Topology with_byzantine(std::vector<ProcessId> byzantine) const {
    return from_edges(size(), edges(), root_, std::move(byzantine));
  }

  [[nodiscard]] Topology with_root(ProcessId root) const {
    return from_edges(size(), edges(), root, byzantine_);
  }

  [[nodiscard]] std::size_t size() const { return adjacency_.size(); }
  [[nodiscard]] ProcessId root() const { return root_; }
  [[nodiscard]] const std::vector<ProcessId>& byzantine() const { return byzantine_; }
  [[nodiscard]] bool is_byzantine(ProcessId v) const { return byzantine_flag_[v]; }
  [[nodiscard]] bool is_correct(ProcessId v) const { return !byzantine_flag_[v]; }
  [[nodiscard]] const std::vector<ProcessId>& neighbors(ProcessId v) const { return adjacency_[v]; }

  [[nodiscard]] bool adjacent(ProcessId u, ProcessId v) const {
    const auto& nbrs = adjacency_[u];
    return std::binary_search(nbrs.begin(), nbrs.end(), v);
  }

  /// Maximum degree.
  [[nodiscard]] std::size_t max_degree() const {
    std::size_t d = 0;
    for (const auto& nbrs : adjacency_) d = std::max(d, nbrs.size());
    return d;
  }

  /// Edges with u < v, in lexicographic order.
  [[nodiscard]] std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (ProcessId u = 0; u < size(); ++u) {
      for (ProcessId v : adjacency_[u]) {
        if (u < v) out.emplace_back(u, v);
      }
    }
    return out;
  }

  friend bool operator==(const Topology&, const Topology&) = default;

 private:
  bool connected() const {
    std::vector<bool> seen(size(), false);
    std::vector<ProcessId> stack{0};
    seen[0] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
      ProcessId u = stack.back();
      stack.pop_back();
      for (ProcessId v : adjacency_[u]) {
        if (!seen[v]) {
          seen[v] = true;
          ++count;
          stack.push_back(v);
        }
      }
    }
    return count == size();
  }

  std::vector<std::vector<ProcessId>> adjacency_;
  ProcessId root_ = 0;
  std::vector<ProcessId> byzantine_;
  std::vector<bool> byzantine_flag_;
};

/// Multi-source BFS: hop distance from every process to its nearest source.
inline std::vector<Distance> bfs_distances(const Topology& topo, const std::vector<ProcessId>& sources) {
  if (sources.empty()) throw Error("bfs_distances: no sources");
  std::vector<Distance> dist(topo.size(), kInfiniteDistance);
  std::deque<ProcessId> queue;
  for (ProcessId s : sources) {
    if (s >= topo.size()) throw Error("bfs_distances: invalid source id " + std::to_string(s));
    if (dist[s] != 0) {
      dist[s] = 0;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    ProcessId u = queue.front();
    queue.pop_front();
    for (ProcessId v : topo.neighbors(u)) {
      if (dist[v] == kInfiniteDistance) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

/// Per-process distances and containment-zone membership.
struct ZoneReport {
  std::vector<Distance> dist_root;
  std::vector<Distance> dist_byz;  // kInfiniteDistance when there are no Byzantines
  std::vector<bool> in_sb;         // dist_byz <= dist_root
  std::vector<bool> in_sbstar;     // dist_byz <  dist_root
};

enum class Zone { SB, SBstar };

inline const char* to_string(Zone z) { return z == Zone::SB ? "SB" : "SBstar"; }

inline Zone parse_zone(const std::string& s) {
  if (s == "SB" || s == "sb") return Zone::SB;
  if (s == "SBstar" || s == "sbstar" || s == "SB*") return Zone::SBstar;
  throw Error("unknown zone '" + s + "' (expected SB or SBstar)");
}

inline ZoneReport compute_zones(const Topology& topo) {
  ZoneReport z;
  z.dist_root = bfs_distances(topo, {topo.root()});
  if (topo.byzantine().empty()) {
    z.dist_byz.assign(topo.size(), kInfiniteDistance);
  } else {
    z.dist_byz = bfs_distances(topo, topo.byzantine());
  }
  z.in_sb.resize(topo.size());
  z.in_sbstar.resize(topo.size());
  for (std::size_t v = 0; v < topo.size(); ++v) {
    z.in_sb[v] = z.dist_byz[v] <= z.dist_root[v];
    z.in_sbstar[v] = z.dist_byz[v] < z.dist_root[v];
  }
  return z;
}

/// Membership in the chosen zone.
inline bool in_zone(const ZoneReport& zones, Zone zone, ProcessId v) {
  return zone == Zone::SB ? zones.in_sb[v] : zones.in_sbstar[v];
}

/// A correct process outside the zone (the processes the zone does not exempt).
inline bool zone_correct(const Topology& topo, const ZoneReport& zones, Zone zone, ProcessId v) {
  return topo.is_correct(v) && !in_zone(zones, zone, v);
}

enum class GraphKind { path, ring, grid, star, complete, random_connected };

inline GraphKind parse_graph_kind(const std::string& s) {
  if (s == "path") return GraphKind::path;
  if (s == "ring") return GraphKind::ring;
  if (s == "grid") return GraphKind::grid;
  if (s == "star") return GraphKind::star;
  if (s == "complete") return GraphKind::complete;
  if (s == "random_connected" || s == "random") return GraphKind::random_connected;
  throw Error("unknown graph kind '" + s + "'");
}

inline const char* to_string(GraphKind k) {
  switch (k) {
    case GraphKind::path: return "path";
    case GraphKind::ring: return "ring";
    case GraphKind::grid: return "grid";
    case GraphKind::star: return "star";
    case GraphKind::complete: return "complete";
    case GraphKind::random_connected: return "random_connected";
  }
  return "?";
}

/// Generator parameters. `n` is ignored for grids, which use rows x cols.
struct GraphSpec {
  GraphKind kind = GraphKind::path;
  std::size_t n = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double edge_probability = 0.0;
  std::uint64_t seed = 0;
  ProcessId root = 0;
  std::vector<ProcessId> byzantine;
};

inline Topology generate_graph(const GraphSpec& spec) {
  std::vector<Edge> edges;
  std::size_t n = spec.n;
  switch (spec.kind) {
    case GraphKind::path:
      if (n < 1) throw Error("generate_graph: path needs n >= 1");
      for (ProcessId v = 1; v < n; ++v) edges.emplace_back(v - 1, v);
      break;
    case GraphKind::ring:
      if (n < 3) throw Error("generate_graph: ring needs n >= 3");
      for (ProcessId v = 1; v < n; ++v) edges.emplace_back(v - 1, v);
      edges.emplace_back(0, static_cast<ProcessId>(n - 1));
      break;
    case GraphKind::grid:
      if (spec.rows < 1 || spec.cols < 1) throw Error("generate_graph: grid dims must be >= 1");
      n = spec.rows * spec.cols;
      for (std::size_t r = 0; r < spec.rows; ++r) {
        for (std::size_t c = 0; c < spec.cols; ++c) {
          auto id = static_cast<ProcessId>(r * spec.cols + c);
          if (c + 1 < spec.cols) edges.emplace_back(id, id + 1);
          if (r + 1 < spec.rows) edges.emplace_back(id, static_cast<ProcessId>(id + spec.cols));
        }
      }
      break;
    case GraphKind::star:
      if (n < 1) throw Error("generate_graph: star needs n >= 1");
      for (ProcessId v = 1; v < n; ++v) edges.emplace_back(0, v);
      break;
    case GraphKind::complete:
      if (n < 1) throw Error("generate_graph: complete graph needs n >= 1");
      for (ProcessId u = 0; u < n; ++u) {
        for (ProcessId v = u + 1; v < n; ++v) edges.emplace_back(u, v);
      }
      break;
    case GraphKind::random_connected: {
      if (n < 1) throw Error("generate_graph: random graph needs n >= 1");
      const double p = spec.edge_probability;
      if (!(p >= 0.0 && p <= 1.0)) throw Error("generate_graph: edge probability must be in [0,1]");
      if (n > 1 && p == 0.0) throw Error("generate_graph: p = 0 cannot produce a connected graph");
      std::mt19937_64 rng(spec.seed);
      std::bernoulli_distribution coin(p);
      constexpr int kMaxAttempts = 10000;
      for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        edges.clear();
        for (ProcessId u = 0; u < n; ++u) {
          for (ProcessId v = u + 1; v < n; ++v) {
            if (coin(rng)) edges.emplace_back(u, v);
          }
        }
        // Cheap union-find connectivity test before building the topology.
        std::vector<ProcessId> parent(n);
        for (ProcessId v = 0; v < n; ++v) parent[v] = v;
        auto find = [&](ProcessId x) {
          while (parent[x] != x) x = parent[x] = parent[parent[x]];
          return x;
        };
        std::size_t components = n;
        for (const auto& [u, v] : edges) {
          ProcessId a = find(u), b = find(v);
          if (a != b) {
            parent[a] = b;
            --components;
          }
        }
        if (components == 1) return Topology::from_edges(n, edges, spec.root, spec.byzantine);
      }
      throw Error("generate_graph: no connected sample after " + std::to_string(kMaxAttempts) +
                  " attempts (edge probability too low?)");
    }
  }
  return Topology::from_edges(n, edges, spec.root, spec.byzantine);
}

/// Parses the edge-list text format:
///   line 1: `n root byz1,byz2,...` (third field may be absent or empty)
///   then one `u v` pair per line. Blank lines and `#` comments are skipped.
inline Topology parse_edge_list(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) -> Error {
    return Error("edge list line " + std::to_string(line_no) + ": " + what);
  };
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw Error("edge list: empty input");
  std::istringstream header(line);
  long long n = -1, root = -1;
  if (!(header >> n >> root) || n <= 0 || root < 0) throw fail("expected header `n root [byz,...]`");
  std::vector<ProcessId> byz;
  std::string byz_field;
  if (header >> byz_field) {
    std::istringstream ids(byz_field);
    std::string tok;
    while (std::getline(ids, tok, ',')) {
      if (tok.empty()) continue;
      try {
        std::size_t used = 0;
        long long b = std::stoll(tok, &used);
        if (used != tok.size() || b < 0) throw fail("bad byzantine id '" + tok + "'");
        byz.push_back(static_cast<ProcessId>(b));
      } catch (const std::logic_error&) {
        throw fail("bad byzantine id '" + tok + "'");
      }
    }
  }
  std::string extra;
  if (header >> extra) throw fail("unexpected trailing field '" + extra + "'");

  std::vector<Edge> edges;
  while (next_line()) {
    std::istringstream row(line);
    long long u = -1, v = -1;
    if (!(row >> u >> v) || u < 0 || v < 0) throw fail("expected `u v`");
    if (row >> extra) throw fail("unexpected trailing field '" + extra + "'");
    if (u >= n || v >= n) throw fail("process id out of range");
    edges.emplace_back(static_cast<ProcessId>(u), static_cast<ProcessId>(v));
  }
  try {
    return Topology::from_edges(static_cast<std::size_t>(n), edges, static_cast<ProcessId>(root), byz);
  } catch (const Error& e) {
    throw Error(std::string("edge list: ") + e.what());
  }
}

inline std::string format_edge_list(const Topology& topo) {
  std::ostringstream out;
  out << topo.size() << ' ' << topo.root() << ' ';
  for (std::size_t i = 0; i < topo.byzantine().size(); ++i) {
    if (i) out << ',';
    out << topo.byzantine()[i];
  }
  out << '\n';
  for (const auto& [u, v] : topo.edges()) out << u << ' ' << v << '\n';
  return out.str();
}

}  // namespace calfs

#endif  // CALFS_TOPOLOGY_HPP
