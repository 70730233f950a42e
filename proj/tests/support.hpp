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

// Test helpers and independent oracles. Nothing here calls into the
// library's BFS, zone, or spec code.

#ifndef CALFS_TESTS_SUPPORT_HPP
#define CALFS_TESTS_SUPPORT_HPP

#include <algorithm>
#include <functional>
#include <initializer_list>
#include <limits>
#include <optional>
#include <vector>

#include "calfs/protocol.hpp"
#include "calfs/topology.hpp"

namespace calfs::testing {

inline constexpr int NIL = -1;

inline ProcessState st(int parent, Height h) {
  ProcessState s;
  if (parent >= 0) s.parent = static_cast<ProcessId>(parent);
  s.height = h;
  return s;
}

inline Configuration conf(std::initializer_list<ProcessState> states) { return Configuration(std::vector(states)); }

inline Topology path(std::size_t n, std::vector<ProcessId> byz = {}) {
  std::vector<Edge> e;
  for (ProcessId v = 0; v + 1 < n; ++v) e.emplace_back(v, v + 1);
  return Topology::from_edges(n, e, 0, std::move(byz));
}

// All-pairs hop distances, Floyd-Warshall. Unreachable is INF.
inline constexpr std::uint64_t INF = std::numeric_limits<std::uint64_t>::max() / 4;

inline std::vector<std::vector<std::uint64_t>> floyd_warshall(const Topology& topo) {
  const std::size_t n = topo.size();
  std::vector<std::vector<std::uint64_t>> d(n, std::vector<std::uint64_t>(n, INF));
  for (ProcessId u = 0; u < n; ++u) {
    d[u][u] = 0;
    for (ProcessId v : topo.neighbors(u)) d[u][v] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

/// spec(v) by enumerating every simple path ending at v and testing the
/// three path conditions directly.
inline bool brute_spec(const Topology& topo, const Configuration& c, ProcessId v) {
  auto min_nbr = [&](ProcessId u) {
    Height m = std::numeric_limits<Height>::max();
    for (ProcessId q : topo.neighbors(u)) m = std::min(m, c[q].height);
    return m;
  };
  auto root_like = [&](ProcessId u) {
    return (u == topo.root() || topo.is_byzantine(u)) && !c[u].parent && c[u].height == 0;
  };
  // The root's own clause: only (nil, 0) counts, even if a correct-looking
  // path from a Byzantine ends at it.
  if (v == topo.root()) return root_like(v);
  // Paths are built backwards from v: path.back() is v_0.
  std::vector<ProcessId> path{v};
  std::vector<bool> used(topo.size(), false);
  used[v] = true;
  std::function<bool()> extend = [&]() -> bool {
    const ProcessId head = path.back();
    if (root_like(head)) {
      bool ok = true;
      for (std::size_t i = 0; i + 1 < path.size() && ok; ++i) {
        ProcessId vi = path[i], prev = path[i + 1];
        ok = c[vi].parent == std::optional<ProcessId>(prev) && c[vi].height == c[prev].height + 1 &&
             c[prev].height == min_nbr(vi);
      }
      if (ok) return true;
    }
    for (ProcessId q : topo.neighbors(head)) {
      if (used[q]) continue;
      used[q] = true;
      path.push_back(q);
      bool found = extend();
      path.pop_back();
      used[q] = false;
      if (found) return true;
    }
    return false;
  };
  return extend();
}

/// Every connected graph on n labeled vertices.
inline std::vector<std::vector<Edge>> connected_graphs(std::size_t n) {
  std::vector<Edge> all;
  for (ProcessId u = 0; u < n; ++u)
    for (ProcessId v = u + 1; v < n; ++v) all.emplace_back(u, v);
  std::vector<std::vector<Edge>> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << all.size()); ++mask) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i < all.size(); ++i)
      if (mask >> i & 1) e.push_back(all[i]);
    std::vector<int> comp(n);
    for (std::size_t i = 0; i < n; ++i) comp[i] = static_cast<int>(i);
    std::function<int(int)> find = [&](int x) { return comp[x] == x ? x : comp[x] = find(comp[x]); };
    for (auto [u, v] : e) comp[find(u)] = find(v);
    bool connected = true;
    for (std::size_t i = 1; i < n; ++i) connected = connected && find(static_cast<int>(i)) == find(0);
    if (connected) out.push_back(e);
  }
  return out;
}

/// Calls fn on every configuration where each process has parent in N_v or
/// nil and height in [0, max_height].
inline void for_each_configuration(const Topology& topo, Height max_height,
                                   const std::function<void(const Configuration&)>& fn) {
  const std::size_t n = topo.size();
  Configuration c(n);
  std::function<void(ProcessId)> rec = [&](ProcessId v) {
    if (v == n) {
      fn(c);
      return;
    }
    std::vector<std::optional<ProcessId>> parents{std::nullopt};
    for (ProcessId q : topo.neighbors(v)) parents.emplace_back(q);
    for (const auto& p : parents) {
      for (Height h = 0; h <= max_height; ++h) {
        c[v] = ProcessState{p, h};
        rec(v + 1);
      }
    }
  };
  rec(0);
}

}  // namespace calfs::testing

#endif  // CALFS_TESTS_SUPPORT_HPP
