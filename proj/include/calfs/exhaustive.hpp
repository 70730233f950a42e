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

// Explicit-state exploration of every daemon choice on small instances.
//
// A configuration is packed into one mixed-radix integer: each correct
// process contributes (parent slot, height) and the Byzantine contributes
// its published height. Byzantine parent pointers are not tracked: guards
// never read a neighbor's parent, and a correct path certifying an
// SB-correct process never passes through a Byzantine, so SB-legitimacy and
// SB-stability do not depend on them.
//
// Heights are exact, not truncated. With initial heights and Byzantine
// writes bounded by M, a correct process v never exceeds M + d(r, v): its
// neighbor one hop closer to the root bounds its new height.
//
// The check is "every fair execution from every initial configuration
// reaches an SB-legitimate and SB-stable configuration". It explores the
// subgraph of reachable configurations that are not legitimate-and-stable,
// and searches it for a maximal execution that stays there forever while
// being strongly fair to correct processes: either a deadlock, or a
// strongly connected set in which every process enabled somewhere is also
// selected somewhere (found by iterated SCC refinement).

#ifndef CALFS_EXHAUSTIVE_HPP
#define CALFS_EXHAUSTIVE_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "calfs/checker.hpp"
#include "calfs/protocol.hpp"
#include "calfs/topology.hpp"

namespace calfs {

inline constexpr std::size_t kExhaustiveMaxN = 5;

struct ExhaustiveOptions {
  /// Largest universe (number of packed configurations) explored per instance.
  std::uint64_t state_budget = 60'000'000;
  /// When false, every correct process must become legitimate and stable,
  /// including those in S_B. Only useful as a negative control.
  bool exempt_zone = true;
};

struct InstanceResult {
  std::string family;
  std::size_t n = 0;
  std::optional<ProcessId> byzantine;
  std::uint64_t universe = 0;
  std::uint64_t initial_states = 0;   // initial configurations that are not already legitimate-and-stable
  std::uint64_t explored_states = 0;  // reachable configurations that are not legitimate-and-stable
  std::uint64_t edges = 0;
  bool budget_exhausted = false;
  bool violation = false;
  std::string witness;  // description of a violating configuration, if any

  [[nodiscard]] bool ok() const { return !budget_exhausted && !violation; }
};

struct ExhaustiveReport {
  std::vector<InstanceResult> instances;

  [[nodiscard]] std::size_t violations() const {
    std::size_t c = 0;
    for (const auto& i : instances) c += i.violation;
    return c;
  }
  [[nodiscard]] std::size_t exhausted() const {
    std::size_t c = 0;
    for (const auto& i : instances) c += i.budget_exhausted;
    return c;
  }
  [[nodiscard]] bool ok() const { return violations() == 0 && exhausted() == 0; }
};

namespace detail {

class PackedSystem {
 public:
  static constexpr std::size_t kMax = 8;
  static constexpr Height kNoHeight = ~Height{0};

  explicit PackedSystem(const Topology& topo, bool exempt_zone = true)
      : topo_(topo), n_(topo.size()), exempt_zone_(exempt_zone) {
    if (n_ > kMax) throw Error("exhaustive: instance too large");
    if (topo.byzantine().size() > 1) throw Error("exhaustive: at most one byzantine process supported");
    zones_ = compute_zones(topo);
    init_bound_ = n_;
    std::uint64_t mult = 1;
    for (ProcessId v = 0; v < n_; ++v) {
      if (topo.is_byzantine(v)) {
        heights_[v] = init_bound_ + 1;
        slots_[v] = 1;
      } else {
        heights_[v] = init_bound_ + zones_.dist_root[v] + 1;
        slots_[v] = topo.neighbors(v).size() + 1;  // slot 0 = nil
      }
      radix_[v] = mult;
      const std::uint64_t span = slots_[v] * heights_[v];
      if (mult > (std::uint64_t{1} << 62) / span) throw Error("exhaustive: universe overflows 64 bits");
      mult *= span;
    }
    universe_ = mult;
    byz_ = topo.byzantine().empty() ? kMax : topo.byzantine().front();
  }

  [[nodiscard]] std::uint64_t universe() const { return universe_; }
  [[nodiscard]] std::size_t size() const { return n_; }
  [[nodiscard]] bool has_byzantine() const { return byz_ != kMax; }
  [[nodiscard]] const Topology& topo() const { return topo_; }

  struct View {
    std::array<std::uint32_t, kMax> slot{};
    std::array<Height, kMax> height{};
  };

  [[nodiscard]] View decode(std::uint64_t s) const {
    View v;
    for (ProcessId p = 0; p < n_; ++p) {
      const std::uint64_t span = slots_[p] * heights_[p];
      const std::uint64_t code = s % span;
      s /= span;
      v.slot[p] = static_cast<std::uint32_t>(code / heights_[p]);
      v.height[p] = code % heights_[p];
    }
    return v;
  }

  [[nodiscard]] std::uint64_t code_of(ProcessId p, std::uint32_t slot, Height h) const {
    return (slot * heights_[p] + h) * radix_[p];
  }

  /// Configuration with nil Byzantine parents, for cross-checking against the checker.
  [[nodiscard]] Configuration to_configuration(const View& v) const {
    Configuration c(n_);
    for (ProcessId p = 0; p < n_; ++p) {
      c[p].height = v.height[p];
      if (v.slot[p] > 0) c[p].parent = topo_.neighbors(p)[v.slot[p] - 1];
    }
    return c;
  }

  [[nodiscard]] Height min_nbr(const View& v, ProcessId p) const {
    Height m = kNoHeight;
    for (ProcessId q : topo_.neighbors(p)) m = std::min(m, v.height[q]);
    return m;
  }

  [[nodiscard]] bool enabled(const View& v, ProcessId p) const {
    if (p == topo_.root()) return v.slot[p] != 0 || v.height[p] != 0;
    if (v.slot[p] == 0) return true;
    const ProcessId par = topo_.neighbors(p)[v.slot[p] - 1];
    const Height hp = v.height[par];
    return v.height[p] != hp + 1 || hp != min_nbr(v, p);
  }

  /// New (slot, height) of an enabled correct process.
  [[nodiscard]] std::pair<std::uint32_t, Height> next(const View& v, ProcessId p) const {
    if (p == topo_.root()) return {0, 0};
    const auto& nbrs = topo_.neighbors(p);
    const Height m = min_nbr(v, p);
    const std::size_t start = v.slot[p];  // index after the current parent, 0 when nil
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      const std::size_t k = (start + i) % nbrs.size();
      if (v.height[nbrs[k]] == m) return {static_cast<std::uint32_t>(k + 1), m + 1};
    }
    return {0, 0};  // unreachable
  }

  /// SB-legitimate and SB-stable.
  [[nodiscard]] bool legit_and_stable(const View& v) const {
    for (ProcessId p = 0; p < n_; ++p) {
      if (checked(p) && enabled(v, p)) return false;
    }
    for (ProcessId p = 0; p < n_; ++p) {
      if (checked(p) && !spec(v, p)) return false;
    }
    return true;
  }

  [[nodiscard]] bool checked(ProcessId p) const {
    return exempt_zone_ ? zone_correct(topo_, zones_, Zone::SB, p) : topo_.is_correct(p);
  }

  [[nodiscard]] bool spec(const View& v, ProcessId p) const {
    auto root_like = [&](ProcessId u) {
      return v.slot[u] == 0 && v.height[u] == 0 && (u == topo_.root() || u == byz_);
    };
    if (p == topo_.root()) return root_like(p);
    if (v.slot[p] == 0) return false;
    ProcessId cur = p;
    while (v.slot[cur] != 0) {
      const ProcessId par = topo_.neighbors(cur)[v.slot[cur] - 1];
      const Height hp = v.height[par];
      if (v.height[cur] != hp + 1 || hp != min_nbr(v, cur)) return false;
      cur = par;
    }
    return root_like(cur);
  }

  /// Outgoing transitions of a packed state.
  struct Moves {
    std::uint64_t state = 0;
    std::array<ProcessId, kMax> proc{};
    std::array<std::int64_t, kMax> delta{};
    std::size_t count = 0;      // enabled correct processes
    Height byz_height = 0;      // current Byzantine height
    std::uint64_t byz_options = 1;

    [[nodiscard]] std::uint64_t total() const { return (std::uint64_t{1} << count) * byz_options; }
  };

  [[nodiscard]] Moves moves(std::uint64_t s) const {
    Moves m;
    m.state = s;
    View v = decode(s);
    for (ProcessId p = 0; p < n_; ++p) {
      if (p == byz_ || !enabled(v, p)) continue;
      auto [slot, h] = next(v, p);
      m.proc[m.count] = p;
      m.delta[m.count] = static_cast<std::int64_t>(code_of(p, slot, h)) -
                         static_cast<std::int64_t>(code_of(p, v.slot[p], v.height[p]));
      ++m.count;
    }
    if (has_byzantine()) {
      m.byz_height = v.height[byz_];
      m.byz_options = init_bound_ + 1;
    }
    return m;
  }

  struct Edge {
    std::uint64_t target = 0;
    std::uint32_t selected = 0;  // bitmask of selected correct processes
    bool self_loop = false;
    bool valid = false;
  };

  /// The cursor-th transition. Byzantine no-op with no correct process is the
  /// self-loop (only present with a Byzantine).
  [[nodiscard]] Edge edge(const Moves& m, std::uint64_t cursor) const {
    Edge e;
    const std::uint64_t mask = cursor / m.byz_options;
    const Height h = cursor % m.byz_options;
    std::int64_t target = static_cast<std::int64_t>(m.state);
    for (std::size_t i = 0; i < m.count; ++i) {
      if (mask >> i & 1) {
        target += m.delta[i];
        e.selected |= 1u << m.proc[i];
      }
    }
    if (has_byzantine()) {
      target += (static_cast<std::int64_t>(h) - static_cast<std::int64_t>(m.byz_height)) *
                static_cast<std::int64_t>(radix_[byz_]);
      if (mask == 0 && h == m.byz_height) {
        e.self_loop = true;
        e.valid = true;
        e.target = m.state;
        return e;
      }
    } else if (mask == 0) {
      return e;
    }
    e.valid = true;
    e.target = static_cast<std::uint64_t>(target);
    return e;
  }

  [[nodiscard]] bool is_initial(const View& v) const {
    for (ProcessId p = 0; p < n_; ++p) {
      if (v.height[p] > init_bound_) return false;
    }
    return true;
  }

  [[nodiscard]] std::uint32_t enabled_mask(const View& v) const {
    std::uint32_t m = 0;
    for (ProcessId p = 0; p < n_; ++p) {
      if (p != byz_ && enabled(v, p)) m |= 1u << p;
    }
    return m;
  }

  [[nodiscard]] std::string describe(std::uint64_t s) const {
    return format_configuration(to_configuration(decode(s)));
  }

  static std::string format_configuration(const Configuration& c) {
    std::string out;
    for (std::size_t p = 0; p < c.size(); ++p) {
      if (p) out += ' ';
      out += std::to_string(p) + ":" + to_string(c[static_cast<ProcessId>(p)]);
    }
    return out;
  }

 private:
  const Topology& topo_;
  std::size_t n_;
  bool exempt_zone_ = true;
  ZoneReport zones_;
  Height init_bound_ = 0;
  std::array<std::uint64_t, kMax> slots_{};
  std::array<Height, kMax> heights_{};
  std::array<std::uint64_t, kMax> radix_{};
  std::uint64_t universe_ = 0;
  ProcessId byz_ = kMax;
};

// Pearce's single-array SCC algorithm over packed states, restricted to the
// states accepted by `member`. Index storage is pluggable so the top level
// can use a dense array over the whole universe and refinements a hash map.
template <class Store, class Member, class OnComponent>
void pearce_scc(const PackedSystem& sys, Store& rindex, std::uint64_t capacity,
                const std::vector<std::uint64_t>& roots, Member&& member, OnComponent&& on_component,
                std::uint64_t& edge_count) {
  struct Frame {
    std::uint64_t state;
    std::uint64_t cursor;
    bool root;
  };
  std::uint64_t index = 1;
  std::uint64_t comp = capacity - 1;
  std::vector<Frame> call;
  std::vector<std::uint64_t> stack;
  std::vector<std::uint64_t> members;

  for (std::uint64_t r : roots) {
    if (rindex.get(r) != 0 || !member(r)) continue;
    rindex.set(r, index++);
    call.push_back({r, 0, true});
    while (!call.empty()) {
      Frame& f = call.back();
      const auto mv = sys.moves(f.state);
      bool descended = false;
      while (f.cursor < mv.total()) {
        const auto e = sys.edge(mv, f.cursor);
        if (!e.valid || e.self_loop || !member(e.target)) {
          ++f.cursor;
          continue;
        }
        const std::uint64_t ri = rindex.get(e.target);
        if (ri == 0) {
          rindex.set(e.target, index++);
          call.push_back({e.target, 0, true});
          descended = true;
          break;
        }
        ++edge_count;
        if (ri < rindex.get(f.state)) {
          rindex.set(f.state, ri);
          f.root = false;
        }
        ++f.cursor;
      }
      if (descended) continue;

      // Frame finished.
      const Frame done = call.back();
      call.pop_back();
      if (done.root) {
        --index;
        members.clear();
        members.push_back(done.state);
        const std::uint64_t mine = rindex.get(done.state);
        while (!stack.empty() && mine <= rindex.get(stack.back())) {
          const std::uint64_t w = stack.back();
          stack.pop_back();
          rindex.set(w, comp);
          members.push_back(w);
          --index;
        }
        rindex.set(done.state, comp);
        on_component(members, comp);
        --comp;
      } else {
        stack.push_back(done.state);
      }
      if (!call.empty()) {
        // Resume the parent: fold in the child's index, advance past the edge.
        Frame& parent = call.back();
        ++edge_count;
        const std::uint64_t rc = rindex.get(done.state);
        if (rc < rindex.get(parent.state)) {
          rindex.set(parent.state, rc);
          parent.root = false;
        }
        ++parent.cursor;
      }
    }
  }
}

struct DenseStore {
  std::vector<std::uint32_t> data;
  std::uint64_t get(std::uint64_t s) const { return data[s]; }
  void set(std::uint64_t s, std::uint64_t v) { data[s] = static_cast<std::uint32_t>(v); }
};

struct HashStore {
  std::unordered_map<std::uint64_t, std::uint64_t> data;
  std::uint64_t get(std::uint64_t s) const {
    auto it = data.find(s);
    return it == data.end() ? 0 : it->second;
  }
  void set(std::uint64_t s, std::uint64_t v) { data[s] = v; }
};

class FairCycleSearch {
 public:
  explicit FairCycleSearch(const PackedSystem& sys) : sys_(sys) {}

  // Looks for a strongly fair cycle inside `component`, which must be
  // strongly connected within the bad region. Returns a state of it, if any.
  std::optional<std::uint64_t> search(std::vector<std::uint64_t> component) {
    std::vector<std::vector<std::uint64_t>> work;
    work.push_back(std::move(component));
    while (!work.empty()) {
      std::vector<std::uint64_t> comp = std::move(work.back());
      work.pop_back();
      std::unordered_map<std::uint64_t, bool> in;
      for (auto s : comp) in[s] = true;
      std::uint32_t enabled = 0, selected = 0;
      for (auto s : comp) {
        enabled |= sys_.enabled_mask(sys_.decode(s));
        const auto mv = sys_.moves(s);
        for (std::uint64_t c = 0; c < mv.total(); ++c) {
          const auto e = sys_.edge(mv, c);
          if (e.valid && !e.self_loop && in.count(e.target)) selected |= e.selected;
        }
      }
      if ((enabled & ~selected) == 0) return comp.front();
      const std::uint32_t bad = enabled & ~selected;
      std::vector<std::uint64_t> keep;
      for (auto s : comp) {
        if ((sys_.enabled_mask(sys_.decode(s)) & bad) == 0) keep.push_back(s);
      }
      if (keep.empty()) continue;
      std::unordered_map<std::uint64_t, bool> keep_set;
      for (auto s : keep) keep_set[s] = true;
      HashStore store;
      std::uint64_t ignored = 0;
      pearce_scc(
          sys_, store, std::uint64_t{1} << 62, keep, [&](std::uint64_t s) { return keep_set.count(s) > 0; },
          [&](const std::vector<std::uint64_t>& members, std::uint64_t) {
            if (members.size() > 1) {
              work.push_back(members);
            } else if (sys_.has_byzantine() && sys_.enabled_mask(sys_.decode(members.front())) == 0) {
              single_fair_ = members.front();
            }
          },
          ignored);
      if (single_fair_) return single_fair_;
    }
    return std::nullopt;
  }

 private:
  const PackedSystem& sys_;
  std::optional<std::uint64_t> single_fair_;
};

}  // namespace detail

/// Exhaustive fair-branch check of a single instance (|B| <= 1, n <= 5).
inline InstanceResult exhaustive_instance(const Topology& topo, const std::string& family,
                                          const ExhaustiveOptions& options = {}) {
  if (topo.size() > kExhaustiveMaxN) throw Error("exhaustive: n must be <= 5");
  InstanceResult res;
  res.family = family;
  res.n = topo.size();
  if (!topo.byzantine().empty()) res.byzantine = topo.byzantine().front();

  detail::PackedSystem sys(topo, options.exempt_zone);
  res.universe = sys.universe();
  if (sys.universe() > options.state_budget || sys.universe() >= (std::uint64_t{1} << 31)) {
    res.budget_exhausted = true;
    res.witness = "universe of " + std::to_string(sys.universe()) + " states exceeds budget";
    return res;
  }

  // Bad region: configurations not SB-legitimate-and-stable. Two bits per state.
  std::vector<std::uint8_t> good_cache(sys.universe(), 0);  // 0 unknown, 1 good, 2 bad
  auto bad = [&](std::uint64_t s) {
    std::uint8_t& c = good_cache[s];
    if (c == 0) c = sys.legit_and_stable(sys.decode(s)) ? 1 : 2;
    return c == 2;
  };

  std::vector<std::uint64_t> roots;
  for (std::uint64_t s = 0; s < sys.universe(); ++s) {
    auto v = sys.decode(s);
    if (sys.is_initial(v) && bad(s)) roots.push_back(s);
  }
  res.initial_states = roots.size();

  detail::DenseStore store;
  store.data.assign(sys.universe(), 0);
  detail::FairCycleSearch fair(sys);
  std::optional<std::uint64_t> witness;

  detail::pearce_scc(
      sys, store, sys.universe(), roots, bad,
      [&](const std::vector<std::uint64_t>& members, std::uint64_t) {
        res.explored_states += members.size();
        if (witness) return;
        if (members.size() == 1) {
          const auto v = sys.decode(members.front());
          // A deadlock, or a Byzantine-only self-loop with nothing enabled, is a fair dead end.
          if (sys.enabled_mask(v) == 0) witness = members.front();
          return;
        }
        witness = fair.search(members);
      },
      res.edges);

  if (witness) {
    res.violation = true;
    res.witness = "fair execution avoiding containment through " + sys.describe(*witness);
  }
  return res;
}

struct FamilyInstance {
  std::string family;
  Topology topo;
};

/// Paths, rings, stars (root at the center) and complete graphs with
/// 2 <= n <= n_max, each with no Byzantine and with each non-root Byzantine.
inline std::vector<FamilyInstance> exhaustive_instances(std::size_t n_max, const std::vector<GraphKind>& families) {
  if (n_max > kExhaustiveMaxN) throw Error("exhaustive: n_max must be <= 5");
  std::vector<FamilyInstance> out;
  for (GraphKind kind : families) {
    if (kind == GraphKind::grid || kind == GraphKind::random_connected) {
      throw Error(std::string("exhaustive: unsupported family ") + to_string(kind));
    }
    const std::size_t n_min = kind == GraphKind::ring ? 3 : 2;
    for (std::size_t n = n_min; n <= n_max; ++n) {
      GraphSpec spec;
      spec.kind = kind;
      spec.n = n;
      Topology base = generate_graph(spec);
      out.push_back({to_string(kind), base});
      for (ProcessId b = 1; b < n; ++b) out.push_back({to_string(kind), base.with_byzantine({b})});
    }
  }
  return out;
}

inline ExhaustiveReport exhaustive_check(std::size_t n_max, const std::vector<GraphKind>& families,
                                         const ExhaustiveOptions& options = {}) {
  ExhaustiveReport rep;
  for (const auto& inst : exhaustive_instances(n_max, families)) {
    rep.instances.push_back(exhaustive_instance(inst.topo, inst.family, options));
  }
  return rep;
}

}  // namespace calfs

#endif  // CALFS_EXHAUSTIVE_HPP
