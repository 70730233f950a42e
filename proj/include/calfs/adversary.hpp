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

#ifndef CALFS_ADVERSARY_HPP
#define CALFS_ADVERSARY_HPP

#include <array>
#include <optional>
#include <random>
#include <string>

#include "calfs/protocol.hpp"
#include "calfs/topology.hpp"

namespace calfs {

enum class AdversaryKind { silent, fake_root, oscillator, random_writer, min_under_cutter };

inline constexpr std::array<AdversaryKind, 5> kAllAdversaries = {
    AdversaryKind::silent, AdversaryKind::fake_root, AdversaryKind::oscillator, AdversaryKind::random_writer,
    AdversaryKind::min_under_cutter};

inline const char* to_string(AdversaryKind k) {
  switch (k) {
    case AdversaryKind::silent: return "silent";
    case AdversaryKind::fake_root: return "fake_root";
    case AdversaryKind::oscillator: return "oscillator";
    case AdversaryKind::random_writer: return "random_writer";
    case AdversaryKind::min_under_cutter: return "min_under_cutter";
  }
  return "?";
}

inline AdversaryKind parse_adversary_kind(const std::string& s) {
  for (AdversaryKind k : kAllAdversaries) {
    if (s == to_string(k)) return k;
  }
  throw Error("unknown adversary strategy '" + s + "'");
}

struct AdversaryStrategy {
  AdversaryKind kind = AdversaryKind::silent;
  std::uint64_t seed = 0;
  Height height_cap = 0;
};

/// Default Byzantine height cap: 4n.
inline Height default_height_cap(const Topology& topo) { return 4 * static_cast<Height>(topo.size()); }

/**
 * State published by Byzantine `b` when activated at `step_index`, or
 * nullopt for no write. A pure function of its arguments: random_writer
 * derives its generator from (seed, b, step_index).
 */
inline std::optional<ProcessState> byz_write(const AdversaryStrategy& strategy, const Topology& topo,
                                             const Configuration& config, ProcessId b, std::size_t step_index) {
  if (b >= topo.size() || !topo.is_byzantine(b)) {
    throw Error("byz_write: process " + std::to_string(b) + " is not byzantine");
  }
  const Height cap = strategy.height_cap;
  switch (strategy.kind) {
    case AdversaryKind::silent:
      return std::nullopt;
    case AdversaryKind::fake_root:
      return ProcessState{std::nullopt, 0};
    case AdversaryKind::oscillator:
      return ProcessState{std::nullopt, step_index % 2 == 0 ? Height{0} : cap};
    case AdversaryKind::random_writer: {
      std::seed_seq seq{static_cast<std::uint32_t>(strategy.seed), static_cast<std::uint32_t>(strategy.seed >> 32),
                        static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(step_index),
                        static_cast<std::uint32_t>(std::uint64_t(step_index) >> 32)};
      std::mt19937_64 rng(seq);
      const auto& nbrs = topo.neighbors(b);
      std::uniform_int_distribution<std::size_t> pick(0, nbrs.size());
      std::uniform_int_distribution<Height> height(0, cap);
      std::size_t i = pick(rng);
      ProcessState s;
      if (i < nbrs.size()) s.parent = nbrs[i];
      s.height = height(rng);
      return s;
    }
    case AdversaryKind::min_under_cutter: {
      Height m = min_neighbor_height(topo, config, b);
      Height h = m == 0 ? 0 : m - 1;
      return ProcessState{std::nullopt, std::min(h, cap)};
    }
  }
  return std::nullopt;
}

}  // namespace calfs

#endif  // CALFS_ADVERSARY_HPP
