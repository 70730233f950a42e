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

// JSON-lines trace files.
//
//   {"type":"header","n":..,"root":..,"byzantine":[..],"edges":[[u,v],..],
//    "initial":[{"parent":null,"height":0},..],"fairness_bound":k,"padding":p}
//   {"step":0,"activated":[..],"actions":[{"process":v,"rule":"nonroot",
//    "old":{"parent":..,"height":..},"new":{"parent":..,"height":..}},..]}
//   ...
//   {"type":"footer","steps":N,"truncated":false,"stop_reason":"quiescent"}
//
// A nil parent is JSON null.

#ifndef CALFS_TRACE_IO_HPP
#define CALFS_TRACE_IO_HPP

#include <istream>
#include <ostream>
#include <string>

#include "calfs/checker.hpp"
#include "calfs/trace.hpp"
#include "json.hpp"

namespace calfs {

using Json = nlohmann::json;

inline Json to_json(const ProcessState& s) {
  Json j;
  j["parent"] = s.parent ? Json(*s.parent) : Json(nullptr);
  j["height"] = s.height;
  return j;
}

inline ProcessState state_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("height") || !j.contains("parent")) {
    throw Error("state must be an object with \"parent\" and \"height\"");
  }
  ProcessState s;
  const Json& p = j.at("parent");
  if (!p.is_null()) {
    if (!p.is_number_unsigned()) throw Error("state parent must be null or a nonnegative integer");
    s.parent = p.get<ProcessId>();
  }
  if (!j.at("height").is_number_unsigned()) throw Error("state height must be a nonnegative integer");
  s.height = j.at("height").get<Height>();
  return s;
}

inline Json to_json(const Configuration& c) {
  Json arr = Json::array();
  for (const auto& s : c.states) arr.push_back(to_json(s));
  return arr;
}

inline Configuration configuration_from_json(const Json& j) {
  const Json& arr = j.is_object() && j.contains("states") ? j.at("states") : j;
  if (!arr.is_array()) throw Error("configuration must be a JSON array of states");
  Configuration c;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    try {
      c.states.push_back(state_from_json(arr[i]));
    } catch (const Error& e) {
      throw Error("configuration entry " + std::to_string(i) + ": " + e.what());
    }
  }
  return c;
}

inline Json header_json(const Trace& t) {
  Json h;
  h["type"] = "header";
  h["n"] = t.topo.size();
  h["root"] = t.topo.root();
  h["byzantine"] = t.topo.byzantine();
  Json edges = Json::array();
  for (const auto& [u, v] : t.topo.edges()) edges.push_back({u, v});
  h["edges"] = edges;
  h["initial"] = to_json(t.configs.front());
  h["fairness_bound"] = t.fairness_bound;
  h["padding"] = t.padding;
  return h;
}

inline Json step_json(std::size_t index, const TraceStep& s) {
  Json j;
  j["step"] = index;
  j["activated"] = s.activated;
  Json actions = Json::array();
  for (const Action& a : s.actions) {
    Json aj;
    aj["process"] = a.process;
    aj["rule"] = to_string(a.rule);
    aj["old"] = to_json(a.old_state);
    aj["new"] = to_json(a.new_state);
    actions.push_back(aj);
  }
  j["actions"] = actions;
  return j;
}

inline void write_trace(std::ostream& out, const Trace& t) {
  out << header_json(t).dump() << '\n';
  for (std::size_t i = 0; i < t.steps.size(); ++i) out << step_json(i, t.steps[i]).dump() << '\n';
  Json f;
  f["type"] = "footer";
  f["steps"] = t.steps.size();
  f["truncated"] = t.truncated;
  f["stop_reason"] = to_string(t.stop_reason);
  out << f.dump() << '\n';
}

/// Reads a trace and replays it through the protocol; throws on any mismatch.
inline Trace read_trace(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) { return Error("trace line " + std::to_string(line_no) + ": " + what); };
  auto parse = [&](const std::string& text) {
    try {
      return Json::parse(text);
    } catch (const Json::exception& e) {
      throw fail(std::string("invalid JSON: ") + e.what());
    }
  };

  Trace t;
  bool have_header = false, have_footer = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (have_footer) throw fail("content after footer");
    Json j = parse(line);
    try {
      if (!have_header) {
        if (j.value("type", "") != "header") throw fail("expected header record");
        std::vector<Edge> edges;
        for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<ProcessId>(), e.at(1).get<ProcessId>());
        t.topo = Topology::from_edges(j.at("n").get<std::size_t>(), edges, j.at("root").get<ProcessId>(),
                                      j.at("byzantine").get<std::vector<ProcessId>>());
        Configuration init = configuration_from_json(j.at("initial"));
        check_shape(t.topo, init);
        t.configs.push_back(std::move(init));
        t.fairness_bound = j.value("fairness_bound", std::size_t{0});
        t.padding = j.value("padding", std::size_t{0});
        have_header = true;
      } else if (j.contains("type")) {
        if (j.at("type") != "footer") throw fail("unexpected record type");
        if (j.at("steps").get<std::size_t>() != t.steps.size()) throw fail("footer step count mismatch");
        t.truncated = j.at("truncated").get<bool>();
        t.stop_reason = parse_stop_reason(j.at("stop_reason").get<std::string>());
        have_footer = true;
      } else {
        if (j.at("step").get<std::size_t>() != t.steps.size()) throw fail("step index out of sequence");
        TraceStep s;
        s.activated = j.at("activated").get<std::vector<ProcessId>>();
        for (const auto& aj : j.at("actions")) {
          Action a;
          a.process = aj.at("process").get<ProcessId>();
          a.rule = parse_rule(aj.at("rule").get<std::string>());
          a.old_state = state_from_json(aj.at("old"));
          a.new_state = state_from_json(aj.at("new"));
          s.actions.push_back(a);
        }
        Configuration next = t.configs.back();
        for (const Action& a : s.actions) {
          if (a.process >= next.size()) throw fail("action on unknown process");
          if (next[a.process] != a.old_state) throw fail("action old state does not match the configuration");
          next[a.process] = a.new_state;
        }
        t.steps.push_back(std::move(s));
        t.configs.push_back(std::move(next));
      }
    } catch (const Json::exception& e) {
      throw fail(std::string("malformed record: ") + e.what());
    } catch (const Error& e) {
      std::string msg = e.what();
      if (msg.rfind("trace line", 0) == 0) throw;
      throw fail(msg);
    }
  }
  if (!have_header) throw Error("trace: missing header");
  if (!have_footer) throw Error("trace: missing footer");
  validate_trace(t);
  return t;
}

}  // namespace calfs

#endif  // CALFS_TRACE_IO_HPP
