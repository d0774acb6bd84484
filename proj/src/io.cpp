#include "syncpipe/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "syncpipe/errors.hpp"

namespace syncpipe::io {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

template <typename F>
auto with_schema(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ValidationError("schema", fmt::format("{}: {}", what, e.what()));
  }
}

json parse(const std::string& text, const char* what) {
  return with_schema(what, [&] { return json::parse(text); });
}

double number(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ValidationError("schema", fmt::format("'{}' must be a number", key));
  return v.get<double>();
}

int integer(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ValidationError("schema", fmt::format("'{}' must be an integer", key));
  return v.get<int>();
}

const json& array(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_array()) throw ValidationError("schema", fmt::format("'{}' must be an array", key));
  return v;
}

ojson seconds(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round_sig9(v);
}

std::int64_t bytes(double v) { return static_cast<std::int64_t>(std::llround(v)); }

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

ojson stages_json(const Plan& plan) {
  ojson stages = ojson::array();
  for (const Stage& s : plan.stages) {
    stages.push_back({{"index", s.index},
                      {"layer_start", s.layer_start},
                      {"layer_end", s.layer_end},
                      {"devices", s.devices}});
  }
  return stages;
}

std::string resource_name(const Block& b) {
  return fmt::format("{}{}", b.is_compute() ? "stage" : "channel", b.index);
}

// Sort key for lanes: stages first, then channels, each by index.
std::pair<int, int> lane_key(const std::string& resource) {
  if (resource.rfind("stage", 0) == 0) return {0, std::atoi(resource.c_str() + 5)};
  if (resource.rfind("channel", 0) == 0) return {1, std::atoi(resource.c_str() + 7)};
  throw ValidationError("schema", fmt::format("unknown resource '{}'", resource));
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("unreadable file", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("unwritable file", path);
  out << text;
}

double round_sig9(double value) {
  if (!std::isfinite(value) || value == 0.0) return value;
  return std::strtod(fmt::format("{:.9g}", value).c_str(), nullptr);
}

std::string format_seconds(double value) { return fmt::format("{:.9g}", value); }

ModelProfile profile_from_text(const std::string& text) {
  const json j = parse(text, "profile");
  ModelProfile p = with_schema("profile", [&] {
    ModelProfile out;
    out.name = j.at("name").get<std::string>();
    out.microbatch_size = number(j, "microbatch_size");
    for (const json& l : array(j, "layers")) {
      out.layers.push_back({integer(l, "id"), number(l, "fwd_s"), number(l, "bwd_s"), number(l, "param_bytes")});
    }
    for (const json& e : array(j, "edges")) {
      out.edges.push_back({integer(e, "from"), integer(e, "to"), number(e, "fwd_bytes"), number(e, "bwd_bytes")});
    }
    return out;
  });
  return validate_profile(p);
}

std::string profile_to_text(const ModelProfile& profile) {
  ojson j;
  j["name"] = profile.name;
  j["microbatch_size"] = profile.microbatch_size;
  j["layers"] = ojson::array();
  for (const LayerProfile& l : profile.layers) {
    j["layers"].push_back({{"id", l.id},
                           {"fwd_s", seconds(l.fwd_time)},
                           {"bwd_s", seconds(l.bwd_time)},
                           {"param_bytes", bytes(l.param_bytes)}});
  }
  j["edges"] = ojson::array();
  for (const InterLayerEdge& e : profile.edges) {
    j["edges"].push_back({{"from", e.from},
                          {"to", e.to},
                          {"fwd_bytes", bytes(e.fwd_bytes)},
                          {"bwd_bytes", bytes(e.bwd_bytes)}});
  }
  return dump(j);
}

ClusterGraph cluster_from_text(const std::string& text) {
  const json j = parse(text, "cluster");
  ClusterGraph g = with_schema("cluster", [&] {
    std::vector<GpuId> ids;
    for (const json& id : array(j, "gpus")) {
      if (!id.is_number_integer()) throw ValidationError("schema", "gpu ids must be integers");
      ids.push_back(id.get<int>());
    }
    std::vector<Link> links;
    for (const json& l : array(j, "links")) {
      links.push_back({integer(l, "a"), integer(l, "b"), number(l, "bytes_per_s")});
    }
    return ClusterGraph::from_links(std::move(ids), links);
  });
  return validate_cluster(g);
}

std::string cluster_to_text(const ClusterGraph& cluster) {
  ojson j;
  j["gpus"] = cluster.gpu_ids();
  j["links"] = ojson::array();
  for (const Link& l : cluster.links()) {
    j["links"].push_back({{"a", l.a}, {"b", l.b}, {"bytes_per_s", bytes(l.bytes_per_s)}});
  }
  return dump(j);
}

std::string plan_to_text(const Plan& plan) {
  ojson j;
  j["microbatches"] = plan.microbatch_count;
  j["stages"] = stages_json(plan);
  return dump(j);
}

std::string plan_file_text(const SppResult& result, const ModelProfile& profile, const ClusterGraph& cluster) {
  const PlanCosts costs = plan_costs(result.best_plan, profile, cluster);
  ojson j;
  j["microbatches"] = result.best_plan.microbatch_count;
  j["mapping"] = "rdo-contiguous";
  j["ordering"] = result.ordering.order;
  j["stages"] = stages_json(result.best_plan);
  j["makespan_s"] = seconds(result.makespan);

  ojson events = ojson::array();
  for (const ScheduledEvent& e : result.best_schedule.events) {
    events.push_back({{"block", block_label(e.block)},
                      {"microbatch", e.microbatch},
                      {"start_s", seconds(e.start)},
                      {"end_s", seconds(e.end)}});
  }
  ojson allreduce = ojson::array();
  for (const auto& [stage, start] : result.best_schedule.allreduce_starts) {
    allreduce.push_back({{"stage", stage},
                         {"start_s", seconds(start)},
                         {"end_s", seconds(start + costs.allreduce[stage - 1])}});
  }
  j["schedule"] = {{"events", events}, {"allreduce", allreduce}};

  ojson sweep = ojson::array();
  for (const SweepRow& row : result.sweep) {
    sweep.push_back({{"stages", row.stages},
                     {"feasible", row.feasible},
                     {"w_s", seconds(row.w)},
                     {"replication", row.replication},
                     {"makespan_s", seconds(row.makespan)},
                     {"lemma1_bound_s", seconds(row.lemma1)}});
  }
  j["sweep"] = sweep;
  j["bounds"] = {{"phi", round_sig9(result.phi)}, {"theorem1_factor", round_sig9(result.theorem1_factor)}};
  return dump(j);
}

Plan plan_from_text(const std::string& text) {
  const json j = parse(text, "plan");
  return with_schema("plan", [&] {
    Plan plan;
    plan.microbatch_count = integer(j, "microbatches");
    for (const json& s : array(j, "stages")) {
      Stage stage;
      stage.index = integer(s, "index");
      stage.layer_start = integer(s, "layer_start");
      stage.layer_end = integer(s, "layer_end");
      for (const json& d : array(s, "devices")) {
        if (!d.is_number_integer()) throw ValidationError("schema", "device ids must be integers");
        stage.devices.push_back(d.get<int>());
      }
      plan.stages.push_back(std::move(stage));
    }
    return plan;
  });
}

Trace trace_from_schedule(const Schedule& schedule, const PlanCosts& costs) {
  Trace trace;
  trace.makespan = schedule.makespan;
  for (const ScheduledEvent& e : schedule.events) {
    trace.rows.push_back({resource_name(e.block), e.microbatch, block_label(e.block), e.start, e.end});
  }
  for (const auto& [stage, start] : schedule.allreduce_starts) {
    trace.rows.push_back({fmt::format("stage{}", stage), 0, "AR", start, start + costs.allreduce[stage - 1]});
  }
  std::stable_sort(trace.rows.begin(), trace.rows.end(), [](const TraceRow& a, const TraceRow& b) {
    return std::tuple(a.start, lane_key(a.resource), a.microbatch, a.block) <
           std::tuple(b.start, lane_key(b.resource), b.microbatch, b.block);
  });
  return trace;
}

std::string trace_to_text(const Trace& trace) {
  std::string out = fmt::format("# makespan_s={}\n", format_seconds(trace.makespan));
  out += "resource,microbatch,block,start_s,end_s\n";
  for (const TraceRow& r : trace.rows) {
    out += fmt::format("{},{},{},{},{}\n", r.resource, r.microbatch, r.block, format_seconds(r.start),
                       format_seconds(r.end));
  }
  return out;
}

Trace trace_from_text(const std::string& text) {
  Trace trace;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  bool have_makespan = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string key = "# makespan_s=";
      if (line.rfind(key, 0) == 0) {
        char* end = nullptr;
        trace.makespan = std::strtod(line.c_str() + key.size(), &end);
        have_makespan = end && *end == '\0';
      }
      continue;
    }
    if (!header) {
      if (line != "resource,microbatch,block,start_s,end_s") {
        throw ValidationError("schema", fmt::format("trace line {}: bad header", line_no));
      }
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw ValidationError("schema", fmt::format("trace line {}: expected 5 fields", line_no));
    TraceRow row;
    row.resource = cells[0];
    lane_key(row.resource);
    char* end = nullptr;
    row.microbatch = static_cast<int>(std::strtol(cells[1].c_str(), &end, 10));
    const bool ok_m = end && *end == '\0';
    row.block = cells[2];
    row.start = std::strtod(cells[3].c_str(), &end);
    const bool ok_s = end && *end == '\0';
    row.end = std::strtod(cells[4].c_str(), &end);
    const bool ok_e = end && *end == '\0';
    if (!ok_m || !ok_s || !ok_e || row.block.empty() || row.end < row.start) {
      throw ValidationError("schema", fmt::format("trace line {}: malformed row", line_no));
    }
    trace.rows.push_back(std::move(row));
  }
  if (!header || !have_makespan) throw ValidationError("schema", "trace missing header or makespan");
  return trace;
}

}  // namespace syncpipe::io
