#pragma once

#include <string>
#include <vector>

#include "syncpipe/cost.hpp"
#include "syncpipe/model.hpp"
#include "syncpipe/spp.hpp"

namespace syncpipe::io {

// File formats. Profiles, clusters and plans are JSON; traces are CSV.
// All writers are deterministic: fixed key order, seconds rounded to 9
// significant digits, byte counts written as integers. Readers validate the
// schema and throw ValidationError("schema", ...) on malformed input.

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

/// Value rounded to 9 significant digits (the precision every writer uses).
double round_sig9(double value);
std::string format_seconds(double value);

ModelProfile profile_from_text(const std::string& text);
std::string profile_to_text(const ModelProfile& profile);

ClusterGraph cluster_from_text(const std::string& text);
std::string cluster_to_text(const ClusterGraph& cluster);

/// Plan file: the chosen plan, its schedule, the stage-count sweep and bounds.
std::string plan_file_text(const SppResult& result, const ModelProfile& profile, const ClusterGraph& cluster);
/// Minimal plan file with stages and microbatch count only.
std::string plan_to_text(const Plan& plan);
/// Reads the stages and microbatch count of a plan file.
Plan plan_from_text(const std::string& text);

struct TraceRow {
  std::string resource;  // "stage<n>" or "channel<n>"
  int microbatch = 0;    // 0 for AllReduce rows
  std::string block;     // F<n>, B<n>, FB<n>, X<n>, Y<n>, AR
  double start = 0.0;
  double end = 0.0;
};

struct Trace {
  double makespan = 0.0;
  std::vector<TraceRow> rows;
};

Trace trace_from_schedule(const Schedule& schedule, const PlanCosts& costs);
std::string trace_to_text(const Trace& trace);
Trace trace_from_text(const std::string& text);

/// SVG Gantt chart: one lane per stage then per channel, one rectangle per
/// event labelled with its microbatch, AllReduce as a full-height bar.
std::string gantt_svg(const Trace& trace);

}  // namespace syncpipe::io
