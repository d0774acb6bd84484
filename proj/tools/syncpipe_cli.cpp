// syncpipe command-line front end.
//
//   syncpipe plan     --profile P --cluster C --microbatches M [--stages N] --out plan.json
//   syncpipe simulate --plan plan.json --profile P --cluster C --out trace.csv
//   syncpipe compare  --profile P --cluster C --microbatches M [--baselines gpipe,norep,dp] [--out table.json]
//   syncpipe gantt    --trace trace.csv --out chart.svg
//   syncpipe oracle   --profile P --cluster C --microbatches M [--limits L,V,M[,budget]]
//
// Exit codes: 0 ok, 1 a checked bound failed, 2 invalid input, 3 infeasible
// stage count, 4 oracle limits exceeded.

#include <algorithm>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "syncpipe/baselines.hpp"
#include "syncpipe/errors.hpp"
#include "syncpipe/io.hpp"
#include "syncpipe/oracle.hpp"
#include "syncpipe/ordering.hpp"
#include "syncpipe/partition.hpp"
#include "syncpipe/scheduler.hpp"
#include "syncpipe/spp.hpp"

namespace {

using namespace syncpipe;
using ojson = nlohmann::ordered_json;

constexpr int kExitBoundFailed = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitOracleLimit = 4;

struct Args {
  std::string profile;
  std::string cluster;
  std::string plan;
  std::string trace;
  std::string out;
  std::string baselines = "gpipe,norep,dp";
  std::string limits;
  int microbatches = 1;
  std::optional<int> stages;
};

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    io::write_file(out, text);
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove(item.begin(), item.end(), ' '), item.end());
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

int cmd_plan(const Args& a) {
  const ModelProfile profile = io::profile_from_text(io::read_file(a.profile));
  const ClusterGraph cluster = io::cluster_from_text(io::read_file(a.cluster));
  const SppResult result = a.stages ? spp_fixed_stages(profile, cluster, a.microbatches, *a.stages)
                                    : spp(profile, cluster, a.microbatches);
  emit(a.out, io::plan_file_text(result, profile, cluster));
  if (!a.out.empty() && a.out != "-") {
    std::cerr << fmt::format("{} stage(s), makespan {} s\n", result.best_stages,
                             io::format_seconds(result.makespan));
  }
  return 0;
}

int cmd_simulate(const Args& a) {
  const ModelProfile profile = io::profile_from_text(io::read_file(a.profile));
  const ClusterGraph cluster = io::cluster_from_text(io::read_file(a.cluster));
  const Plan plan = validate_plan(io::plan_from_text(io::read_file(a.plan)), profile, cluster);
  const Schedule schedule = simulate_pe(plan, profile, cluster);
  const std::vector<Violation> violations = validate_schedule(schedule, plan, profile, cluster);
  if (!violations.empty()) {
    const Violation& v = violations.front();
    throw ValidationError(v.constraint, fmt::format("microbatch {} stage {}: {}", v.microbatch, v.stage, v.detail));
  }
  emit(a.out, io::trace_to_text(io::trace_from_schedule(schedule, plan_costs(plan, profile, cluster))));
  return 0;
}

int cmd_compare(const Args& a) {
  const ModelProfile profile = io::profile_from_text(io::read_file(a.profile));
  const ClusterGraph cluster = io::cluster_from_text(io::read_file(a.cluster));
  const std::vector<std::string> wanted = split_list(a.baselines);
  for (const std::string& name : wanted) {
    if (name != "gpipe" && name != "norep" && name != "dp") {
      throw ValidationError("unknown baseline", name);
    }
  }
  const int M = a.microbatches;
  const SppResult best = spp(profile, cluster, M);

  std::vector<std::pair<std::string, double>> rows{{"spp", best.makespan}};
  for (const std::string& name : wanted) {
    double t = 0.0;
    if (name == "gpipe") {
      const int stages = std::min(profile.layer_count(), cluster.size());
      const Plan plan = gpipe_plan(profile, best.ordering, stages, M);
      t = gpipe_schedule(plan, profile, cluster).makespan;
    } else if (name == "norep") {
      t = simulate_pe(noreplication_plan(profile, cluster, best.ordering, M).plan, profile, cluster).makespan;
    } else {
      t = simulate_pe(dataparallel_plan(profile, cluster, M), profile, cluster).makespan;
    }
    rows.emplace_back(name, t);
  }

  ojson table = ojson::array();
  std::string text = fmt::format("{:<8} {:>16} {:>10}\n", "planner", "makespan_s", "speedup");
  for (const auto& [name, t] : rows) {
    const double speedup = (t - best.makespan) / best.makespan;
    table.push_back({{"planner", name},
                     {"makespan_s", io::round_sig9(t)},
                     {"speedup", io::round_sig9(speedup)}});
    text += fmt::format("{:<8} {:>16} {:>9.1f}%\n", name, io::format_seconds(t), 100.0 * speedup);
  }
  std::cout << text;
  if (!a.out.empty()) io::write_file(a.out, table.dump(2) + "\n");
  return 0;
}

int cmd_gantt(const Args& a) {
  emit(a.out, io::gantt_svg(io::trace_from_text(io::read_file(a.trace))));
  return 0;
}

OracleLimits parse_limits(const std::string& text) {
  OracleLimits limits;
  if (text.empty()) return limits;
  const std::vector<std::string> parts = split_list(text);
  if (parts.size() < 3 || parts.size() > 4) {
    throw ValidationError("bad limits", "expected L,V,M[,node_budget]");
  }
  try {
    limits.max_layers = std::stoi(parts[0]);
    limits.max_gpus = std::stoi(parts[1]);
    limits.max_microbatches = std::stoi(parts[2]);
    if (parts.size() == 4) limits.node_budget = std::stoll(parts[3]);
  } catch (const std::exception&) {
    throw ValidationError("bad limits", text);
  }
  return limits;
}

int cmd_oracle(const Args& a) {
  const ModelProfile profile = io::profile_from_text(io::read_file(a.profile));
  const ClusterGraph cluster = io::cluster_from_text(io::read_file(a.cluster));
  const OracleLimits limits = parse_limits(a.limits);
  const int M = a.microbatches;
  check_oracle_limits(profile, cluster, M, limits);

  const SppResult planned = spp(profile, cluster, M);
  PrmSolver solver(profile, cluster, planned.ordering, M);
  double w_prm = kInfeasible;
  for (int xi = 1; xi <= cluster.size(); ++xi) w_prm = std::min(w_prm, best_partition(solver, xi).w);

  const WStar w_star = brute_force_w_star(profile, cluster, M, limits);
  const TStar t_star = brute_force_t_star(profile, cluster, M, limits);
  const Theorem1Report t1 = theorem1_report(profile, cluster, M, planned.makespan, t_star.makespan);
  const bool lemma2 = w_prm <= (1.0 + planned.phi) * w_star.w * (1.0 + 1e-9);
  const bool exact = planned.phi > 0.0 || std::abs(w_prm - w_star.w) <= 1e-9 * std::max(1.0, w_star.w);

  ojson j;
  j["phi"] = io::round_sig9(planned.phi);
  j["w_prm_s"] = io::round_sig9(w_prm);
  j["w_star_s"] = io::round_sig9(w_star.w);
  j["plans"] = w_star.plans;
  j["lemma2_holds"] = lemma2 && exact;
  j["t_spp_s"] = io::round_sig9(planned.makespan);
  j["t_star_s"] = io::round_sig9(t_star.makespan);
  j["theorem1_factor"] = io::round_sig9(t1.factor);
  j["theorem1_holds"] = t1.holds.value_or(false);
  j["search_nodes"] = t_star.nodes;
  emit(a.out, j.dump(2) + "\n");
  return (lemma2 && exact && t1.holds.value_or(false)) ? 0 : kExitBoundFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synchronous pipeline planner and simulator"};
  app.require_subcommand(1);
  Args a;

  auto* plan = app.add_subcommand("plan", "Plan partition, replication, mapping and schedule");
  plan->add_option("--profile", a.profile, "Model profile (JSON)")->required();
  plan->add_option("--cluster", a.cluster, "Cluster description (JSON)")->required();
  plan->add_option("--microbatches", a.microbatches, "Microbatches per iteration")->required();
  plan->add_option("--stages", a.stages, "Plan only this stage count");
  plan->add_option("--out", a.out, "Output plan file (default stdout)");

  auto* simulate = app.add_subcommand("simulate", "Simulate a plan file and write its trace");
  simulate->add_option("--plan", a.plan, "Plan file")->required();
  simulate->add_option("--profile", a.profile, "Model profile (JSON)")->required();
  simulate->add_option("--cluster", a.cluster, "Cluster description (JSON)")->required();
  simulate->add_option("--out", a.out, "Output trace CSV (default stdout)");

  auto* compare = app.add_subcommand("compare", "Compare against baseline planners");
  compare->add_option("--profile", a.profile, "Model profile (JSON)")->required();
  compare->add_option("--cluster", a.cluster, "Cluster description (JSON)")->required();
  compare->add_option("--microbatches", a.microbatches, "Microbatches per iteration")->required();
  compare->add_option("--baselines", a.baselines, "Comma-separated subset of gpipe,norep,dp");
  compare->add_option("--out", a.out, "Also write the table as JSON");

  auto* gantt = app.add_subcommand("gantt", "Render a trace as an SVG Gantt chart");
  gantt->add_option("--trace", a.trace, "Trace CSV")->required();
  gantt->add_option("--out", a.out, "Output SVG (default stdout)");

  auto* oracle = app.add_subcommand("oracle", "Check the planner against exhaustive search");
  oracle->add_option("--profile", a.profile, "Model profile (JSON)")->required();
  oracle->add_option("--cluster", a.cluster, "Cluster description (JSON)")->required();
  oracle->add_option("--microbatches", a.microbatches, "Microbatches per iteration")->required();
  oracle->add_option("--limits", a.limits, "Instance limits L,V,M[,node_budget]");
  oracle->add_option("--out", a.out, "Output JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*plan) return cmd_plan(a);
    if (*simulate) return cmd_simulate(a);
    if (*compare) return cmd_compare(a);
    if (*gantt) return cmd_gantt(a);
    if (*oracle) return cmd_oracle(a);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const OracleLimitError& e) {
    std::cerr << "oracle: " << e.what() << "\n";
    return kExitOracleLimit;
  }
  return kExitInvalid;
}
