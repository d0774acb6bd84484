#include <algorithm>
#include <cstdlib>
#include <map>

#include <fmt/format.h>

#include "syncpipe/errors.hpp"
#include "syncpipe/io.hpp"

namespace syncpipe::io {

namespace {

constexpr double kLeft = 90.0;
constexpr double kWidth = 900.0;
constexpr double kLaneHeight = 32.0;
constexpr double kTop = 20.0;

std::pair<int, int> lane_order(const std::string& resource) {
  if (resource.rfind("stage", 0) == 0) return {0, std::atoi(resource.c_str() + 5)};
  return {1, std::atoi(resource.c_str() + 7)};
}

const char* fill_for(const std::string& block) {
  if (block == "AR") return "#d62728";
  switch (block.front()) {
    case 'F': return block.size() > 1 && block[1] == 'B' ? "#9467bd" : "#1f77b4";
    case 'B': return "#2ca02c";
    default: return "#ff7f0e";  // transfers
  }
}

}  // namespace

std::string gantt_svg(const Trace& trace) {
  if (trace.rows.empty()) throw ValidationError("empty trace", "nothing to draw");

  std::map<std::pair<int, int>, std::string> lanes;
  double horizon = trace.makespan;
  for (const TraceRow& r : trace.rows) {
    lanes.emplace(lane_order(r.resource), r.resource);
    horizon = std::max(horizon, r.end);
  }
  if (!(horizon > 0.0)) horizon = 1.0;
  std::map<std::string, int> lane_index;
  for (const auto& [key, name] : lanes) lane_index.emplace(name, static_cast<int>(lane_index.size()));

  const double height = kTop * 2 + kLaneHeight * static_cast<double>(lanes.size()) + 20.0;
  auto x_of = [&](double t) { return kLeft + kWidth * t / horizon; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" font-family=\"monospace\" "
      "font-size=\"11\">\n",
      kLeft + kWidth + 20.0, height);
  for (const auto& [key, name] : lanes) {
    const double y = kTop + kLaneHeight * lane_index.at(name);
    svg += fmt::format("<rect class=\"lane\" x=\"{:.3f}\" y=\"{:.3f}\" width=\"{:.3f}\" height=\"{:.3f}\" "
                       "fill=\"#f4f4f4\"/>\n",
                       kLeft, y, kWidth, kLaneHeight);
    svg += fmt::format("<text x=\"4\" y=\"{:.3f}\">{}</text>\n", y + kLaneHeight * 0.6, name);
  }
  for (const TraceRow& r : trace.rows) {
    const double y = kTop + kLaneHeight * lane_index.at(r.resource);
    const double x0 = x_of(r.start);
    const double w = std::max(0.0, x_of(r.end) - x0);
    if (r.block == "AR") {
      svg += fmt::format("<rect class=\"allreduce\" x=\"{:.3f}\" y=\"{:.3f}\" width=\"{:.3f}\" height=\"{:.3f}\" "
                         "fill=\"{}\" fill-opacity=\"0.6\"/>\n",
                         x0, y, w, kLaneHeight, fill_for(r.block));
      svg += fmt::format("<text x=\"{:.3f}\" y=\"{:.3f}\">AR</text>\n", x0 + 2.0, y + kLaneHeight * 0.6);
      continue;
    }
    svg += fmt::format("<rect class=\"event\" x=\"{:.3f}\" y=\"{:.3f}\" width=\"{:.3f}\" height=\"{:.3f}\" "
                       "fill=\"{}\" stroke=\"#333\"><title>{} m{} {}-{}</title></rect>\n",
                       x0, y + 3.0, w, kLaneHeight - 6.0, fill_for(r.block), r.block, r.microbatch,
                       format_seconds(r.start), format_seconds(r.end));
    svg += fmt::format("<text x=\"{:.3f}\" y=\"{:.3f}\" fill=\"#fff\">{}</text>\n", x0 + 2.0,
                       y + kLaneHeight * 0.6, r.microbatch);
  }
  const double axis_y = kTop + kLaneHeight * static_cast<double>(lanes.size()) + 14.0;
  svg += fmt::format("<text x=\"{:.3f}\" y=\"{:.3f}\">0</text>\n", kLeft, axis_y);
  svg += fmt::format("<text x=\"{:.3f}\" y=\"{:.3f}\" text-anchor=\"end\">{} s</text>\n", kLeft + kWidth, axis_y,
                     format_seconds(horizon));
  svg += "</svg>\n";
  return svg;
}

}  // namespace syncpipe::io
