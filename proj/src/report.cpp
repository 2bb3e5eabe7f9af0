#include "tcoord/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace tcoord {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  return out;
}

std::string format_fixed(double value, int digits) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", digits, value);
  return buffer;
}

}  // namespace

std::string format_full(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

SolveTimeStats solve_time_stats(const SimTrace& trace) {
  SolveTimeStats stats;
  if (trace.solve_seconds.empty()) {
    return stats;
  }
  stats.max_seconds = *std::max_element(trace.solve_seconds.begin(),
                                        trace.solve_seconds.end());
  stats.mean_seconds = std::accumulate(trace.solve_seconds.begin(),
                                       trace.solve_seconds.end(), 0.0) /
                       static_cast<double>(trace.solve_seconds.size());
  return stats;
}

void write_trace_csv(const SimTrace& trace, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "step,time,agent,delta,rate,control,alpha,gamma,"
         "ref_x,ref_y,ref_z,pos_x,pos_y,pos_z,neighbors,"
         "solver_iterations,active_set,kkt_residual\n";
  for (const TraceRow& row : trace.rows) {
    out << row.step << ',' << format_full(row.time) << ',' << row.agent << ','
        << format_full(row.delta) << ',' << format_full(row.rate) << ','
        << format_full(row.control) << ',' << format_full(row.alpha) << ','
        << format_full(row.gamma);
    for (int i = 0; i < 3; ++i) out << ',' << format_full(row.reference(i));
    for (int i = 0; i < 3; ++i) out << ',' << format_full(row.actual(i));
    out << ',';
    for (std::size_t i = 0; i < row.neighbors.size(); ++i) {
      if (i > 0) out << '|';
      out << row.neighbors[i];
    }
    out << ',' << row.solver_iterations << ',' << row.active_set_size << ','
        << format_full(row.kkt_residual) << '\n';
  }
}

void write_timing_json(const SimTrace& trace, const std::string& path) {
  const SolveTimeStats stats = solve_time_stats(trace);
  nlohmann::json j;
  j["schema"] = 1;
  j["max_seconds"] = stats.max_seconds;
  j["mean_seconds"] = stats.mean_seconds;
  j["per_round_max_seconds"] = trace.solve_seconds;
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

RunReport make_report(const Scenario& scenario, const SimTrace& trace,
                      const std::string& digest,
                      const ConvergenceCertificate* certificate) {
  RunReport report;
  report.scenario_name = scenario.name;
  report.scenario_digest = digest;
  report.n_agents = trace.n_agents;
  report.rounds = trace.recorded_steps();
  report.step = trace.step;
  report.consensus_epsilon = scenario.consensus_epsilon;
  report.consensus_seconds = consensus_time(trace, scenario.consensus_epsilon);
  report.min_separation = std::numeric_limits<double>::infinity();
  for (const StepStats& s : trace.stats) {
    report.min_separation = std::min(report.min_separation, s.min_separation);
  }
  report.aborted = trace.aborted;
  report.abort_reason = trace.abort_reason;
  report.solve = solve_time_stats(trace);
  if (certificate != nullptr) {
    report.has_certificate = true;
    report.certificate_valid = certificate->valid;
    report.decay_rate = certificate->r_h;
    report.certificate_reason = certificate->reason;
  }
  if (scenario.mpc.cost.variant != CostVariant::kConsensus) {
    report.corridor = corridor_metrics(trace, scenario);
  }
  return report;
}

void write_summary_json(const RunReport& report, const std::string& path) {
  nlohmann::json j;
  j["schema"] = 1;
  j["scenario"] = report.scenario_name;
  j["scenario_digest"] = report.scenario_digest;
  j["n_agents"] = report.n_agents;
  j["rounds"] = report.rounds;
  j["step"] = report.step;
  j["consensus"] = {
      {"epsilon", report.consensus_epsilon},
      {"criterion",
       "first time with max pairwise deviation gap and max |deviation rate| "
       "both <= epsilon, holding through the end of the run"},
  };
  if (report.consensus_seconds) {
    j["consensus"]["seconds"] = *report.consensus_seconds;
  } else {
    j["consensus"]["seconds"] = nullptr;
  }
  j["min_separation"] = report.min_separation;
  j["aborted"] = report.aborted;
  if (report.aborted) {
    j["abort_reason"] = report.abort_reason;
  }
  if (report.has_certificate) {
    j["certificate"] = {{"valid", report.certificate_valid}};
    if (report.certificate_valid) {
      j["certificate"]["decay_rate"] = report.decay_rate;
    } else {
      j["certificate"]["reason"] = report.certificate_reason;
    }
  }
  if (report.corridor) {
    nlohmann::json c;
    c["passage_order"] = report.corridor->passage_order;
    c["min_distance"] = report.corridor->min_distance;
    c["collision"] = report.corridor->collision;
    if (report.corridor->post_corridor_consensus_time) {
      c["post_corridor_consensus_seconds"] =
          *report.corridor->post_corridor_consensus_time;
    } else {
      c["post_corridor_consensus_seconds"] = nullptr;
    }
    j["corridor"] = c;
  }
  j["outputs"] = report.outputs;
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

namespace {

constexpr int kWidth = 800;
constexpr int kHeight = 500;
constexpr int kLeft = 70;
constexpr int kRight = 30;
constexpr int kTop = 44;
constexpr int kBottom = 54;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                          "#bcbd22", "#17becf"};

std::string escape_xml(const std::string& text) {
  std::string out;
  for (const char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string tick_label(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.6g", value);
  return buffer;
}

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series) {
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  double y_min = x_min;
  double y_max = -x_min;
  for (const PlotSeries& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  }
  if (!(x_min <= x_max)) {  // nothing finite to draw
    x_min = 0.0;
    x_max = 1.0;
    y_min = 0.0;
    y_max = 1.0;
  }
  if (x_max - x_min < 1e-12) x_max = x_min + 1.0;
  const double pad = std::max(1e-12, 0.05 * (y_max - y_min));
  y_min -= pad;
  y_max += pad;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const auto px = [&](double x) {
    return kLeft + (x - x_min) / (x_max - x_min) * plot_w;
  };
  const auto py = [&](double y) {
    return kTop + (y_max - y) / (y_max - y_min) * plot_h;
  };

  std::ofstream out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << escape_xml(title) << "</text>\n";

  const int ticks = 5;
  for (int t = 0; t <= ticks; ++t) {
    const double fx = x_min + (x_max - x_min) * t / ticks;
    const double fy = y_min + (y_max - y_min) * t / ticks;
    out << "<line x1=\"" << format_fixed(px(fx), 2) << "\" y1=\"" << kTop
        << "\" x2=\"" << format_fixed(px(fx), 2) << "\" y2=\""
        << kTop + plot_h << "\" stroke=\"#dddddd\"/>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << format_fixed(py(fy), 2)
        << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
        << format_fixed(py(fy), 2) << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << format_fixed(px(fx), 2) << "\" y=\""
        << kHeight - kBottom + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << tick_label(fx) << "</text>\n";
    out << "<text x=\"" << kLeft - 8 << "\" y=\""
        << format_fixed(py(fy) + 4, 2)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << tick_label(fy) << "</text>\n";
  }
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">"
      << escape_xml(x_label) << "</text>\n";
  out << "<text x=\"18\" y=\"" << kTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 18 "
      << kTop + plot_h / 2 << ")\">" << escape_xml(y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % (sizeof kPalette / sizeof *kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (!std::isfinite(series[s].x[i]) || !std::isfinite(series[s].y[i])) {
        continue;
      }
      out << format_fixed(px(series[s].x[i]), 2) << ','
          << format_fixed(py(series[s].y[i]), 2) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << kLeft + plot_w - 8 << "\" y=\""
        << kTop + 16 + 16 * static_cast<int>(s)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"12\" fill=\""
        << color << "\">" << escape_xml(series[s].label) << "</text>\n";
  }
  out << "</svg>\n";
}

void write_gamma_plot(const SimTrace& trace, const std::string& path) {
  std::vector<PlotSeries> series(trace.n_agents);
  for (int i = 0; i < trace.n_agents; ++i) {
    series[i].label = "agent " + std::to_string(i);
  }
  for (const TraceRow& row : trace.rows) {
    series[row.agent].x.push_back(row.time);
    series[row.agent].y.push_back(row.gamma);
  }
  write_svg_plot(path, "Virtual time per agent", "time [s]", "gamma [s]",
                 series);
}

void write_separation_plot(const SimTrace& trace, const std::string& path) {
  PlotSeries s;
  s.label = "min pairwise distance";
  for (const StepStats& stats : trace.stats) {
    s.x.push_back(stats.time);
    s.y.push_back(stats.min_separation);
  }
  write_svg_plot(path, "Minimum pairwise distance", "time [s]",
                 "distance [m]", {s});
}

}  // namespace tcoord
