#ifndef TCOORD_REPORT_HPP
#define TCOORD_REPORT_HPP

#include <optional>
#include <string>
#include <vector>

#include "tcoord/analysis.hpp"
#include "tcoord/sim.hpp"

namespace tcoord {

// Fixed 17-significant-digit rendering; round-trips doubles and keeps file
// output byte-reproducible across runs.
std::string format_full(double value);

struct SolveTimeStats {
  double max_seconds = 0.0;
  double mean_seconds = 0.0;
};

SolveTimeStats solve_time_stats(const SimTrace& trace);

// One row per agent-step. Wall-clock data is deliberately absent; it goes to
// the timing file so the trace is identical across reruns of the same seed.
void write_trace_csv(const SimTrace& trace, const std::string& path);

// Per-round slowest solve plus aggregates, kept apart from the deterministic
// artifacts.
void write_timing_json(const SimTrace& trace, const std::string& path);

struct RunReport {
  std::string scenario_name;
  std::string scenario_digest;
  int n_agents = 0;
  int rounds = 0;
  double step = 0.0;
  double consensus_epsilon = 0.0;
  std::optional<double> consensus_seconds;
  double min_separation = 0.0;
  bool aborted = false;
  std::string abort_reason;
  SolveTimeStats solve;
  bool has_certificate = false;  // horizon-1 runs only
  bool certificate_valid = false;
  double decay_rate = 0.0;
  std::string certificate_reason;
  std::optional<CorridorMetrics> corridor;  // corridor cost variants only
  std::vector<std::string> outputs;
};

// Digest comes from the scenario document text; pass the certificate when one
// was computed (horizon 1).
RunReport make_report(const Scenario& scenario, const SimTrace& trace,
                      const std::string& digest,
                      const ConvergenceCertificate* certificate);

// Everything in the report except wall-clock timing, plus the consensus-time
// criterion so the numbers are interpretable on their own.
void write_summary_json(const RunReport& report, const std::string& path);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series);

// Virtual time per agent over mission time.
void write_gamma_plot(const SimTrace& trace, const std::string& path);

// Smallest pairwise vehicle distance over mission time.
void write_separation_plot(const SimTrace& trace, const std::string& path);

}  // namespace tcoord

#endif  // TCOORD_REPORT_HPP
