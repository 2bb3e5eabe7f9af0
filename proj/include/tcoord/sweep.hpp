#ifndef TCOORD_SWEEP_HPP
#define TCOORD_SWEEP_HPP

#include <optional>
#include <string>
#include <vector>

#include "tcoord/sim.hpp"

namespace tcoord {

// Grid axes; an empty axis keeps the base scenario's value.
struct SweepGrid {
  std::vector<int> horizons;
  std::vector<int> agent_counts;
  std::vector<double> steps;
};

struct SweepCell {
  int horizon = 0;
  int agents = 0;
  double step = 0.0;
  bool ok = false;
  std::string error;
  std::optional<double> consensus_seconds;
  double max_solve_seconds = 0.0;
  double mean_solve_seconds = 0.0;
};

// Cells ordered step-major, then agents, then horizon (the horizon axis is
// innermost, matching the per-agent-count column groups of the aggregate
// table).
struct SweepResult {
  SweepGrid grid;
  std::vector<SweepCell> cells;

  const SweepCell* find(double step, int agents, int horizon) const;
};

// Keeps the first `agents` trajectories and initial entries; generated
// topologies (complete/path/ring) are rebuilt at the reduced size, custom
// edge lists cannot be and are rejected.
Scenario restrict_agents(const Scenario& base, int agents);

// One simulation per grid point, all with the base scenario's seed, spread
// over at most `jobs` worker threads. A failing cell carries its error and
// does not stop the sweep.
SweepResult run_sweep(const Scenario& base, const SweepGrid& grid, int jobs);

// Long-format aggregate, grouped like the consensus-vs-horizon table: one row
// per cell with consensus time and solve-time stats.
std::string sweep_table_csv(const SweepResult& result);

// Expected qualitative behavior across the grid; returns one message per
// violation, so empty means every trend holds:
//   - consensus time strictly decreases as the horizon grows (fixed rest)
//   - consensus time does not increase as the agent count grows (fixed rest)
//   - mean solve time at the smallest horizon is below the largest horizon's
std::vector<std::string> trend_violations(const SweepResult& result);

}  // namespace tcoord

#endif  // TCOORD_SWEEP_HPP
