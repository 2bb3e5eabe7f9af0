#ifndef TCOORD_SIM_HPP
#define TCOORD_SIM_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tcoord/graph.hpp"
#include "tcoord/mission.hpp"
#include "tcoord/mpc.hpp"

namespace tcoord {

// Exogenous path-following error driving the timing corrections.
//   kNone       exact tracking, corrections identically zero
//   kSynthetic  corrections d_i e^{-nu k h} injected directly, sign
//               alternating with the agent index
//   kTracker    first-order kinematic tracking error with scheduled
//               along-track kicks; corrections computed from positions
struct DisturbanceModel {
  enum class Kind { kNone, kSynthetic, kTracker };

  struct Impulse {
    int step = 0;   // round index k >= 1 at which the kick lands
    int agent = 0;
    double along_track = 0.0;  // meters, along the current path tangent
  };

  Kind kind = Kind::kNone;
  double magnitude = 0.0;  // d, synthetic envelope at k = 0
  double nu = 1.0;         // decay rate of the error (both active kinds)
  std::vector<Impulse> impulses;      // tracker only
  std::vector<double> initial_error;  // tracker only: along-track, per agent
};

struct Scenario {
  std::string name;
  Topology topology;
  std::string topology_kind = "custom";  // complete/path/ring regenerate in
                                         // agent-count sweeps; custom cannot
  std::vector<DesiredTrajectory> trajectories;
  PhysicalBounds bounds;
  MpcConfig mpc;  // gamma_bounds ignored; derived from `bounds` on use
  Eigen::VectorXd gamma0;
  Eigen::VectorXd gamma_rate0;
  double duration = 0.0;  // mission time span, a multiple of mpc.step
  DisturbanceModel disturbance;
  double link_drop_probability = 0.0;
  std::uint64_t seed = 0;
  double consensus_epsilon = 0.01;
  double collision_threshold = 1.0;  // corridor proximity alarm distance

  int n_agents() const { return topology.n; }
  int steps() const;                 // rounds after the bootstrap
  MpcConfig effective_mpc() const;   // mpc with gamma_bounds filled in
  void validate() const;
};

// One agent at one recorded step. `delta`/`rate` are the slot-0 values the
// solve started from; `control` is the first planned input.
struct TraceRow {
  int step = 0;
  double time = 0.0;
  int agent = 0;
  double delta = 0.0;
  double rate = 0.0;
  double control = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;  // delta + time
  Eigen::Vector3d reference = Eigen::Vector3d::Zero();
  Eigen::Vector3d actual = Eigen::Vector3d::Zero();
  std::vector<int> neighbors;  // realized neighbor set this round
  int solver_iterations = 0;
  int active_set_size = 0;  // constraint rows tight at the returned solution
  double kkt_residual = 0.0;
};

struct StepStats {
  int step = 0;
  double time = 0.0;
  double max_gap = 0.0;         // max pairwise |delta_i - delta_j|
  double max_rate = 0.0;        // max |rate_i|
  double min_separation = 0.0;  // min pairwise distance of actual positions
};

// Rows appended n_agents at a time, one full round or nothing, so
// rows.size() == n_agents * stats.size() even for aborted runs. Wall-clock
// solve times live apart from the rows to keep those byte-reproducible;
// entry r of solve_seconds is the slowest agent solve of round r+1 (the
// bootstrap performs no solves).
struct SimTrace {
  std::vector<TraceRow> rows;
  std::vector<StepStats> stats;
  std::vector<double> solve_seconds;
  int n_agents = 0;
  double step = 0.0;
  bool aborted = false;
  std::string abort_reason;

  int recorded_steps() const { return static_cast<int>(stats.size()); }
  const TraceRow& row(int step, int agent) const {
    return rows[static_cast<std::size_t>(step) * n_agents + agent];
  }
};

// Executes the full mission: zero-input bootstrap at round 0, then per round
// measure -> correct -> shift -> solve -> record -> broadcast. Agents only
// read neighbor predictions from the previous round. A solve failure or an
// out-of-window shifted rate aborts with the trace recorded so far.
SimTrace run(const Scenario& scenario);

// First recorded time from which max_gap <= epsilon and max_rate <= epsilon
// hold through the end of the trace; nullopt if never.
std::optional<double> consensus_time(const SimTrace& trace, double epsilon);

// Advances the tracking error by one step (exponential decay plus an
// along-track kick) and returns the resulting vehicle position.
Eigen::Vector3d kinematic_tracker_step(Eigen::Vector3d& error,
                                       const TrajectorySample& reference,
                                       double nu, double impulse_along_track,
                                       double step);

struct CorridorMetrics {
  std::vector<int> passage_order;  // agents in order of corridor entry
  double min_distance = 0.0;       // over steps where both agents are inside
  bool collision = false;          // min_distance < threshold
  std::optional<double> post_corridor_consensus_time;
};

// Corridor-window safety summary. Distances compare commanded reference
// points while both agents' gamma lie inside [gate_lo, gate_hi]; entry order
// is by first gamma crossing of gate_lo, ties broken by agent index.
CorridorMetrics corridor_metrics(const SimTrace& trace,
                                 const Scenario& scenario);

}  // namespace tcoord

#endif  // TCOORD_SIM_HPP
