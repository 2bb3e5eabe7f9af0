#ifndef TCOORD_MPC_HPP
#define TCOORD_MPC_HPP

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tcoord/mission.hpp"

namespace tcoord {

enum class CostVariant { kConsensus, kOrderedSeparation, kRace };

struct CostParams {
  CostVariant variant = CostVariant::kConsensus;
  double separation_delta = 0.0;  // signed inter-agent offset (ordered variant)
  double gate_lo = 0.0;           // gamma interval where the corridor term is live
  double gate_hi = 0.0;
  Eigen::VectorXd psi;            // per-agent race tie-break weights
  bool normalize = false;         // divide corridor sums by the neighbor count
  double tie_tolerance = 0.0;     // |gap| <= tol counts as a tie in the race
};

struct MpcConfig {
  double weight_sync = 1.0;    // disagreement with neighbors
  double weight_rate = 1.0;    // deviation of pace from nominal
  double weight_effort = 1.0;  // control effort
  int horizon = 1;
  double step = 0.1;           // seconds between replans
  GammaBounds gamma_bounds;
  double beta = 1.0;           // gain on the along-track timing correction
  double delta_reg = 1e-6;     // regularizer in the correction denominator
  CostParams cost;
  bool closed_form_k1 = false;  // bypass the QP (horizon 1, consensus only)

  double rate_floor() const { return gamma_bounds.rate_min - 1.0; }
  double rate_ceil() const { return gamma_bounds.rate_max - 1.0; }
  void validate(int n_agents) const;
};

// Predicted deviation/rate/control sequences of one agent at one replanning
// step: delta and rate carry slots 0..K, control slots 0..K-1.
struct AgentState {
  Eigen::VectorXd delta;
  Eigen::VectorXd rate;
  Eigen::VectorXd control;
  int step_index = 0;

  static AgentState from_control(double delta0, double rate0,
                                 const Eigen::VectorXd& control, double step,
                                 int step_index);
  // Max violation of the double-integrator recursion across the horizon.
  double recursion_residual(double step) const;
};

// Zero-input propagation used before the first solve: the rate prediction is
// held constant and the deviation advances with it.
AgentState bootstrap_state(double gamma0, double gamma_rate0, int horizon,
                           double step);

// Deviation sequences most recently broadcast by the realized neighbors.
struct NeighborBundle {
  struct Entry {
    int index = 0;  // 0-based agent id of the neighbor
    Eigen::VectorXd delta;
  };
  int own_index = 0;
  std::vector<Entry> entries;

  bool empty() const { return entries.empty(); }
  int count() const { return static_cast<int>(entries.size()); }
};

// Along-track timing correction from the tracking error: positive when the
// vehicle trails the commanded reference point, negative when it leads.
double alpha_correction(const Eigen::Vector3d& reference_position,
                        const Eigen::Vector3d& reference_velocity,
                        const Eigen::Vector3d& actual_position, double beta,
                        double delta_reg);

// All cost terms compare prediction slots 1..K; slot 0 is fixed by the
// initial condition and cannot be influenced by the decision variables.
double cost_consensus(const Eigen::VectorXd& own_delta,
                      const NeighborBundle& neighbors);
double cost_ordered(const Eigen::VectorXd& own_delta,
                    const NeighborBundle& neighbors, const CostParams& params,
                    double t_k);
double cost_race(const Eigen::VectorXd& own_delta,
                 const NeighborBundle& neighbors, const CostParams& params,
                 double t_k);
double total_cost(const AgentState& state, const NeighborBundle& neighbors,
                  const MpcConfig& config, double t_k);

// Warm start for step k from the step k-1 solution: slot 1 becomes the new
// slot 0 and the timing correction is absorbed into the deviation.
std::pair<double, double> shift_initialize(const AgentState& previous,
                                           double alpha);

}  // namespace tcoord

#endif  // TCOORD_MPC_HPP
