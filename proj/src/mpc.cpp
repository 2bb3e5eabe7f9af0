#include "tcoord/mpc.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tcoord {

namespace {

void require_sequences(const Eigen::VectorXd& own_delta,
                       const NeighborBundle& neighbors) {
  for (const auto& e : neighbors.entries) {
    if (e.delta.size() != own_delta.size()) {
      throw std::invalid_argument(
          "neighbor " + std::to_string(e.index) +
          " broadcast length " + std::to_string(e.delta.size()) +
          " does not match own horizon " + std::to_string(own_delta.size()));
    }
    if (e.index == neighbors.own_index) {
      throw std::invalid_argument("agent listed as its own neighbor");
    }
  }
}

}  // namespace

void MpcConfig::validate(int n_agents) const {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (step <= 0.0) throw std::invalid_argument("step must be positive");
  if (weight_sync < 0.0 || weight_rate <= 0.0 || weight_effort <= 0.0) {
    throw std::invalid_argument("weights must be positive (sync may be zero)");
  }
  if (rate_floor() > 0.0 || rate_ceil() < 0.0) {
    throw std::invalid_argument("nominal pace must lie inside the rate bounds");
  }
  if (gamma_bounds.accel_max <= 0.0) {
    throw std::invalid_argument("pace acceleration bound must be positive");
  }
  if (closed_form_k1 &&
      (horizon != 1 || cost.variant != CostVariant::kConsensus)) {
    throw std::invalid_argument(
        "closed-form mode requires horizon 1 and the consensus cost");
  }
  if (cost.variant == CostVariant::kRace) {
    if (cost.psi.size() != n_agents) {
      throw std::invalid_argument("race needs one tie-break weight per agent");
    }
    for (int i = 0; i < n_agents; ++i) {
      for (int j = i + 1; j < n_agents; ++j) {
        if (cost.psi[i] == cost.psi[j]) {
          throw std::invalid_argument(
              "race tie-break weights must be distinct (agents " +
              std::to_string(i) + " and " + std::to_string(j) + ")");
        }
      }
    }
  }
  if (cost.variant != CostVariant::kConsensus && cost.gate_hi < cost.gate_lo) {
    throw std::invalid_argument("corridor gate interval is empty");
  }
}

AgentState AgentState::from_control(double delta0, double rate0,
                                    const Eigen::VectorXd& control, double step,
                                    int step_index) {
  const int k = static_cast<int>(control.size());
  AgentState s;
  s.step_index = step_index;
  s.control = control;
  s.delta.resize(k + 1);
  s.rate.resize(k + 1);
  s.delta[0] = delta0;
  s.rate[0] = rate0;
  for (int t = 0; t < k; ++t) {
    s.delta[t + 1] = s.delta[t] + step * s.rate[t] + 0.5 * step * step * control[t];
    s.rate[t + 1] = s.rate[t] + step * control[t];
  }
  return s;
}

double AgentState::recursion_residual(double step) const {
  double worst = 0.0;
  for (int t = 0; t + 1 < delta.size(); ++t) {
    const double d = delta[t] + step * rate[t] + 0.5 * step * step * control[t];
    const double r = rate[t] + step * control[t];
    worst = std::max(worst, std::abs(delta[t + 1] - d));
    worst = std::max(worst, std::abs(rate[t + 1] - r));
  }
  return worst;
}

AgentState bootstrap_state(double gamma0, double gamma_rate0, int horizon,
                           double step) {
  if (gamma0 < 0.0) {
    throw std::invalid_argument("initial virtual time must be nonnegative");
  }
  return AgentState::from_control(gamma0, gamma_rate0 - 1.0,
                                  Eigen::VectorXd::Zero(horizon), step, 0);
}

double alpha_correction(const Eigen::Vector3d& reference_position,
                        const Eigen::Vector3d& reference_velocity,
                        const Eigen::Vector3d& actual_position, double beta,
                        double delta_reg) {
  if (delta_reg <= 0.0) throw std::invalid_argument("delta_reg must be positive");
  const Eigen::Vector3d offset = reference_position - actual_position;
  return beta * offset.dot(reference_velocity) /
         (reference_velocity.norm() + delta_reg);
}

double cost_consensus(const Eigen::VectorXd& own_delta,
                      const NeighborBundle& neighbors) {
  require_sequences(own_delta, neighbors);
  if (neighbors.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : neighbors.entries) {
    for (int t = 1; t < own_delta.size(); ++t) {
      const double gap = own_delta[t] - e.delta[t];
      sum += gap * gap;
    }
  }
  return sum / neighbors.count();
}

double cost_ordered(const Eigen::VectorXd& own_delta,
                    const NeighborBundle& neighbors, const CostParams& params,
                    double t_k) {
  require_sequences(own_delta, neighbors);
  if (neighbors.empty()) return 0.0;
  double sum = 0.0;
  for (int t = 1; t < own_delta.size(); ++t) {
    const double gamma = own_delta[t] + t_k;
    const bool gated = params.gate_lo <= gamma && gamma <= params.gate_hi;
    for (const auto& e : neighbors.entries) {
      // Index difference is the same in 0- and 1-based labelling.
      const double target =
          gated ? (neighbors.own_index - e.index) * params.separation_delta : 0.0;
      const double err = own_delta[t] - e.delta[t] + target;
      sum += err * err;
    }
  }
  return params.normalize ? sum / neighbors.count() : sum;
}

double cost_race(const Eigen::VectorXd& own_delta,
                 const NeighborBundle& neighbors, const CostParams& params,
                 double t_k) {
  require_sequences(own_delta, neighbors);
  if (neighbors.empty()) return 0.0;
  if (neighbors.own_index >= params.psi.size()) {
    throw std::invalid_argument("no tie-break weight for agent " +
                                std::to_string(neighbors.own_index));
  }
  const double psi = params.psi[neighbors.own_index];
  double sum = 0.0;
  for (int t = 1; t < own_delta.size(); ++t) {
    const double gamma = own_delta[t] + t_k;
    const bool gated = params.gate_lo <= gamma && gamma <= params.gate_hi;
    for (const auto& e : neighbors.entries) {
      const double gap = e.delta[t] - own_delta[t];  // positive: neighbor ahead
      if (gated) {
        const double behind = std::max(0.0, gap);
        sum += behind * behind;
        // Exact-tie penalty; piecewise constant, so it never enters the QP.
        if (std::abs(gap) <= params.tie_tolerance) sum += psi;
      } else {
        sum += gap * gap;
      }
    }
  }
  return params.normalize ? sum / neighbors.count() : sum;
}

double total_cost(const AgentState& state, const NeighborBundle& neighbors,
                  const MpcConfig& config, double t_k) {
  double sync = 0.0;
  switch (config.cost.variant) {
    case CostVariant::kConsensus:
      sync = cost_consensus(state.delta, neighbors);
      break;
    case CostVariant::kOrderedSeparation:
      sync = cost_ordered(state.delta, neighbors, config.cost, t_k);
      break;
    case CostVariant::kRace:
      sync = cost_race(state.delta, neighbors, config.cost, t_k);
      break;
  }
  const double pace = state.rate.tail(state.rate.size() - 1).squaredNorm();
  const double effort = state.control.squaredNorm();
  return config.weight_sync * sync + config.weight_rate * pace +
         config.weight_effort * effort;
}

std::pair<double, double> shift_initialize(const AgentState& previous,
                                           double alpha) {
  if (previous.delta.size() < 2) {
    throw std::invalid_argument("previous prediction has no slot 1 to shift");
  }
  return {previous.delta[1] - alpha, previous.rate[1]};
}

}  // namespace tcoord
