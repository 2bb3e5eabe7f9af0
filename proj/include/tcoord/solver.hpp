#ifndef TCOORD_SOLVER_HPP
#define TCOORD_SOLVER_HPP

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "tcoord/mpc.hpp"

namespace tcoord {

// Feedback gains of the horizon-1 problem after eliminating the prediction:
// gap_gain multiplies the mean neighbor disagreement, rate_gain the own pace
// deviation. Denominator S = w_effort + w_rate h^2 + w_sync h^4 / 4.
struct Gains {
  double gap_gain = 0.0;
  double rate_gain = 0.0;
};

Gains gains(double weight_sync, double weight_rate, double weight_effort,
            double step);

// Stationary point of the horizon-1 consensus problem without constraints:
//   u = -gap_gain * mean_gap - rate_gain * rate_prev + gap_gain * alpha
// where mean_gap averages (own slot-1 deviation - neighbor slot-1 deviation).
double solve_k1_unconstrained(double rate_prev, double mean_gap, double alpha,
                              const Gains& g);

// Condensed quadratic program over the control sequence u in R^K:
//   minimize 0.5 u^T hessian u + gradient^T u + constant
//   subject to rows * u <= rhs
// Row layout: 2*t and 2*t+1 are the upper/lower control bounds for slot t
// (t = 0..K-1); after those, 2K + 2*(t-1) and 2K + 2*(t-1)+1 are the
// upper/lower pace-rate bounds for prediction slot t (t = 1..K).
struct CondensedQp {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd rows;
  Eigen::VectorXd rhs;
  double constant = 0.0;
};

// Builds the QP for one agent at time t_k from the shifted initial condition.
// The corridor gate and the race hinge are piecewise in the decision
// variables; both are frozen on the zero-input prediction from
// (delta0, rate0) so the model stays quadratic. The race tie term has no
// quadratic part and is left out of the model entirely.
CondensedQp condense(const MpcConfig& config, double delta0, double rate0,
                     const NeighborBundle& neighbors, double t_k);

struct QpSolution {
  Eigen::VectorXd u;
  std::vector<int> active_set;  // row indices tight at the solution, sorted
  int iterations = 0;
  double kkt_residual = 0.0;
};

struct QpError : std::runtime_error {
  QpError(const std::string& what, Eigen::VectorXd best, double residual)
      : std::runtime_error(what), best_u(std::move(best)), residual(residual) {}
  Eigen::VectorXd best_u;
  double residual = 0.0;
};

// Primal active-set method. Starts from u = 0 (always feasible for bounds
// produced by condense), takes the lowest row index whenever several
// constraints block or several multipliers tie, and stops once the KKT
// stationarity residual drops below `tolerance` with nonnegative multipliers.
QpSolution solve_qp(const CondensedQp& qp, double tolerance = 1e-9,
                    int iteration_cap_per_dim = 100);

}  // namespace tcoord

#endif  // TCOORD_SOLVER_HPP
