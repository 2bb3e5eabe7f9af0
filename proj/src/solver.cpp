#include "tcoord/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace tcoord {

Gains gains(double weight_sync, double weight_rate, double weight_effort,
            double step) {
  if (weight_effort <= 0.0) {
    throw std::invalid_argument("effort weight must be positive");
  }
  if (weight_rate <= 0.0 || weight_sync < 0.0) {
    throw std::invalid_argument("rate weight must be positive, sync nonnegative");
  }
  if (step <= 0.0) throw std::invalid_argument("step must be positive");
  const double h2 = step * step;
  const double s = weight_effort + weight_rate * h2 + weight_sync * h2 * h2 / 4.0;
  Gains g;
  g.gap_gain = weight_sync * h2 / (2.0 * s);
  g.rate_gain = (weight_rate * step + weight_sync * h2 * step / 2.0) / s;
  return g;
}

double solve_k1_unconstrained(double rate_prev, double mean_gap, double alpha,
                              const Gains& g) {
  return -g.gap_gain * mean_gap - g.rate_gain * rate_prev + g.gap_gain * alpha;
}

CondensedQp condense(const MpcConfig& config, double delta0, double rate0,
                     const NeighborBundle& neighbors, double t_k) {
  const int k = config.horizon;
  const double h = config.step;
  const double lo = config.rate_floor();
  const double hi = config.rate_ceil();
  if (rate0 < lo - 1e-9 || rate0 > hi + 1e-9) {
    throw std::domain_error("initial rate " + std::to_string(rate0) +
                            " outside [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
  }

  CondensedQp qp;
  qp.hessian = 2.0 * config.weight_effort *
               Eigen::MatrixXd::Identity(k, k);
  qp.gradient = Eigen::VectorXd::Zero(k);
  qp.constant = 0.0;

  // Prediction maps over the horizon: slot t depends linearly on u.
  //   rate_t  = rate0 + h * sum_{s<t} u_s
  //   delta_t = delta0 + t*h*rate0 + sum_{s<t} h^2 (t - s - 1/2) u_s
  Eigen::MatrixXd rate_map = Eigen::MatrixXd::Zero(k, k);   // row t-1: slot t
  Eigen::MatrixXd delta_map = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd nominal(k);  // zero-input deviation, freezes gate decisions
  for (int t = 1; t <= k; ++t) {
    for (int s = 0; s < t; ++s) {
      rate_map(t - 1, s) = h;
      delta_map(t - 1, s) = h * h * (t - s - 0.5);
    }
    nominal[t - 1] = delta0 + t * h * rate0;
  }

  auto add_atom = [&qp](double coef, const Eigen::VectorXd& row, double offset) {
    qp.hessian.noalias() += 2.0 * coef * row * row.transpose();
    qp.gradient.noalias() += 2.0 * coef * offset * row;
    qp.constant += coef * offset * offset;
  };

  for (int t = 1; t <= k; ++t) {
    add_atom(config.weight_rate, rate_map.row(t - 1).transpose(), rate0);
  }

  if (!neighbors.empty()) {
    const bool normalized =
        config.cost.variant == CostVariant::kConsensus || config.cost.normalize;
    const double coef =
        normalized ? config.weight_sync / neighbors.count() : config.weight_sync;
    for (int t = 1; t <= k; ++t) {
      const Eigen::VectorXd row = delta_map.row(t - 1).transpose();
      const bool gated = config.cost.variant != CostVariant::kConsensus &&
                         config.cost.gate_lo <= nominal[t - 1] + t_k &&
                         nominal[t - 1] + t_k <= config.cost.gate_hi;
      for (const auto& e : neighbors.entries) {
        const double base = nominal[t - 1] - e.delta[t];
        switch (config.cost.variant) {
          case CostVariant::kConsensus:
            add_atom(coef, row, base);
            break;
          case CostVariant::kOrderedSeparation:
            add_atom(coef, row,
                     gated ? base + (neighbors.own_index - e.index) *
                                        config.cost.separation_delta
                           : base);
            break;
          case CostVariant::kRace:
            if (!gated) {
              add_atom(coef, row, base);
            } else if (base < 0.0) {
              // Hinge active branch: penalized only while trailing.
              add_atom(coef, row, base);
            }
            break;
        }
      }
    }
  }

  // Shift gradient/constant so they are taken about u = 0 exactly: add_atom
  // already does that, since each offset was evaluated at u = 0.

  const int m = 4 * k;
  qp.rows = Eigen::MatrixXd::Zero(m, k);
  qp.rhs = Eigen::VectorXd::Zero(m);
  for (int t = 0; t < k; ++t) {
    qp.rows(2 * t, t) = 1.0;
    qp.rhs[2 * t] = config.gamma_bounds.accel_max;
    qp.rows(2 * t + 1, t) = -1.0;
    qp.rhs[2 * t + 1] = config.gamma_bounds.accel_max;
  }
  for (int t = 1; t <= k; ++t) {
    const int r = 2 * k + 2 * (t - 1);
    qp.rows.row(r) = rate_map.row(t - 1);
    qp.rhs[r] = hi - rate0;
    qp.rows.row(r + 1) = -rate_map.row(t - 1);
    qp.rhs[r + 1] = rate0 - lo;
  }
  // The initial rate may sit on a bound up to solver feasibility noise; keep
  // u = 0 exactly feasible.
  for (int r = 0; r < m; ++r) {
    if (qp.rhs[r] < 0.0) qp.rhs[r] = 0.0;
  }
  return qp;
}

namespace {

struct WorkingSetSolve {
  Eigen::VectorXd point;
  Eigen::VectorXd multipliers;
  bool ok = false;
};

WorkingSetSolve solve_working_set(const CondensedQp& qp,
                                  const std::vector<int>& active) {
  const int n = static_cast<int>(qp.hessian.rows());
  const int w = static_cast<int>(active.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + w, n + w);
  kkt.topLeftCorner(n, n) = qp.hessian;
  for (int i = 0; i < w; ++i) {
    kkt.block(n + i, 0, 1, n) = qp.rows.row(active[i]);
    kkt.block(0, n + i, n, 1) = qp.rows.row(active[i]).transpose();
  }
  Eigen::VectorXd rhs(n + w);
  rhs.head(n) = -qp.gradient;
  for (int i = 0; i < w; ++i) rhs[n + i] = qp.rhs[active[i]];

  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  WorkingSetSolve out;
  if (!lu.isInvertible()) return out;
  const Eigen::VectorXd sol = lu.solve(rhs);
  out.point = sol.head(n);
  out.multipliers = sol.tail(w);
  out.ok = true;
  return out;
}

}  // namespace

QpSolution solve_qp(const CondensedQp& qp, double tolerance,
                    int iteration_cap_per_dim) {
  const int n = static_cast<int>(qp.hessian.rows());
  const int m = static_cast<int>(qp.rows.rows());
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < m; ++r) {
    if (qp.rhs[r] < 0.0) {
      throw QpError("start point infeasible at row " + std::to_string(r), u,
                    qp.rhs[r]);
    }
  }

  std::vector<int> active;
  std::vector<char> in_active(m, 0);
  std::vector<char> parked(m, 0);
  int last_added = -1;
  const int cap = iteration_cap_per_dim * std::max(n, 1);
  const double mult_tol = 1e-11;

  for (int iter = 1; iter <= cap; ++iter) {
    const WorkingSetSolve eq = solve_working_set(qp, active);
    if (!eq.ok) {
      // A dependent row slipped in on a noise-level step; back it out and
      // keep it parked until the iterate genuinely moves again.
      if (last_added >= 0 && in_active[last_added]) {
        in_active[last_added] = 0;
        parked[last_added] = 1;
        active.erase(std::find(active.begin(), active.end(), last_added));
        last_added = -1;
        continue;
      }
      throw QpError("singular working set of size " +
                        std::to_string(active.size()),
                    u, std::numeric_limits<double>::quiet_NaN());
    }
    const Eigen::VectorXd p = eq.point - u;
    const double scale = std::max(1.0, u.lpNorm<Eigen::Infinity>());

    if (p.lpNorm<Eigen::Infinity>() <= 1e-11 * scale) {
      // Stationary on the working set; release the most negative multiplier.
      int drop = -1;
      double most_negative = -mult_tol;
      for (int i = 0; i < static_cast<int>(active.size()); ++i) {
        const double lam = eq.multipliers[i];
        if (lam < most_negative - 1e-12 ||
            (drop >= 0 && std::abs(lam - most_negative) <= 1e-12 &&
             active[i] < active[drop])) {
          most_negative = std::min(lam, most_negative);
          drop = i;
        }
      }
      if (drop < 0) {
        QpSolution out;
        out.u = eq.point;
        out.active_set = active;
        out.iterations = iter;
        Eigen::VectorXd grad = qp.hessian * out.u + qp.gradient;
        for (int i = 0; i < static_cast<int>(active.size()); ++i) {
          grad.noalias() +=
              eq.multipliers[i] * qp.rows.row(active[i]).transpose();
        }
        out.kkt_residual = grad.lpNorm<Eigen::Infinity>();
        if (out.kkt_residual > tolerance) {
          throw QpError("stationarity residual " +
                            std::to_string(out.kkt_residual) +
                            " above tolerance",
                        out.u, out.kkt_residual);
        }
        return out;
      }
      in_active[active[drop]] = 0;
      active.erase(active.begin() + drop);
      continue;
    }

    // Step toward the working-set optimum, stopping at the first blocking row.
    const double p_inf = p.lpNorm<Eigen::Infinity>();
    double step = 1.0;
    int blocker = -1;
    for (int r = 0; r < m; ++r) {
      if (in_active[r] || parked[r]) continue;
      const double dir = qp.rows.row(r).dot(p);
      if (dir <= 1e-12 * std::max(1.0, p_inf)) continue;
      const double slack = std::max(0.0, qp.rhs[r] - qp.rows.row(r).dot(u));
      const double ratio = slack / dir;
      if (ratio < step - 1e-12) {
        step = ratio;
        blocker = r;
      } else if (blocker >= 0 && std::abs(ratio - step) <= 1e-12 && r < blocker) {
        blocker = r;
      }
    }
    u += step * p;
    if (step * p_inf > 1e-11 * scale) {
      std::fill(parked.begin(), parked.end(), 0);
    }
    if (blocker >= 0 && step < 1.0) {
      in_active[blocker] = 1;
      active.insert(std::lower_bound(active.begin(), active.end(), blocker),
                    blocker);
      last_added = blocker;
    }
  }
  throw QpError("active-set iteration cap " + std::to_string(cap) + " reached",
                u, std::numeric_limits<double>::quiet_NaN());
}

}  // namespace tcoord
