#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "tcoord/solver.hpp"

using tcoord::CondensedQp;
using tcoord::Gains;
using tcoord::MpcConfig;
using tcoord::NeighborBundle;
using tcoord::QpSolution;

namespace {

MpcConfig config_for(double w1, double w2, double w3, double h, int horizon,
                     double rate_band = 10.0, double accel = 100.0) {
  MpcConfig cfg;
  cfg.weight_sync = w1;
  cfg.weight_rate = w2;
  cfg.weight_effort = w3;
  cfg.step = h;
  cfg.horizon = horizon;
  cfg.gamma_bounds.rate_min = 1.0 - rate_band;
  cfg.gamma_bounds.rate_max = 1.0 + rate_band;
  cfg.gamma_bounds.accel_max = accel;
  return cfg;
}

NeighborBundle slot1_neighbor(double value, int horizon) {
  NeighborBundle nb;
  nb.own_index = 0;
  Eigen::VectorXd seq = Eigen::VectorXd::Constant(horizon + 1, value);
  nb.entries.push_back({1, seq});
  return nb;
}

double qp_objective(const CondensedQp& qp, const Eigen::VectorXd& u) {
  return 0.5 * u.dot(qp.hessian * u) + qp.gradient.dot(u) + qp.constant;
}

// Global optimum of a strictly convex QP by enumerating candidate active
// sets: the equality-constrained solution with nonnegative multipliers that
// is feasible everywhere is the unique KKT point.
Eigen::VectorXd enumerate_qp_optimum(const CondensedQp& qp) {
  const int n = static_cast<int>(qp.hessian.rows());
  const int m = static_cast<int>(qp.rows.rows());
  Eigen::VectorXd best;
  double best_value = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> active;
    for (int r = 0; r < m; ++r) {
      if (mask & (1u << r)) active.push_back(r);
    }
    const int w = static_cast<int>(active.size());
    if (w > n) continue;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + w, n + w);
    kkt.topLeftCorner(n, n) = qp.hessian;
    Eigen::VectorXd rhs(n + w);
    rhs.head(n) = -qp.gradient;
    for (int i = 0; i < w; ++i) {
      kkt.block(n + i, 0, 1, n) = qp.rows.row(active[i]);
      kkt.block(0, n + i, n, 1) = qp.rows.row(active[i]).transpose();
      rhs[n + i] = qp.rhs[active[i]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd u = sol.head(n);
    if (w > 0 && sol.tail(w).minCoeff() < -1e-9) continue;
    if (((qp.rows * u) - qp.rhs).maxCoeff() > 1e-9) continue;
    const double value = qp_objective(qp, u);
    if (value < best_value) {
      best_value = value;
      best = u;
    }
  }
  REQUIRE(best.size() == n);
  return best;
}

}  // namespace

TEST_CASE("feedback gains match the eliminated horizon-1 problem") {
  const Gains g = tcoord::gains(1.0, 1.0, 1.0, 0.1);
  // S = 1 + 0.01 + 0.000025 = 1.010025.
  CHECK(g.gap_gain == doctest::Approx(0.01 / (2.0 * 1.010025)).epsilon(1e-12));
  CHECK(g.rate_gain == doctest::Approx(0.1005 / 1.010025).epsilon(1e-12));
  CHECK(g.gap_gain == doctest::Approx(0.0049504).epsilon(1e-4));
  CHECK(g.rate_gain == doctest::Approx(0.0995025).epsilon(1e-5));

  // No disagreement weight, no consensus force.
  const Gains pace_only = tcoord::gains(0.0, 1.0, 1.0, 0.1);
  CHECK(pace_only.gap_gain == 0.0);
  CHECK(pace_only.rate_gain == doctest::Approx(0.1 / 1.01));

  // Uniform weight scaling cancels.
  const Gains scaled = tcoord::gains(7.0, 7.0, 7.0, 0.1);
  CHECK(scaled.gap_gain == doctest::Approx(g.gap_gain).epsilon(1e-14));
  CHECK(scaled.rate_gain == doctest::Approx(g.rate_gain).epsilon(1e-14));

  CHECK_THROWS(tcoord::gains(1.0, 1.0, 0.0, 0.1));
  CHECK_THROWS(tcoord::gains(1.0, 0.0, 1.0, 0.1));
  CHECK_THROWS(tcoord::gains(-1.0, 1.0, 1.0, 0.1));
  CHECK_THROWS(tcoord::gains(1.0, 1.0, 1.0, 0.0));
}

TEST_CASE("closed-form law hits the scripted equilibria") {
  const Gains g = tcoord::gains(1.0, 1.0, 1.0, 0.1);

  CHECK(tcoord::solve_k1_unconstrained(0.0, 0.0, 0.0, g) == 0.0);

  // Two agents, deviations 1 and 0: forces are antisymmetric.
  const double u1 = tcoord::solve_k1_unconstrained(0.0, 1.0 - 0.0, 0.0, g);
  const double u2 = tcoord::solve_k1_unconstrained(0.0, 0.0 - 1.0, 0.0, g);
  CHECK(u1 == doctest::Approx(-g.gap_gain));
  CHECK(u2 == doctest::Approx(g.gap_gain));

  // The timing correction drives through the same channel as the gap.
  CHECK(tcoord::solve_k1_unconstrained(0.0, 0.0, 1.0, g) ==
        doctest::Approx(g.gap_gain));
}

TEST_CASE("closed form minimizes the horizon-1 cost") {
  const MpcConfig cfg = config_for(2.0, 1.5, 0.8, 0.15, 1);
  const double delta0 = 0.7, rate0 = -0.1, neighbor = 0.2;
  const NeighborBundle nb = slot1_neighbor(neighbor, 1);

  const auto objective = [&](double u) {
    return tcoord::total_cost(
        tcoord::AgentState::from_control(delta0, rate0,
                                         Eigen::VectorXd::Constant(1, u),
                                         cfg.step, 0),
        nb, cfg, 0.0);
  };
  // Value-only search localizes the minimizer down to the flat region left
  // by double-precision cost evaluations.
  const double u_scan = tcoord_tests::golden_section_min(objective, -10.0, 10.0);

  // The cost is exactly quadratic in u, so a three-point parabola vertex
  // recovers the minimizer to full precision.
  const double j_lo = objective(-1.0), j_mid = objective(0.0),
               j_hi = objective(1.0);
  const double u_vertex = (j_lo - j_hi) / (2.0 * (j_lo - 2.0 * j_mid + j_hi));

  const Gains g = tcoord::gains(cfg.weight_sync, cfg.weight_rate,
                                cfg.weight_effort, cfg.step);
  const double u_formula =
      tcoord::solve_k1_unconstrained(rate0, delta0 - neighbor, 0.0, g);
  CHECK(std::abs(u_scan - u_formula) <= 1e-6);
  CHECK(std::abs(u_vertex - u_formula) <= 1e-9);

  // The condensed QP solves the same problem.
  const CondensedQp qp = tcoord::condense(cfg, delta0, rate0, nb, 0.0);
  const QpSolution sol = tcoord::solve_qp(qp);
  CHECK(std::abs(sol.u[0] - u_formula) <= 1e-10);
  CHECK(sol.active_set.empty());
}

TEST_CASE("condensed horizon-1 curvature is twice the gain denominator") {
  const double w1 = 3.0, w2 = 2.0, w3 = 0.5, h = 0.2;
  const MpcConfig cfg = config_for(w1, w2, w3, h, 1);
  const CondensedQp qp =
      tcoord::condense(cfg, 0.0, 0.0, slot1_neighbor(0.0, 1), 0.0);
  const double s = w3 + w2 * h * h + w1 * h * h * h * h / 4.0;
  CHECK(qp.hessian(0, 0) == doctest::Approx(2.0 * s).epsilon(1e-14));
  CHECK(qp.gradient[0] == 0.0);

  // Row layout: u bounds first, then pace-rate bounds.
  REQUIRE(qp.rows.rows() == 4);
  CHECK(qp.rows(0, 0) == 1.0);
  CHECK(qp.rhs[0] == cfg.gamma_bounds.accel_max);
  CHECK(qp.rows(1, 0) == -1.0);
  CHECK(qp.rows(2, 0) == h);
  CHECK(qp.rhs[2] == doctest::Approx(cfg.rate_ceil()));
}

TEST_CASE("condense rejects an initial rate outside its bounds") {
  const MpcConfig cfg = config_for(1.0, 1.0, 1.0, 0.1, 2, 0.5);
  CHECK_THROWS_AS(
      tcoord::condense(cfg, 0.0, 0.7, slot1_neighbor(0.0, 2), 0.0),
      std::domain_error);
  // On the bound is fine and u = 0 stays feasible.
  const CondensedQp qp =
      tcoord::condense(cfg, 0.0, 0.5, slot1_neighbor(0.0, 2), 0.0);
  CHECK(qp.rhs.minCoeff() >= 0.0);
  CHECK_NOTHROW(tcoord::solve_qp(qp));
}

TEST_CASE("box clamp activates when the unconstrained pull is too strong") {
  MpcConfig cfg = config_for(50.0, 1.0, 0.01, 0.5, 1);
  cfg.gamma_bounds.accel_max = 0.3;
  // A huge gap to the neighbor asks for far more than the box allows.
  const NeighborBundle nb = slot1_neighbor(40.0, 1);
  const CondensedQp qp = tcoord::condense(cfg, 0.0, 0.0, nb, 0.0);

  const double unconstrained = -qp.gradient[0] / qp.hessian(0, 0);
  REQUIRE(std::abs(unconstrained) > 0.3);

  const QpSolution sol = tcoord::solve_qp(qp);
  CHECK(sol.u[0] == doctest::Approx(0.3 * (unconstrained > 0 ? 1.0 : -1.0)));
  REQUIRE(sol.active_set.size() == 1);
  CHECK(sol.active_set[0] == (unconstrained > 0 ? 0 : 1));
}

TEST_CASE("qp solution matches the closed form on random loose instances") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> weight(0.1, 5.0);
  std::uniform_real_distribution<double> state(-0.5, 0.5);
  std::uniform_real_distribution<double> stepd(0.02, 0.5);
  for (int trial = 0; trial < 1000; ++trial) {
    const double w1 = weight(rng), w2 = weight(rng), w3 = weight(rng);
    const double h = stepd(rng);
    const MpcConfig cfg = config_for(w1, w2, w3, h, 1);
    const double delta0 = state(rng), rate0 = state(rng);
    const NeighborBundle nb = slot1_neighbor(state(rng), 1);

    const Gains g = tcoord::gains(w1, w2, w3, h);
    const double u_formula = tcoord::solve_k1_unconstrained(
        rate0, delta0 - nb.entries[0].delta[1], 0.0, g);

    const QpSolution sol =
        tcoord::solve_qp(tcoord::condense(cfg, delta0, rate0, nb, 0.0));
    CHECK(std::abs(sol.u[0] - u_formula) <= 1e-10);
    CHECK(sol.kkt_residual <= 1e-9);
  }
}

TEST_CASE("qp agrees with active-set enumeration on tight instances") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> weight(0.2, 4.0);
  std::uniform_real_distribution<double> state(-1.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int horizon = 1 + static_cast<int>(rng() % 2);  // m = 4K <= 8 rows
    MpcConfig cfg = config_for(weight(rng), weight(rng), weight(rng), 0.4,
                               horizon, 0.05, 0.08);
    NeighborBundle nb;
    nb.own_index = 0;
    Eigen::VectorXd seq(horizon + 1);
    for (int t = 0; t <= horizon; ++t) seq[t] = 3.0 * state(rng);
    nb.entries.push_back({1, seq});

    const double rate0 = 0.04 * state(rng);
    const CondensedQp qp = tcoord::condense(cfg, state(rng), rate0, nb, 0.0);
    const QpSolution sol = tcoord::solve_qp(qp);
    const Eigen::VectorXd expected = enumerate_qp_optimum(qp);

    CHECK((sol.u - expected).lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK(((qp.rows * sol.u) - qp.rhs).maxCoeff() <= 1e-12);
  }
}

TEST_CASE("qp solution is invariant under uniform weight scaling") {
  const NeighborBundle nb = slot1_neighbor(1.5, 3);
  const MpcConfig cfg = config_for(2.0, 1.0, 0.5, 0.2, 3, 0.4, 0.6);
  const MpcConfig scaled = config_for(6.0, 3.0, 1.5, 0.2, 3, 0.4, 0.6);

  const QpSolution a =
      tcoord::solve_qp(tcoord::condense(cfg, 0.3, 0.1, nb, 0.0));
  const QpSolution b =
      tcoord::solve_qp(tcoord::condense(scaled, 0.3, 0.1, nb, 0.0));
  CHECK((a.u - b.u).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("tightening the control box never improves the optimum") {
  const NeighborBundle nb = slot1_neighbor(2.0, 2);
  double previous = -std::numeric_limits<double>::infinity();
  for (const double box : {1.0, 0.3, 0.1, 0.03}) {
    const MpcConfig cfg = config_for(4.0, 1.0, 0.2, 0.3, 2, 10.0, box);
    const CondensedQp qp = tcoord::condense(cfg, 0.0, 0.0, nb, 0.0);
    const double value = qp_objective(qp, tcoord::solve_qp(qp).u);
    CHECK(value >= previous - 1e-12);
    previous = value;
  }
}

TEST_CASE("controls returned by the qp reproduce a consistent prediction") {
  const MpcConfig cfg = config_for(3.0, 1.0, 0.4, 0.25, 4, 0.3, 0.5);
  const NeighborBundle nb = slot1_neighbor(-1.0, 4);
  const QpSolution sol =
      tcoord::solve_qp(tcoord::condense(cfg, 0.2, -0.05, nb, 0.0));
  const auto state =
      tcoord::AgentState::from_control(0.2, -0.05, sol.u, cfg.step, 1);
  CHECK(state.recursion_residual(cfg.step) <= 1e-12);
  // Pace-rate rows really bound the regenerated rates.
  for (int t = 1; t < state.rate.size(); ++t) {
    CHECK(state.rate[t] <= cfg.rate_ceil() + 1e-12);
    CHECK(state.rate[t] >= cfg.rate_floor() - 1e-12);
  }
}

TEST_CASE("race hinge only enters the model while trailing") {
  MpcConfig cfg = config_for(5.0, 1.0, 0.5, 0.2, 1);
  cfg.cost.variant = tcoord::CostVariant::kRace;
  cfg.cost.psi = Eigen::Vector2d(15.0, 25.0);
  cfg.cost.gate_lo = -100.0;
  cfg.cost.gate_hi = 100.0;

  // Leading the only neighbor: the sync term vanishes from the model, so the
  // gradient matches the pace-keeping-only problem.
  const CondensedQp lead =
      tcoord::condense(cfg, 5.0, 0.0, slot1_neighbor(0.0, 1), 0.0);
  const CondensedQp alone = tcoord::condense(cfg, 5.0, 0.0, {}, 0.0);
  CHECK(lead.gradient[0] == doctest::Approx(alone.gradient[0]));
  CHECK(lead.hessian(0, 0) == doctest::Approx(alone.hessian(0, 0)));

  // Trailing: the hinge is live and pushes the pace up (negative gradient in
  // u raises delta).
  const CondensedQp trail =
      tcoord::condense(cfg, -5.0, 0.0, slot1_neighbor(0.0, 1), 0.0);
  CHECK(qp_objective(trail, Eigen::VectorXd::Zero(1)) >
        qp_objective(alone, Eigen::VectorXd::Zero(1)));
  CHECK(tcoord::solve_qp(trail).u[0] > tcoord::solve_qp(alone).u[0]);
}

TEST_CASE("qp failure paths carry diagnostics") {
  const MpcConfig cfg = config_for(1.0, 1.0, 1.0, 0.1, 2, 0.3, 0.4);
  const CondensedQp qp =
      tcoord::condense(cfg, 1.0, 0.0, slot1_neighbor(0.0, 2), 0.0);

  // A zero iteration budget cannot reach stationarity.
  CHECK_THROWS_AS(tcoord::solve_qp(qp, 1e-9, 0), tcoord::QpError);
  try {
    tcoord::solve_qp(qp, 1e-9, 0);
  } catch (const tcoord::QpError& e) {
    CHECK(e.best_u.size() == 2);
  }

  // A negative right-hand side means u = 0 was never feasible.
  CondensedQp broken = qp;
  broken.rhs[0] = -1.0;
  CHECK_THROWS_AS(tcoord::solve_qp(broken), tcoord::QpError);
}

TEST_CASE("degenerate vertex with stacked pace rows stays solvable") {
  // Fifteen-agent consensus instance whose descent saturates the control box
  // and pins a long run of pace rows at once. The blocked steps shrink to
  // rounding noise near the vertex, which once pushed a dependent row into
  // the working set and left the KKT system singular.
  MpcConfig cfg = config_for(800.0, 0.5, 0.1, 0.1, 25);
  cfg.gamma_bounds.rate_min = 0.0;
  cfg.gamma_bounds.rate_max = 3.0;
  cfg.gamma_bounds.accel_max = (5.0 - 9.0 * 0.05) / 1.1;

  NeighborBundle nb;
  nb.own_index = 1;
  const std::vector<double> peers = {4.5, 0.0, 3.5, 2.5, 5.0, 3.5, 6.0,
                                     2.0, 4.0, 5.5, 1.0, 6.0, 3.5, 2.0};
  for (int j = 0; j < static_cast<int>(peers.size()); ++j) {
    nb.entries.push_back(
        {j >= 1 ? j + 1 : j,
         Eigen::VectorXd::Constant(cfg.horizon + 1, peers[j])});
  }

  const CondensedQp qp = tcoord::condense(cfg, 6.0, 0.0, nb, 0.1);
  const QpSolution sol = tcoord::solve_qp(qp);

  CHECK(sol.kkt_residual <= 1e-8);
  CHECK(((qp.rows * sol.u) - qp.rhs).maxCoeff() <= 1e-9);
  // The whole leading stretch of the plan brakes as hard as the box allows.
  CHECK(sol.u[0] == doctest::Approx(-cfg.gamma_bounds.accel_max));
}
