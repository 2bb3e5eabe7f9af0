#include "tcoord/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "tcoord/solver.hpp"

namespace tcoord {

namespace {

double clamp(double value, double lo, double hi) {
  return std::min(std::max(value, lo), hi);
}

Eigen::Vector3d along_track_direction(const TrajectorySample& sample) {
  const double speed = sample.velocity.norm();
  if (speed < 1e-12) {
    return Eigen::Vector3d::Zero();
  }
  return sample.velocity / speed;
}

StepStats make_stats(int step, double time, const Eigen::VectorXd& delta,
                     const Eigen::VectorXd& rate,
                     const std::vector<Eigen::Vector3d>& positions) {
  StepStats stats;
  stats.step = step;
  stats.time = time;
  stats.max_gap = (delta.maxCoeff() - delta.minCoeff());
  stats.max_rate = rate.cwiseAbs().maxCoeff();
  stats.min_separation = min_pairwise_separation(positions);
  return stats;
}

}  // namespace

int Scenario::steps() const {
  return static_cast<int>(std::llround(duration / mpc.step));
}

MpcConfig Scenario::effective_mpc() const {
  MpcConfig effective = mpc;
  effective.gamma_bounds = derive_gamma_bounds(bounds);
  return effective;
}

void Scenario::validate() const {
  const int n = topology.n;
  if (static_cast<int>(trajectories.size()) != n) {
    throw std::invalid_argument("trajectories: expected one per agent");
  }
  if (gamma0.size() != n || gamma_rate0.size() != n) {
    throw std::invalid_argument(
        "initial.gamma / initial.gamma_rate: expected one entry per agent");
  }
  bounds.validate();
  const MpcConfig effective = effective_mpc();
  effective.validate(n);
  if (!(duration > 0.0)) {
    throw std::invalid_argument("duration: must be positive");
  }
  const double ratio = duration / mpc.step;
  if (std::abs(ratio - std::llround(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("duration: must be a multiple of mpc.step");
  }
  for (int i = 0; i < n; ++i) {
    if (gamma0(i) < 0.0) {
      throw std::invalid_argument("initial.gamma: entries must be >= 0");
    }
    if (gamma_rate0(i) < effective.gamma_bounds.rate_min - 1e-12 ||
        gamma_rate0(i) > effective.gamma_bounds.rate_max + 1e-12) {
      throw std::invalid_argument(
          "initial.gamma_rate: entries must lie in the derived pace window");
    }
  }
  if (link_drop_probability < 0.0 || link_drop_probability > 1.0) {
    throw std::invalid_argument("link_drop_probability: must lie in [0, 1]");
  }
  if (!(consensus_epsilon > 0.0)) {
    throw std::invalid_argument("consensus_epsilon: must be positive");
  }
  if (collision_threshold < 0.0) {
    throw std::invalid_argument("collision_threshold: must be >= 0");
  }

  if (disturbance.kind == DisturbanceModel::Kind::kSynthetic) {
    if (disturbance.magnitude < 0.0) {
      throw std::invalid_argument("disturbance.magnitude: must be >= 0");
    }
  }
  if (disturbance.kind != DisturbanceModel::Kind::kNone &&
      !(disturbance.nu > 0.0)) {
    throw std::invalid_argument("disturbance.nu: must be positive");
  }
  if (disturbance.kind != DisturbanceModel::Kind::kTracker) {
    if (!disturbance.impulses.empty() || !disturbance.initial_error.empty()) {
      throw std::invalid_argument(
          "disturbance.impulses / initial_error: only the tracker kind uses "
          "these");
    }
  } else {
    if (!disturbance.initial_error.empty() &&
        static_cast<int>(disturbance.initial_error.size()) != n) {
      throw std::invalid_argument(
          "disturbance.initial_error: expected one entry per agent (or none)");
    }
    for (const auto& impulse : disturbance.impulses) {
      if (impulse.agent < 0 || impulse.agent >= n) {
        throw std::invalid_argument(
            "disturbance.impulses: agent index out of range");
      }
      if (impulse.step < 1 || impulse.step > steps()) {
        throw std::invalid_argument(
            "disturbance.impulses: step must lie in [1, duration/step]");
      }
    }
  }
}

Eigen::Vector3d kinematic_tracker_step(Eigen::Vector3d& error,
                                       const TrajectorySample& reference,
                                       double nu, double impulse_along_track,
                                       double step) {
  if (!(nu > 0.0)) {
    throw std::domain_error("nu must be positive");
  }
  error *= std::exp(-nu * step);
  if (impulse_along_track != 0.0) {
    error += impulse_along_track * along_track_direction(reference);
  }
  return reference.position + error;
}

SimTrace run(const Scenario& scenario) {
  scenario.validate();
  const MpcConfig config = scenario.effective_mpc();
  const int n = scenario.n_agents();
  const int total_steps = scenario.steps();
  const double h = config.step;
  const int horizon = config.horizon;

  SimTrace trace;
  trace.n_agents = n;
  trace.step = h;
  trace.rows.reserve(static_cast<std::size_t>(n) * (total_steps + 1));
  trace.stats.reserve(total_steps + 1);
  trace.solve_seconds.reserve(total_steps);

  const bool tracker = scenario.disturbance.kind ==
                       DisturbanceModel::Kind::kTracker;
  const bool synthetic = scenario.disturbance.kind ==
                         DisturbanceModel::Kind::kSynthetic;

  // Scheduled kicks, mergeable when several land on the same agent and round.
  std::map<std::pair<int, int>, double> kick;
  for (const auto& impulse : scenario.disturbance.impulses) {
    kick[{impulse.step, impulse.agent}] += impulse.along_track;
  }

  std::vector<Eigen::Vector3d> tracking_error(n, Eigen::Vector3d::Zero());
  std::vector<AgentState> previous;
  previous.reserve(n);

  {  // round 0: zero-input bootstrap, no solves, no exchange
    Eigen::VectorXd delta(n), rate(n);
    std::vector<Eigen::Vector3d> positions(n);
    for (int i = 0; i < n; ++i) {
      previous.push_back(
          bootstrap_state(scenario.gamma0(i), scenario.gamma_rate0(i), horizon,
                          h));
      delta(i) = previous[i].delta(0);
      rate(i) = previous[i].rate(0);
      const TrajectorySample sample =
          scenario.trajectories[i].at(scenario.gamma0(i));
      if (tracker && !scenario.disturbance.initial_error.empty()) {
        tracking_error[i] = scenario.disturbance.initial_error[i] *
                            along_track_direction(sample);
      }
      positions[i] = sample.position + tracking_error[i];

      TraceRow row;
      row.step = 0;
      row.time = 0.0;
      row.agent = i;
      row.delta = delta(i);
      row.rate = rate(i);
      row.gamma = delta(i);
      row.reference = sample.position;
      row.actual = positions[i];
      trace.rows.push_back(std::move(row));
    }
    trace.stats.push_back(make_stats(0, 0.0, delta, rate, positions));
  }

  const double rate_floor = config.rate_floor();
  const double rate_ceil = config.rate_ceil();
  const double accel_max = config.gamma_bounds.accel_max;
  const Gains coupled =
      gains(config.weight_sync, config.weight_rate, config.weight_effort, h);
  const Gains uncoupled =
      gains(0.0, config.weight_rate, config.weight_effort, h);

  for (int k = 1; k <= total_steps; ++k) {
    const double t_k = k * h;
    const auto realized =
        realize_links(scenario.topology, scenario.link_drop_probability,
                      scenario.seed, static_cast<std::uint64_t>(k));

    std::vector<AgentState> next;
    next.reserve(n);
    std::vector<TraceRow> round_rows;
    round_rows.reserve(n);
    Eigen::VectorXd delta(n), rate(n);
    std::vector<Eigen::Vector3d> positions(n);
    double slowest_solve = 0.0;

    for (int i = 0; i < n; ++i) {
      const double gamma_measured = previous[i].delta(1) + t_k;
      const TrajectorySample sample =
          scenario.trajectories[i].at(gamma_measured);
      const Eigen::Vector3d reference_velocity =
          sample.velocity * (1.0 + previous[i].rate(1));

      double alpha = 0.0;
      Eigen::Vector3d actual = sample.position;
      if (tracker) {
        const auto it = kick.find({k, i});
        const double impulse = it == kick.end() ? 0.0 : it->second;
        actual = kinematic_tracker_step(tracking_error[i], sample,
                                        scenario.disturbance.nu, impulse, h);
        alpha = alpha_correction(sample.position, reference_velocity, actual,
                                 config.beta, config.delta_reg);
      } else if (synthetic) {
        const double sign = i % 2 == 0 ? 1.0 : -1.0;
        alpha = sign * scenario.disturbance.magnitude *
                std::exp(-scenario.disturbance.nu * k * h);
      }

      const auto [delta0, rate0] = shift_initialize(previous[i], alpha);

      NeighborBundle bundle;
      bundle.own_index = i;
      for (int j : realized[i]) {
        bundle.entries.push_back({j, previous[j].delta});
      }

      const auto solve_start = std::chrono::steady_clock::now();
      AgentState solved;
      int solver_iterations = 0;
      int active_set_size = 0;
      double kkt_residual = 0.0;
      if (config.closed_form_k1) {
        double mean_gap = 0.0;
        const Gains& g = bundle.empty() ? uncoupled : coupled;
        if (!bundle.empty()) {
          for (const auto& entry : bundle.entries) {
            mean_gap += previous[i].delta(1) - entry.delta(1);
          }
          mean_gap /= bundle.count();
        }
        double u = solve_k1_unconstrained(rate0, mean_gap, alpha, g);
        u = clamp(u, std::max(-accel_max, (rate_floor - rate0) / h),
                  std::min(accel_max, (rate_ceil - rate0) / h));
        Eigen::VectorXd control(1);
        control(0) = u;
        solved = AgentState::from_control(delta0, rate0, control, h, k);
      } else {
        try {
          const CondensedQp qp = condense(config, delta0, rate0, bundle, t_k);
          const QpSolution solution = solve_qp(qp);
          solved = AgentState::from_control(delta0, rate0, solution.u, h, k);
          solver_iterations = solution.iterations;
          active_set_size = static_cast<int>(solution.active_set.size());
          kkt_residual = solution.kkt_residual;
        } catch (const std::exception& e) {
          std::ostringstream reason;
          reason << "round " << k << ", agent " << i << ": " << e.what();
          trace.aborted = true;
          trace.abort_reason = reason.str();
          return trace;
        }
      }
      const auto solve_end = std::chrono::steady_clock::now();
      slowest_solve = std::max(
          slowest_solve,
          std::chrono::duration<double>(solve_end - solve_start).count());

      delta(i) = delta0;
      rate(i) = rate0;
      positions[i] = actual;

      TraceRow row;
      row.step = k;
      row.time = t_k;
      row.agent = i;
      row.delta = delta0;
      row.rate = rate0;
      row.control = solved.control(0);
      row.alpha = alpha;
      row.gamma = delta0 + t_k;
      row.reference = sample.position;
      row.actual = actual;
      row.neighbors = realized[i];
      row.solver_iterations = solver_iterations;
      row.active_set_size = active_set_size;
      row.kkt_residual = kkt_residual;
      round_rows.push_back(std::move(row));
      next.push_back(std::move(solved));
    }

    for (auto& row : round_rows) {
      trace.rows.push_back(std::move(row));
    }
    trace.stats.push_back(make_stats(k, t_k, delta, rate, positions));
    trace.solve_seconds.push_back(slowest_solve);
    previous = std::move(next);  // synchronized broadcast
  }
  return trace;
}

std::optional<double> consensus_time(const SimTrace& trace, double epsilon) {
  if (trace.stats.empty()) {
    return std::nullopt;
  }
  int first_holding = -1;
  for (int k = static_cast<int>(trace.stats.size()) - 1; k >= 0; --k) {
    const StepStats& s = trace.stats[k];
    if (s.max_gap <= epsilon && s.max_rate <= epsilon) {
      first_holding = k;
    } else {
      break;
    }
  }
  if (first_holding < 0) {
    return std::nullopt;
  }
  return trace.stats[first_holding].time;
}

CorridorMetrics corridor_metrics(const SimTrace& trace,
                                 const Scenario& scenario) {
  const double gate_lo = scenario.mpc.cost.gate_lo;
  const double gate_hi = scenario.mpc.cost.gate_hi;
  if (!(gate_hi >= gate_lo)) {
    throw std::domain_error("corridor metrics need gate_lo <= gate_hi");
  }
  const int n = trace.n_agents;
  const int steps = trace.recorded_steps();

  CorridorMetrics metrics;
  std::vector<std::pair<int, int>> entries;  // (entry step, agent)
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < steps; ++k) {
      if (trace.row(k, i).gamma >= gate_lo) {
        entries.emplace_back(k, i);
        break;
      }
    }
  }
  std::sort(entries.begin(), entries.end());
  for (const auto& [k, i] : entries) {
    metrics.passage_order.push_back(i);
  }

  metrics.min_distance = std::numeric_limits<double>::infinity();
  for (int k = 0; k < steps; ++k) {
    for (int i = 0; i < n; ++i) {
      const TraceRow& a = trace.row(k, i);
      if (a.gamma < gate_lo || a.gamma > gate_hi) {
        continue;
      }
      for (int j = i + 1; j < n; ++j) {
        const TraceRow& b = trace.row(k, j);
        if (b.gamma < gate_lo || b.gamma > gate_hi) {
          continue;
        }
        metrics.min_distance =
            std::min(metrics.min_distance, (a.reference - b.reference).norm());
      }
    }
  }
  metrics.collision = metrics.min_distance < scenario.collision_threshold;

  // Post-corridor consensus: restrict the trace to rounds where every agent
  // has cleared the exit gate, then apply the usual entry-time scan.
  int first_clear = -1;
  for (int k = 0; k < steps && first_clear < 0; ++k) {
    bool all_clear = true;
    for (int i = 0; i < n; ++i) {
      all_clear = all_clear && trace.row(k, i).gamma > gate_hi;
    }
    if (all_clear) {
      first_clear = k;
    }
  }
  if (first_clear >= 0) {
    int first_holding = -1;
    for (int k = steps - 1; k >= first_clear; --k) {
      const StepStats& s = trace.stats[k];
      if (s.max_gap <= scenario.consensus_epsilon &&
          s.max_rate <= scenario.consensus_epsilon) {
        first_holding = k;
      } else {
        break;
      }
    }
    if (first_holding >= 0) {
      metrics.post_corridor_consensus_time = trace.stats[first_holding].time;
    }
  }
  return metrics;
}

}  // namespace tcoord
