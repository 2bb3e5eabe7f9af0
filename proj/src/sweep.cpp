#include "tcoord/sweep.hpp"

#include <atomic>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "tcoord/report.hpp"

namespace tcoord {

const SweepCell* SweepResult::find(double step, int agents,
                                   int horizon) const {
  for (const SweepCell& cell : cells) {
    if (cell.step == step && cell.agents == agents &&
        cell.horizon == horizon) {
      return &cell;
    }
  }
  return nullptr;
}

Scenario restrict_agents(const Scenario& base, int agents) {
  if (agents == base.topology.n) {
    return base;
  }
  if (agents > base.topology.n) {
    throw std::domain_error(
        "agent-count sweep cannot exceed the scenario's agent count");
  }
  Scenario cut = base;
  if (base.topology_kind == "complete") {
    cut.topology = Topology::complete(agents);
  } else if (base.topology_kind == "path") {
    cut.topology = Topology::path(agents);
  } else if (base.topology_kind == "ring") {
    cut.topology = Topology::ring(agents);
  } else {
    throw std::domain_error(
        "agent-count sweep needs a complete, path, or ring topology");
  }
  cut.trajectories.assign(base.trajectories.begin(),
                          base.trajectories.begin() + agents);
  cut.gamma0 = base.gamma0.head(agents);
  cut.gamma_rate0 = base.gamma_rate0.head(agents);
  if (cut.mpc.cost.psi.size() >= agents) {
    cut.mpc.cost.psi = base.mpc.cost.psi.head(agents).eval();
  }
  std::vector<DisturbanceModel::Impulse> kept;
  for (const auto& impulse : base.disturbance.impulses) {
    if (impulse.agent < agents) {
      kept.push_back(impulse);
    }
  }
  cut.disturbance.impulses = std::move(kept);
  if (!base.disturbance.initial_error.empty()) {
    cut.disturbance.initial_error.assign(
        base.disturbance.initial_error.begin(),
        base.disturbance.initial_error.begin() + agents);
  }
  return cut;
}

SweepResult run_sweep(const Scenario& base, const SweepGrid& grid, int jobs) {
  if (jobs < 1) {
    throw std::invalid_argument("jobs must be positive");
  }
  SweepGrid effective = grid;
  if (effective.horizons.empty()) effective.horizons = {base.mpc.horizon};
  if (effective.agent_counts.empty()) {
    effective.agent_counts = {base.topology.n};
  }
  if (effective.steps.empty()) effective.steps = {base.mpc.step};

  SweepResult result;
  result.grid = effective;
  for (const double h : effective.steps) {
    for (const int n : effective.agent_counts) {
      for (const int k : effective.horizons) {
        SweepCell cell;
        cell.step = h;
        cell.agents = n;
        cell.horizon = k;
        result.cells.push_back(cell);
      }
    }
  }

  std::atomic<std::size_t> cursor{0};
  const auto worker = [&]() {
    for (;;) {
      const std::size_t at = cursor.fetch_add(1);
      if (at >= result.cells.size()) {
        return;
      }
      SweepCell& cell = result.cells[at];
      try {
        Scenario scenario = restrict_agents(base, cell.agents);
        scenario.mpc.horizon = cell.horizon;
        scenario.mpc.step = cell.step;
        const SimTrace trace = run(scenario);
        if (trace.aborted) {
          cell.error = trace.abort_reason;
          continue;
        }
        cell.ok = true;
        cell.consensus_seconds =
            consensus_time(trace, scenario.consensus_epsilon);
        const SolveTimeStats stats = solve_time_stats(trace);
        cell.max_solve_seconds = stats.max_seconds;
        cell.mean_solve_seconds = stats.mean_seconds;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };

  const int threads = static_cast<int>(std::min(
      static_cast<std::size_t>(jobs), result.cells.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back(worker);
    }
    for (std::thread& t : pool) {
      t.join();
    }
  }
  return result;
}

std::string sweep_table_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "step,n_agents,horizon,consensus_seconds,max_solve_seconds,"
         "mean_solve_seconds,status\n";
  for (const SweepCell& cell : result.cells) {
    out << format_full(cell.step) << ',' << cell.agents << ',' << cell.horizon
        << ',';
    if (cell.ok && cell.consensus_seconds) {
      out << format_full(*cell.consensus_seconds);
    }
    out << ',';
    if (cell.ok) {
      out << format_full(cell.max_solve_seconds) << ','
          << format_full(cell.mean_solve_seconds) << ",ok\n";
    } else {
      out << ",,failed: " << cell.error << '\n';
    }
  }
  return out.str();
}

std::vector<std::string> trend_violations(const SweepResult& result) {
  std::vector<std::string> violations;
  const SweepGrid& grid = result.grid;

  const auto consensus_of = [&](double h, int n, int k,
                                const char* context) -> std::optional<double> {
    const SweepCell* cell = result.find(h, n, k);
    if (cell == nullptr || !cell->ok) {
      violations.push_back(std::string(context) + ": cell (step=" +
                           format_full(h) + ", agents=" + std::to_string(n) +
                           ", horizon=" + std::to_string(k) + ") failed");
      return std::nullopt;
    }
    if (!cell->consensus_seconds) {
      violations.push_back(std::string(context) + ": cell (step=" +
                           format_full(h) + ", agents=" + std::to_string(n) +
                           ", horizon=" + std::to_string(k) +
                           ") never reached consensus");
      return std::nullopt;
    }
    return cell->consensus_seconds;
  };

  for (const double h : grid.steps) {
    for (const int n : grid.agent_counts) {
      for (std::size_t i = 1; i < grid.horizons.size(); ++i) {
        const auto slow = consensus_of(h, n, grid.horizons[i - 1],
                                       "horizon trend");
        const auto fast = consensus_of(h, n, grid.horizons[i],
                                       "horizon trend");
        if (slow && fast && !(*fast < *slow)) {
          std::ostringstream msg;
          msg << "consensus time did not strictly drop from horizon "
              << grid.horizons[i - 1] << " (" << *slow << " s) to "
              << grid.horizons[i] << " (" << *fast << " s) at " << n
              << " agents, step " << h;
          violations.push_back(msg.str());
        }
      }
    }
    for (const int k : grid.horizons) {
      for (std::size_t i = 1; i < grid.agent_counts.size(); ++i) {
        const auto fewer = consensus_of(h, grid.agent_counts[i - 1], k,
                                        "agent trend");
        const auto more = consensus_of(h, grid.agent_counts[i], k,
                                       "agent trend");
        if (fewer && more && *more > *fewer) {
          std::ostringstream msg;
          msg << "consensus time rose from " << grid.agent_counts[i - 1]
              << " agents (" << *fewer << " s) to " << grid.agent_counts[i]
              << " agents (" << *more << " s) at horizon " << k << ", step "
              << h;
          violations.push_back(msg.str());
        }
      }
    }
    if (grid.horizons.size() >= 2) {
      const int k_lo = grid.horizons.front();
      const int k_hi = grid.horizons.back();
      for (const int n : grid.agent_counts) {
        const SweepCell* lo = result.find(h, n, k_lo);
        const SweepCell* hi = result.find(h, n, k_hi);
        if (lo != nullptr && hi != nullptr && lo->ok && hi->ok &&
            !(lo->mean_solve_seconds < hi->mean_solve_seconds)) {
          std::ostringstream msg;
          msg << "mean solve time at horizon " << k_lo << " ("
              << lo->mean_solve_seconds << " s) is not below horizon " << k_hi
              << " (" << hi->mean_solve_seconds << " s) at " << n
              << " agents, step " << h;
          violations.push_back(msg.str());
        }
      }
    }
  }
  return violations;
}

}  // namespace tcoord
