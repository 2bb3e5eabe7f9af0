#include "tcoord/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tcoord {

namespace {

ModeMatrix make_mode(const Gains& gains, double step, double eigenvalue) {
  const double a = gains.gap_gain;
  const double b = gains.rate_gain;
  const double h = step;
  ModeMatrix mode;
  mode.eigenvalue = eigenvalue;
  mode.transition << 1.0 - 0.5 * h * h * a * eigenvalue,
      h - 0.5 * h * h * b, -h * a * eigenvalue, 1.0 - h * b;
  mode.forcing << 0.5 * a * h * h - 1.0, a * h;
  return mode;
}

void check_step(double step) {
  if (!(step > 0.0)) {
    throw std::domain_error("step must be positive");
  }
}

// sup_k ||(Q / r)^k||_inf over k = 0..iterations, via renormalized powers.
double decay_ratio_peak(const Eigen::Matrix2d& transition, double rate,
                        int iterations) {
  Eigen::Matrix2d scaled = transition / rate;
  Eigen::Matrix2d power = Eigen::Matrix2d::Identity();
  double peak = 1.0;
  for (int k = 0; k < iterations; ++k) {
    power = scaled * power;
    const double norm = power.cwiseAbs().rowwise().sum().maxCoeff();
    peak = std::max(peak, norm);
    if (norm < 1e-14) {
      break;  // further powers only shrink
    }
  }
  return peak;
}

double inf_norm(const Eigen::MatrixXd& m) {
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

std::vector<ModeMatrix> mode_matrices(const Gains& gains, double step,
                                      const SpectralDecomposition& spectral) {
  check_step(step);
  std::vector<ModeMatrix> modes;
  modes.reserve(static_cast<std::size_t>(spectral.n()));
  for (int i = 0; i < spectral.n(); ++i) {
    modes.push_back(make_mode(gains, step, spectral.eigenvalues(i)));
  }
  return modes;
}

double spectral_radius(const ModeMatrix& mode) {
  const double tr = mode.transition.trace();
  const double det = mode.transition.determinant();
  const double disc = tr * tr - 4.0 * det;
  if (disc < 0.0) {
    return std::sqrt(det);
  }
  const double root = std::sqrt(disc);
  return std::max(std::abs(0.5 * (tr + root)), std::abs(0.5 * (tr - root)));
}

double mode_trace_formula(const Gains& gains, double step, double eigenvalue) {
  return 2.0 - step * gains.rate_gain -
         0.5 * step * step * gains.gap_gain * eigenvalue;
}

double mode_det_formula(double weight_sync, double weight_rate,
                        double weight_effort, double step, double eigenvalue) {
  const double h4 = step * step * step * step;
  const double scale =
      weight_effort + weight_rate * step * step + 0.25 * weight_sync * h4;
  return (weight_effort + 0.25 * weight_sync * h4 * (eigenvalue - 1.0)) /
         scale;
}

ConvergenceCertificate certify(const SpectralDecomposition& spectral,
                               const Gains& gains, double step, double nu,
                               const CertifyOptions& options) {
  check_step(step);
  if (!(nu > 0.0)) {
    throw std::domain_error("nu must be positive");
  }
  if (!(options.margin > 0.0) || options.margin >= 1.0) {
    throw std::domain_error("margin must lie in (0, 1)");
  }

  ConvergenceCertificate cert;
  cert.step = step;
  cert.nu = nu;
  cert.margin = options.margin;
  cert.exp_decay = std::exp(-nu * step);
  cert.q = 1.0 - step * gains.rate_gain;
  cert.persist.setZero();
  cert.fade.setZero();

  const auto modes = mode_matrices(gains, step, spectral);
  cert.rho.resize(modes.size());
  cert.rho[0] = 1.0;  // zero mode: consensus direction is preserved
  double rho_max = 0.0;
  int rho_arg = 1;
  for (std::size_t i = 1; i < modes.size(); ++i) {
    cert.rho[i] = spectral_radius(modes[i]);
    if (cert.rho[i] > rho_max) {
      rho_max = cert.rho[i];
      rho_arg = static_cast<int>(i);
    }
  }

  const double base = std::max({rho_max, cert.exp_decay, std::abs(cert.q)});
  const double rate = base + options.margin;
  if (rate >= 1.0) {
    std::ostringstream reason;
    if (base == rho_max) {
      reason << "mode " << rho_arg + 1 << " (eigenvalue "
             << spectral.eigenvalues(rho_arg) << ") has spectral radius "
             << rho_max << "; no decay rate below 1 fits with margin "
             << options.margin;
    } else if (base == cert.exp_decay) {
      reason << "disturbance decay exp(-nu h) = " << cert.exp_decay
             << " leaves no room below 1 with margin " << options.margin
             << "; increase the step or nu";
    } else {
      reason << "zero-mode transient |1 - h b| = " << std::abs(cert.q)
             << " leaves no room below 1 with margin " << options.margin;
    }
    cert.valid = false;
    cert.reason = reason.str();
    return cert;
  }

  cert.valid = true;
  cert.r_h = rate;

  // Zero-mode split: Q_zero has eigenvalues {1, q}, and its powers decompose
  // into a rank-one projector plus a q^k transient. Validity already forced
  // |q| + margin < 1, so the denominator is safely away from zero.
  const Eigen::Matrix2d q_zero = modes[0].transition;
  const double denom = 1.0 - cert.q;
  cert.persist = (q_zero - cert.q * Eigen::Matrix2d::Identity()) / denom;
  cert.fade = (Eigen::Matrix2d::Identity() - q_zero) / denom;
  cert.gelfand.resize(modes.size() - 1);
  cert.gelfand_max = 0.0;
  for (std::size_t i = 1; i < modes.size(); ++i) {
    cert.gelfand[i - 1] = decay_ratio_peak(modes[i].transition, cert.r_h,
                                           options.power_iterations);
    cert.gelfand_max = std::max(cert.gelfand_max, cert.gelfand[i - 1]);
  }

  cert.v_norm = inf_norm(spectral.eigenvectors);
  cert.v_inv_norm = inf_norm(spectral.inverse);
  cert.forcing_norm =
      std::max(std::abs(modes[0].forcing(0)), std::abs(modes[0].forcing(1)));
  cert.a1 = cert.gelfand_max * cert.v_inv_norm;
  cert.a2 = cert.gelfand_max * cert.forcing_norm * cert.v_inv_norm *
            cert.exp_decay / (cert.r_h - cert.exp_decay);
  return cert;
}

double h_max(const SpectralDecomposition& spectral, double weight_sync,
             double weight_rate, double weight_effort, double nu,
             double tolerance, const CertifyOptions& options) {
  if (!(tolerance > 0.0) || tolerance >= 1.0) {
    throw std::domain_error("tolerance must lie in (0, 1)");
  }

  // Cheap validity predicate: radii and scalar decay terms only, no Gelfand
  // constants.
  const auto admissible = [&](double h) {
    const Gains g = gains(weight_sync, weight_rate, weight_effort, h);
    double base = std::max(std::exp(-nu * h), std::abs(1.0 - h * g.rate_gain));
    for (int i = 1; i < spectral.n(); ++i) {
      base = std::max(
          base, spectral_radius(make_mode(g, h, spectral.eigenvalues(i))));
    }
    return base + options.margin < 1.0;
  };

  // The admissible set is an interval; scan geometrically for any point
  // inside it, then bracket and bisect its upper end.
  double lo = 0.0;
  for (double h = 1e-6; h <= 1e6; h *= 1.25) {
    if (admissible(h)) {
      lo = h;
      break;
    }
  }
  if (lo == 0.0) {
    throw std::domain_error(
        "no admissible step in [1e-6, 1e6]: every step leaves either a mode "
        "radius or a decay term within the margin of 1");
  }

  double hi = lo;
  while (admissible(hi)) {
    hi *= 2.0;
    if (hi > 1e9) {
      throw std::domain_error("admissible steps extend beyond 1e9");
    }
  }
  lo = hi / 2.0;

  while (hi - lo > 0.5 * tolerance * lo) {
    const double mid = 0.5 * (lo + hi);
    (admissible(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ClosedLoopTrace propagate_closed_loop(const SpectralDecomposition& spectral,
                                      const Gains& gains, double step,
                                      const Eigen::VectorXd& delta0,
                                      const Eigen::VectorXd& rate0,
                                      const Eigen::MatrixXd& alpha,
                                      int steps) {
  check_step(step);
  const int n = spectral.n();
  if (delta0.size() != n || rate0.size() != n) {
    throw std::invalid_argument("initial state size does not match the graph");
  }
  if (steps < 0) {
    throw std::invalid_argument("steps must be non-negative");
  }
  if (alpha.rows() < steps || (steps > 0 && alpha.cols() != n)) {
    throw std::invalid_argument(
        "alpha must provide one row per step and one column per agent");
  }

  const double a = gains.gap_gain;
  const double b = gains.rate_gain;
  const double h = step;
  const Eigen::MatrixXd walk = spectral.walk_laplacian();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd a11 = identity - 0.5 * a * h * h * walk;
  const Eigen::MatrixXd a21 = -a * h * walk;
  const double a12 = h - 0.5 * b * h * h;
  const double a22 = 1.0 - b * h;
  const double f1 = 0.5 * a * h * h - 1.0;
  const double f2 = a * h;

  ClosedLoopTrace trace;
  trace.delta.resize(steps + 1, n);
  trace.rate.resize(steps + 1, n);
  trace.modal_delta.resize(steps + 1, n);
  trace.modal_rate.resize(steps + 1, n);

  Eigen::VectorXd delta = delta0;
  Eigen::VectorXd rate = rate0;
  for (int k = 0;; ++k) {
    trace.delta.row(k) = delta.transpose();
    trace.rate.row(k) = rate.transpose();
    trace.modal_delta.row(k) = (spectral.inverse * delta).transpose();
    trace.modal_rate.row(k) = (spectral.inverse * rate).transpose();
    if (k == steps) {
      break;
    }
    const Eigen::VectorXd force = alpha.row(k).transpose();
    const Eigen::VectorXd next_delta =
        a11 * delta + a12 * rate + f1 * force;
    rate = a21 * delta + a22 * rate + f2 * force;
    delta = next_delta;
  }
  return trace;
}

FeasibilityMargins feasibility_margins(const ConvergenceCertificate& cert,
                                       const Gains& gains,
                                       const GammaBounds& gamma_bounds,
                                       double d, double max_init_norm,
                                       int n_agents) {
  if (n_agents < 1) {
    throw std::invalid_argument("n_agents must be positive");
  }
  if (d < 0.0 || max_init_norm < 0.0) {
    throw std::invalid_argument(
        "disturbance and initial-norm bounds must be non-negative");
  }
  if (!(gains.gap_gain > 0.0)) {
    throw std::domain_error(
        "feasibility margins require a positive gap gain (sync weight > 0)");
  }
  FeasibilityMargins out;
  if (!cert.valid) {
    out.reason = "certificate invalid: " + cert.reason;
    return out;
  }

  const double rate_floor = gamma_bounds.rate_min - 1.0;
  const double rate_ceil = gamma_bounds.rate_max - 1.0;
  if (rate_floor > 0.0 || rate_ceil < 0.0) {
    throw std::domain_error("pace-rate window must contain the nominal rate");
  }

  const double a = gains.gap_gain;
  const double b = gains.rate_gain;
  out.s1 = 2.0 * cert.v_norm * cert.a1;
  out.s2 = 2.0 * cert.v_norm * cert.a2;
  out.eta_bound = a * (out.s1 * max_init_norm + out.s2 * d);

  const double rate_reach = std::max(std::abs(rate_floor), rate_ceil);
  const double accel_room = gamma_bounds.accel_max - b * rate_reach - a * d;
  const double rate_room = b * std::min(rate_ceil, -rate_floor) - a * d;

  out.accel_margin =
      Eigen::VectorXd::Constant(n_agents, accel_room - out.eta_bound);
  out.rate_margin =
      Eigen::VectorXd::Constant(n_agents, rate_room - out.eta_bound);

  const double accel_room0 = gamma_bounds.accel_max - b * rate_reach;
  const double rate_room0 = b * std::min(rate_ceil, -rate_floor);
  const double room0 = std::min(accel_room0, rate_room0);
  out.nu_h = room0 / (a * out.s1);
  out.d_h = room0 / (a * (out.s2 + 1.0));

  if (accel_room - out.eta_bound > 0.0 && rate_room - out.eta_bound > 0.0) {
    out.valid = true;
  } else {
    std::ostringstream reason;
    if (accel_room - out.eta_bound <= rate_room - out.eta_bound) {
      reason << "control bound can activate: slack "
             << accel_room - out.eta_bound;
    } else {
      reason << "pace-rate bound can activate: slack "
             << rate_room - out.eta_bound;
    }
    out.reason = reason.str();
  }
  return out;
}

}  // namespace tcoord
