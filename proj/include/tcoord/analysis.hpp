#ifndef TCOORD_ANALYSIS_HPP
#define TCOORD_ANALYSIS_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tcoord/graph.hpp"
#include "tcoord/mission.hpp"
#include "tcoord/solver.hpp"

namespace tcoord {

// One 2x2 block of the closed-loop dynamics in graph eigencoordinates, with
// the timing-correction forcing direction alongside.
struct ModeMatrix {
  Eigen::Matrix2d transition;  // [[1 - (h^2/2) a l, h - (h^2/2) b],
                               //  [-h a l,          1 - h b      ]]
  Eigen::Vector2d forcing;     // [(a h^2 / 2) - 1, a h]
  double eigenvalue = 0.0;     // l, walk-Laplacian eigenvalue of this mode
};

std::vector<ModeMatrix> mode_matrices(const Gains& gains, double step,
                                      const SpectralDecomposition& spectral);

// Closed-form radius: complex pair -> sqrt(det), real pair -> larger |root|.
double spectral_radius(const ModeMatrix& mode);

// Scalar identities used to cross-check the matrix arithmetic.
double mode_trace_formula(const Gains& gains, double step, double eigenvalue);
double mode_det_formula(double weight_sync, double weight_rate,
                        double weight_effort, double step, double eigenvalue);

struct CertifyOptions {
  double margin = 1e-3;        // gap forced between the decay rate and 1
  int power_iterations = 10000;  // horizon of the norm/ratio maximization
};

// Geometric decay certificate for the disagreement modes. `valid` means a
// rate r_h < 1 fits above every mode radius, above the disturbance decay
// e^{-nu h}, and above the zero-mode transient |q|, with `margin` to spare.
struct ConvergenceCertificate {
  bool valid = false;
  std::string reason;  // names the binding term when invalid

  double step = 0.0;
  double nu = 0.0;
  double margin = 0.0;
  std::vector<double> rho;  // per mode, ascending eigenvalue; rho[0] = 1
  double r_h = 0.0;
  double q = 0.0;                 // 1 - h b, zero-mode transient decay
  Eigen::Matrix2d persist, fade;  // (Q_zero)^k = persist + q^k * fade

  std::vector<double> gelfand;  // per disagreement mode: sup_k ||Q^k|| / r_h^k
  double gelfand_max = 0.0;
  double a1 = 0.0, a2 = 0.0;  // transient and forcing amplification factors
  double v_norm = 0.0, v_inv_norm = 0.0;  // inf-norms of the eigenbasis
  double forcing_norm = 0.0;              // ||B||_inf
  double exp_decay = 0.0;                 // e^{-nu h}
};

ConvergenceCertificate certify(const SpectralDecomposition& spectral,
                               const Gains& gains, double step, double nu,
                               const CertifyOptions& options = {});

// Largest step for which the certificate above stays valid at the given nu.
// The admissible steps form an interval: too small and e^{-nu h} leaves no
// room under 1, too large and the worst mode radius does. Returns the upper
// end of that interval; errors if no step in [1e-6, 1e6] is admissible.
double h_max(const SpectralDecomposition& spectral, double weight_sync,
             double weight_rate, double weight_effort, double nu,
             double tolerance = 1e-6, const CertifyOptions& options = {});

// Exact linear closed-loop iteration of all agents under the horizon-1 law,
// with per-step timing corrections as exogenous forcing. Row k of each matrix
// holds the state after k rounds; modal coordinates are V^{-1} * state.
struct ClosedLoopTrace {
  Eigen::MatrixXd delta;        // (steps+1) x N
  Eigen::MatrixXd rate;
  Eigen::MatrixXd modal_delta;
  Eigen::MatrixXd modal_rate;
};

ClosedLoopTrace propagate_closed_loop(const SpectralDecomposition& spectral,
                                      const Gains& gains, double step,
                                      const Eigen::VectorXd& delta0,
                                      const Eigen::VectorXd& rate0,
                                      const Eigen::MatrixXd& alpha, int steps);

// Worst-case slack of the two constraint-inactivity conditions, driven by the
// certified disagreement bound. Positive margins guarantee the box
// constraints never activate for disturbances up to `d` and initial
// deviation/rate magnitudes up to `max_init_norm`.
struct FeasibilityMargins {
  bool valid = false;
  std::string reason;
  double s1 = 0.0, s2 = 0.0;  // disagreement amplification constants
  double eta_bound = 0.0;     // certified bound on the mean-gap feedback term
  Eigen::VectorXd accel_margin;  // per agent: control bound slack
  Eigen::VectorXd rate_margin;   // per agent: rate bound slack
  double nu_h = 0.0;  // admissible initial-norm radius at d = 0
  double d_h = 0.0;   // admissible disturbance radius at zero initial norm
};

FeasibilityMargins feasibility_margins(const ConvergenceCertificate& cert,
                                       const Gains& gains,
                                       const GammaBounds& gamma_bounds,
                                       double d, double max_init_norm,
                                       int n_agents);

}  // namespace tcoord

#endif  // TCOORD_ANALYSIS_HPP
