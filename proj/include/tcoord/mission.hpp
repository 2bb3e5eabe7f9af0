#ifndef TCOORD_MISSION_HPP
#define TCOORD_MISSION_HPP

#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace tcoord {

// Vehicle and reference-path envelopes. The reference speed band must sit
// strictly inside the vehicle band so the pace can be varied both ways.
struct PhysicalBounds {
  double v_min = 0.0;
  double v_max = 0.0;
  double v_d_min = 0.0;
  double v_d_max = 0.0;
  double a_max = 0.0;
  double a_d_max = 0.0;

  void validate() const;
};

// Bounds on the virtual-time rate and acceleration that keep the commanded
// reference inside the vehicle envelope for any admissible path point.
struct GammaBounds {
  double rate_min = 0.0;   // gamma-dot lower bound, >= 0
  double rate_max = 0.0;   // gamma-dot upper bound, >= 1
  double accel_max = 0.0;  // |gamma-ddot| bound, > 0
};

GammaBounds derive_gamma_bounds(const PhysicalBounds& bounds);

struct TrajectorySample {
  Eigen::Vector3d position;
  Eigen::Vector3d velocity;      // d position / d gamma
  Eigen::Vector3d acceleration;  // d^2 position / d gamma^2
};

// Pre-assigned path, parameterized by virtual time gamma in [0, duration].
// Evaluation clamps gamma at both ends (the vehicle holds at the endpoints).
class DesiredTrajectory {
 public:
  struct Segment {
    double gamma_start = 0.0;
    double gamma_end = 0.0;
    Eigen::Vector3d start;
    Eigen::Vector3d end;
  };

  static DesiredTrajectory circle(const Eigen::Vector3d& center, double radius,
                                  double angular_rate, double phase,
                                  double duration);
  static DesiredTrajectory line(const Eigen::Vector3d& start,
                                const Eigen::Vector3d& end, double duration);
  // Chained straight segments; consecutive segments must agree at the joint
  // and cover [0, duration] without gaps.
  static DesiredTrajectory composite(std::vector<Segment> segments);

  TrajectorySample at(double gamma) const;
  double duration() const { return duration_; }

  // Largest violation of the declared speed band over a sampled gamma grid;
  // <= 0 means the band holds at every sample.
  double speed_band_violation(double v_d_min, double v_d_max,
                              int samples = 512) const;

 private:
  struct Circle {
    Eigen::Vector3d center;
    double radius, angular_rate, phase;
  };
  struct Line {
    Eigen::Vector3d start, end;
    double duration;
  };
  struct Composite {
    std::vector<Segment> segments;
  };

  DesiredTrajectory() = default;
  std::variant<Circle, Line, Composite> shape_;
  double duration_ = 0.0;
};

// Smallest pairwise Euclidean distance between the reference positions of
// all agents at their current virtual times.
double min_pairwise_separation(std::span<const DesiredTrajectory> trajectories,
                               std::span<const double> gammas);

// Same metric on already-evaluated positions (e.g. tracked vehicle states).
double min_pairwise_separation(std::span<const Eigen::Vector3d> positions);

}  // namespace tcoord

#endif  // TCOORD_MISSION_HPP
