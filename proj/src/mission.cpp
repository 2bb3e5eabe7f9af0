#include "tcoord/mission.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tcoord {

void PhysicalBounds::validate() const {
  if (!(0.0 <= v_min && v_min < v_d_min)) {
    throw std::invalid_argument("need 0 <= v_min < v_d_min");
  }
  if (!(v_d_min <= v_d_max)) {
    throw std::invalid_argument("need v_d_min <= v_d_max");
  }
  if (!(v_d_max < v_max)) {
    throw std::invalid_argument("need v_d_max < v_max");
  }
  if (!(0.0 <= a_d_max && a_d_max < a_max)) {
    throw std::invalid_argument("need 0 <= a_d_max < a_max");
  }
}

GammaBounds derive_gamma_bounds(const PhysicalBounds& bounds) {
  bounds.validate();
  GammaBounds g;
  g.rate_min = bounds.v_min / bounds.v_d_min;
  g.rate_max = bounds.v_max / bounds.v_d_max;
  if (g.rate_max - g.rate_min < 1e-12) {
    throw std::domain_error("degenerate pace window [" +
                            std::to_string(g.rate_min) + ", " +
                            std::to_string(g.rate_max) +
                            "]; no authority to retime the mission");
  }
  // Worst case: fastest pace over the most curved admissible path point.
  g.accel_max =
      (bounds.a_max - g.rate_max * g.rate_max * bounds.a_d_max) / bounds.v_d_max;
  if (g.accel_max <= 0.0) {
    throw std::domain_error(
        "vehicle acceleration budget exhausted by path curvature; "
        "derived pace acceleration bound is " + std::to_string(g.accel_max));
  }
  return g;
}

DesiredTrajectory DesiredTrajectory::circle(const Eigen::Vector3d& center,
                                            double radius, double angular_rate,
                                            double phase, double duration) {
  if (radius <= 0.0) throw std::invalid_argument("circle radius must be positive");
  if (duration <= 0.0) throw std::invalid_argument("duration must be positive");
  DesiredTrajectory t;
  t.shape_ = Circle{center, radius, angular_rate, phase};
  t.duration_ = duration;
  return t;
}

DesiredTrajectory DesiredTrajectory::line(const Eigen::Vector3d& start,
                                          const Eigen::Vector3d& end,
                                          double duration) {
  if (duration <= 0.0) throw std::invalid_argument("duration must be positive");
  DesiredTrajectory t;
  t.shape_ = Line{start, end, duration};
  t.duration_ = duration;
  return t;
}

DesiredTrajectory DesiredTrajectory::composite(std::vector<Segment> segments) {
  if (segments.empty()) throw std::invalid_argument("composite needs segments");
  if (segments.front().gamma_start != 0.0) {
    throw std::invalid_argument("first segment must start at gamma = 0");
  }
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (!(segments[s].gamma_end > segments[s].gamma_start)) {
      throw std::invalid_argument("segment " + std::to_string(s) +
                                  " has non-increasing gamma span");
    }
    if (s > 0) {
      if (segments[s].gamma_start != segments[s - 1].gamma_end) {
        throw std::invalid_argument("gamma gap before segment " + std::to_string(s));
      }
      if ((segments[s].start - segments[s - 1].end).norm() > 1e-9) {
        throw std::invalid_argument("position jump before segment " +
                                    std::to_string(s));
      }
    }
  }
  DesiredTrajectory t;
  t.duration_ = segments.back().gamma_end;
  t.shape_ = Composite{std::move(segments)};
  return t;
}

TrajectorySample DesiredTrajectory::at(double gamma) const {
  const double g = std::clamp(gamma, 0.0, duration_);
  TrajectorySample s;
  if (const auto* c = std::get_if<Circle>(&shape_)) {
    const double a = c->angular_rate * g + c->phase;
    const double r = c->radius, w = c->angular_rate;
    s.position = c->center + Eigen::Vector3d(r * std::cos(a), r * std::sin(a), 0.0);
    s.velocity = Eigen::Vector3d(-r * w * std::sin(a), r * w * std::cos(a), 0.0);
    s.acceleration =
        Eigen::Vector3d(-r * w * w * std::cos(a), -r * w * w * std::sin(a), 0.0);
  } else if (const auto* l = std::get_if<Line>(&shape_)) {
    const Eigen::Vector3d dir = (l->end - l->start) / l->duration;
    s.position = l->start + g * dir;
    s.velocity = dir;
    s.acceleration.setZero();
  } else {
    const auto& segs = std::get<Composite>(shape_).segments;
    // Upper-bound keeps the joint itself owned by the earlier segment.
    std::size_t idx = 0;
    while (idx + 1 < segs.size() && g > segs[idx].gamma_end) ++idx;
    const Segment& seg = segs[idx];
    const double span = seg.gamma_end - seg.gamma_start;
    const Eigen::Vector3d dir = (seg.end - seg.start) / span;
    s.position = seg.start + (g - seg.gamma_start) * dir;
    s.velocity = dir;
    s.acceleration.setZero();
  }
  return s;
}

double DesiredTrajectory::speed_band_violation(double v_d_min, double v_d_max,
                                               int samples) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= samples; ++k) {
    const double g = duration_ * static_cast<double>(k) / samples;
    const double speed = at(g).velocity.norm();
    worst = std::max(worst, std::max(v_d_min - speed, speed - v_d_max));
  }
  return worst;
}

double min_pairwise_separation(std::span<const DesiredTrajectory> trajectories,
                               std::span<const double> gammas) {
  if (trajectories.size() != gammas.size()) {
    throw std::invalid_argument("one gamma per trajectory required");
  }
  std::vector<Eigen::Vector3d> pos(trajectories.size());
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    pos[i] = trajectories[i].at(gammas[i]).position;
  }
  return min_pairwise_separation(pos);
}

double min_pairwise_separation(std::span<const Eigen::Vector3d> positions) {
  if (positions.size() < 2) {
    throw std::invalid_argument("separation needs at least two agents");
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = i + 1; j < positions.size(); ++j) {
      best = std::min(best, (positions[i] - positions[j]).norm());
    }
  }
  return best;
}

}  // namespace tcoord
