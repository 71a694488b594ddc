#pragma once

#include <vector>

#include "racing/speed_profiler.hpp"
#include "racing/track_geometry.hpp"
#include "racing/vehicle_model.hpp"

namespace racing {

struct ControllerGains {
  double k_lat = 0.05;   // rad/m
  double x_la = 15.0;    // m
  double k_speed = 0.5;  // 1/s
  double k_beta = 1.0;   // rad/rad, countersteer on sideslip beyond steady state

  void validate() const;
};

struct SimOptions {
  double dt = 0.005;
  double max_lateral_error = 25.0;
  // Abort when the run takes longer than this multiple of the planned time.
  double time_limit_factor = 5.0;
};

// Path and speed profile being tracked, with lookups at arbitrary stations.
class Trajectory {
 public:
  Trajectory(const TrackPath& path, const SpeedProfile& profile);

  const TrackPath& path() const { return path_; }
  double length() const { return path_.total_length(); }

  struct Sample {
    double curvature = 0.0;
    double heading = 0.0;
    double speed = 0.0;
    double speed_slope = 0.0;  // dU/ds
  };
  Sample at(double s) const;

  // Nearest point on the polyline, searched outward from `segment`, which is
  // updated in place.
  Projection project(const Eigen::Vector2d& point, Eigen::Index& segment) const;

 private:
  Eigen::Index segment_of(double s) const;

  TrackPath path_;
  Vector speed_;
};

// Global pose plus the path-relative states recovered by projection.
struct SimState {
  double t = 0.0;
  double east = 0.0;
  double north = 0.0;
  double psi = 0.0;
  double r = 0.0;
  double beta = 0.0;
  double ux = 0.0;
  double s = 0.0;         // distance travelled along the path, not wrapped
  double e = 0.0;
  double dpsi = 0.0;
  Eigen::Index segment = 0;
};

struct ControlInput {
  double delta = 0.0;
  double fx = 0.0;
};

struct TireForces {
  double front = 0.0;
  double rear = 0.0;
};

// Steady-state cornering on the path at its start.
SimState initial_state(const Trajectory& trajectory, const VehicleParams& params);

ControlInput control(const SimState& state, const Trajectory& trajectory,
                     const VehicleParams& params, const ControllerGains& gains);

TireForces lateral_forces(const SimState& state, double delta, const VehicleParams& params);

// One fixed step of fourth-order Runge-Kutta with the control held constant.
// Throws OffTrackError when |e| exceeds `options.max_lateral_error`.
SimState step(const SimState& state, const Trajectory& trajectory, const VehicleParams& params,
              const ControllerGains& gains, const SimOptions& options = {});

struct SimLogRow {
  double t = 0.0;
  double s = 0.0;
  double e = 0.0;
  double dpsi = 0.0;
  double ux = 0.0;
  double delta = 0.0;
  double fyf = 0.0;
  double fyr = 0.0;
  double fx = 0.0;
};

struct SimResult {
  double lap_time = 0.0;
  double max_abs_e = 0.0;
  std::vector<SimLogRow> logs;
};

// Drives one lap (closed paths) or to the end of the path (open paths).
SimResult simulate_lap(const TrackPath& path, const SpeedProfile& profile,
                       const VehicleParams& params, const ControllerGains& gains = {},
                       const SimOptions& options = {});

}  // namespace racing
