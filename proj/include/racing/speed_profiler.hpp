#pragma once

#include <optional>

#include "racing/track_geometry.hpp"
#include "racing/types.hpp"
#include "racing/vehicle_model.hpp"

namespace racing {

struct PassTraces {
  Vector steady;
  Vector forward;
  Vector backward;
};

struct SpeedProfile {
  Vector s;
  Vector ux;
  double lap_time = 0.0;
  std::optional<PassTraces> passes;
};

struct ProfileOptions {
  // Entry and exit speeds of open paths; default to the steady-state limit.
  std::optional<double> initial_speed;
  std::optional<double> final_speed;
  bool keep_passes = false;
  int max_laps = 8;
};

// Friction-limited cornering speed sqrt(mu g / |K|), capped at U_x_max.
Vector steady_state_pass(const TrackPath& path, const VehicleParams& params);

// Acceleration-limited march in increasing s. Each step solves
//   U(s + ds)^2 = U(s)^2 + 2 ds F_accel(U(s + ds)) / m
// where F_accel is the engine force capped by the friction headroom left by
// the lateral demand at the arrival station, then takes the minimum with
// `limit`. Closed paths wrap until a full lap changes nothing.
Vector forward_pass(const Vector& limit, const TrackPath& path, const VehicleParams& params,
                    const ProfileOptions& options = {}, Diagnostics* diagnostics = nullptr);

// Braking-limited march in decreasing s, with the braking headroom evaluated
// at the station being updated.
Vector backward_pass(const Vector& limit, const TrackPath& path, const VehicleParams& params,
                     const ProfileOptions& options = {}, Diagnostics* diagnostics = nullptr);

// Trapezoidal integral of ds / U over the stations.
double lap_time(const Vector& s, const Vector& ux);
double lap_time(const SpeedProfile& profile);

SpeedProfile compute_speed_profile(const TrackPath& path, const VehicleParams& params,
                                   const ProfileOptions& options = {},
                                   Diagnostics* diagnostics = nullptr);

// Largest per-axle friction-circle usage along the profile, with the
// longitudinal force implied by the speed change across each segment and the
// lateral force (F_z / g) U^2 K at the faster end of the segment.
struct FrictionReport {
  double max_usage = 0.0;  // max of (F_x/muF_z)^2 + (F_y/muF_z)^2
  double max_drive_force = 0.0;
  Eigen::Index worst_station = 0;
};
FrictionReport friction_usage(const TrackPath& path, const Vector& ux,
                              const VehicleParams& params);

}  // namespace racing
