#include "racing/speed_profiler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace racing {
namespace {

using Eigen::Index;

// Squared speed reached after `ds` metres starting from squared speed `v0`,
// with the friction headroom evaluated at the arrival speed. The arrival speed
// v solves v = v0 + 2 ds F(v) / m, where F(v) = mu m g sqrt(1 - (v |K| / mu g)^2)
// (optionally capped by the engine force). The friction branch is the larger
// root of the resulting quadratic.
double advance_squared_speed(double v0, double curvature, double ds,
                             const VehicleParams& params, bool engine_limited,
                             int* saturated) {
  const double mu_g = params.mu * params.g;
  const double kappa = std::abs(curvature) / mu_g;
  if (kappa * v0 >= 1.0) {
    if (kappa * v0 > 1.0 + 1e-9 && saturated) ++*saturated;
    return v0;
  }
  const double reach = 2.0 * ds * mu_g;
  if (engine_limited) {
    const double v_engine = v0 + 2.0 * ds * params.F_engine_max / params.m;
    const double usage = kappa * v_engine;
    if (usage < 1.0 &&
        params.mu * params.m * params.g * std::sqrt(1.0 - usage * usage) >=
            params.F_engine_max) {
      return v_engine;
    }
  }
  const double rk = reach * kappa;
  return (v0 + reach * std::sqrt(1.0 + rk * rk - v0 * v0 * kappa * kappa)) / (1.0 + rk * rk);
}

Index argmin(const Vector& values, Index count) {
  Index best = 0;
  for (Index i = 1; i < count; ++i) {
    if (values(i) < values(best)) best = i;
  }
  return best;
}

void check_inputs(const Vector& limit, const TrackPath& path) {
  if (limit.size() != path.size() || path.curvature.size() != path.size()) {
    throw InputError("speed limit and path sizes differ");
  }
  if (path.size() < 2) throw InputError("speed profile needs at least two stations");
}

void report_saturation(int saturated, const char* pass, Diagnostics* diagnostics) {
  if (saturated > 0 && diagnostics) {
    diagnostics->warn(std::string(pass) + " pass: lateral demand exceeded friction at " +
                      std::to_string(saturated) + " step(s); longitudinal force set to 0");
  }
}

}  // namespace

Vector steady_state_pass(const TrackPath& path, const VehicleParams& params) {
  const double mu_g = params.mu * params.g;
  Vector ux(path.size());
  for (Index k = 0; k < path.size(); ++k) {
    const double k_abs = std::abs(path.curvature(k));
    ux(k) = k_abs * params.U_x_max * params.U_x_max < mu_g ? params.U_x_max
                                                            : std::sqrt(mu_g / k_abs);
  }
  return ux;
}

Vector forward_pass(const Vector& limit, const TrackPath& path, const VehicleParams& params,
                    const ProfileOptions& options, Diagnostics* diagnostics) {
  check_inputs(limit, path);
  const Index n = path.size();
  Vector ux = limit;
  int saturated = 0;
  auto relax = [&](Index from, Index to, double ds) {
    const double v = advance_squared_speed(ux(from) * ux(from), path.curvature(to), ds,
                                           params, true, &saturated);
    const double candidate = std::sqrt(v);
    if (candidate < ux(to)) {
      ux(to) = candidate;
      return true;
    }
    return false;
  };
  if (!path.closed) {
    if (options.initial_speed) ux(0) = std::min(ux(0), *options.initial_speed);
    for (Index k = 1; k < n; ++k) relax(k - 1, k, path.s(k) - path.s(k - 1));
  } else {
    const Index ring = n - 1;
    const Index start = argmin(ux, ring);
    for (int lap = 0; lap < options.max_laps; ++lap) {
      bool changed = false;
      for (Index j = 1; j <= ring; ++j) {
        const Index k = (start + j) % ring;
        const Index prev = (k + ring - 1) % ring;
        changed |= relax(prev, k, path.s(prev + 1) - path.s(prev));
      }
      if (!changed) break;
    }
    ux(n - 1) = ux(0);
  }
  report_saturation(saturated, "forward", diagnostics);
  return ux;
}

Vector backward_pass(const Vector& limit, const TrackPath& path, const VehicleParams& params,
                     const ProfileOptions& options, Diagnostics* diagnostics) {
  check_inputs(limit, path);
  const Index n = path.size();
  Vector ux = limit;
  int saturated = 0;
  auto relax = [&](Index from, Index to, double ds) {
    const double v = advance_squared_speed(ux(from) * ux(from), path.curvature(to), ds,
                                           params, false, &saturated);
    const double candidate = std::sqrt(v);
    if (candidate < ux(to)) {
      ux(to) = candidate;
      return true;
    }
    return false;
  };
  if (!path.closed) {
    if (options.final_speed) ux(n - 1) = std::min(ux(n - 1), *options.final_speed);
    for (Index k = n - 2; k >= 0; --k) relax(k + 1, k, path.s(k + 1) - path.s(k));
  } else {
    const Index ring = n - 1;
    const Index start = argmin(ux, ring);
    for (int lap = 0; lap < options.max_laps; ++lap) {
      bool changed = false;
      for (Index j = 1; j <= ring; ++j) {
        const Index k = (start - j + 2 * ring) % ring;
        const Index next = (k + 1) % ring;
        changed |= relax(next, k, path.s(k + 1) - path.s(k));
      }
      if (!changed) break;
    }
    ux(n - 1) = ux(0);
  }
  report_saturation(saturated, "backward", diagnostics);
  return ux;
}

double lap_time(const Vector& s, const Vector& ux) {
  if (s.size() != ux.size() || s.size() < 2) {
    throw InputError("lap time needs matching station and speed arrays");
  }
  if ((ux.array() <= 0.0).any()) throw InputError("lap time needs positive speeds");
  double t = 0.0;
  for (Index k = 1; k < s.size(); ++k) {
    t += 0.5 * (1.0 / ux(k - 1) + 1.0 / ux(k)) * (s(k) - s(k - 1));
  }
  return t;
}

double lap_time(const SpeedProfile& profile) { return lap_time(profile.s, profile.ux); }

SpeedProfile compute_speed_profile(const TrackPath& path, const VehicleParams& params,
                                   const ProfileOptions& options, Diagnostics* diagnostics) {
  params.validate();
  const Vector steady = steady_state_pass(path, params);
  const Vector forward = forward_pass(steady, path, params, options, diagnostics);
  SpeedProfile profile;
  profile.s = path.s;
  profile.ux = backward_pass(forward, path, params, options, diagnostics);
  profile.lap_time = lap_time(profile.s, profile.ux);
  if (options.keep_passes) profile.passes = PassTraces{steady, forward, profile.ux};
  return profile;
}

FrictionReport friction_usage(const TrackPath& path, const Vector& ux,
                              const VehicleParams& params) {
  FrictionReport report;
  report.max_drive_force = -std::numeric_limits<double>::infinity();
  const double weight = params.m * params.g;
  for (Index k = 0; k + 1 < path.size(); ++k) {
    const double ds = path.s(k + 1) - path.s(k);
    const double fx = params.m * (ux(k + 1) * ux(k + 1) - ux(k) * ux(k)) / (2.0 * ds);
    report.max_drive_force = std::max(report.max_drive_force, fx);
    const Index j = fx >= 0.0 ? k + 1 : k;
    for (Axle axle : {Axle::kFront, Axle::kRear}) {
      const double fz = params.normal_load(axle);
      const double limit = params.mu * fz;
      // Longitudinal force shared between the axles in proportion to load.
      const double fx_axle = fx * fz / weight;
      const double fy_axle = fz / params.g * ux(j) * ux(j) * path.curvature(j);
      const double usage = (fx_axle / limit) * (fx_axle / limit) + (fy_axle / limit) * (fy_axle / limit);
      if (usage > report.max_usage) {
        report.max_usage = usage;
        report.worst_station = j;
      }
    }
  }
  return report;
}

}  // namespace racing
