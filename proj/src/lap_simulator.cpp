#include "racing/lap_simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace racing {
namespace {

using Eigen::Index;
using Eigen::Vector2d;

// [E, N, psi, r, beta, U]
using Pose = Eigen::Matrix<double, 6, 1>;

double wrap_angle(double angle) {
  return std::remainder(angle, 2.0 * std::numbers::pi);
}

Pose pose_of(const SimState& s) { return (Pose() << s.east, s.north, s.psi, s.r, s.beta, s.ux).finished(); }

Pose derivative(const Pose& x, const ControlInput& u, const VehicleParams& p) {
  const double psi = x(2);
  const double r = x(3);
  const double beta = x(4);
  const double ux = x(5);
  const double alpha_f = beta + p.a * r / ux - u.delta;
  const double alpha_r = beta - p.b * r / ux;
  const double fyf = fiala_force(alpha_f, p.C_f, p.normal_load(Axle::kFront), p.mu);
  const double fyr = fiala_force(alpha_r, p.C_r, p.normal_load(Axle::kRear), p.mu);
  const double vy = ux * std::tan(beta);
  Pose dx;
  dx(0) = -ux * std::sin(psi) - vy * std::cos(psi);
  dx(1) = ux * std::cos(psi) - vy * std::sin(psi);
  dx(2) = r;
  dx(3) = (p.a * fyf - p.b * fyr) / p.I_z;
  dx(4) = (fyf + fyr) / (p.m * ux) - r;
  dx(5) = u.fx / p.m;
  return dx;
}

}  // namespace

void ControllerGains::validate() const {
  if (!(k_lat > 0.0) || !(x_la > 0.0) || !(k_speed > 0.0) || !(k_beta >= 0.0)) {
    throw InputError("controller gains must be positive (k_beta may be zero)");
  }
}

Trajectory::Trajectory(const TrackPath& path, const SpeedProfile& profile)
    : path_(path), speed_(profile.ux) {
  if (speed_.size() != path_.size() || path_.size() < 2) {
    throw InputError("trajectory path and speed profile differ in length");
  }
  if ((speed_.array() <= 0.0).any()) throw InputError("trajectory speeds must be positive");
}

Index Trajectory::segment_of(double s) const {
  const auto it = std::upper_bound(path_.s.data(), path_.s.data() + path_.size(), s);
  const Index i = static_cast<Index>(it - path_.s.data()) - 1;
  return std::clamp<Index>(i, 0, path_.size() - 2);
}

Trajectory::Sample Trajectory::at(double s) const {
  const double L = length();
  s = path_.closed ? s - L * std::floor(s / L) : std::clamp(s, 0.0, L);
  const Index i = segment_of(s);
  const double ds = path_.s(i + 1) - path_.s(i);
  const double u = std::clamp((s - path_.s(i)) / ds, 0.0, 1.0);
  Sample out;
  out.curvature = path_.curvature(i) + u * (path_.curvature(i + 1) - path_.curvature(i));
  out.heading = path_.heading(i) + u * (path_.heading(i + 1) - path_.heading(i));
  out.speed = speed_(i) + u * (speed_(i + 1) - speed_(i));
  out.speed_slope = (speed_(i + 1) - speed_(i)) / ds;
  return out;
}

Projection Trajectory::project(const Vector2d& point, Index& segment) const {
  const Index segments = path_.size() - 1;
  auto onto = [&](Index i) {
    const Vector2d q0 = path_.point(i);
    const Vector2d d = path_.point(i + 1) - q0;
    const double len2 = d.squaredNorm();
    Projection p;
    p.segment = i;
    p.fraction = len2 > 0.0 ? std::clamp((point - q0).dot(d) / len2, 0.0, 1.0) : 0.0;
    const Vector2d foot = q0 + p.fraction * d;
    const Vector2d offset = point - foot;
    p.station = path_.s(i) + p.fraction * (path_.s(i + 1) - path_.s(i));
    const double side = d.x() * offset.y() - d.y() * offset.x();
    p.lateral = side >= 0.0 ? offset.norm() : -offset.norm();
    return p;
  };
  auto neighbour = [&](Index i, int dir) -> Index {
    const Index j = i + dir;
    if (j >= 0 && j < segments) return j;
    if (!path_.closed) return -1;
    return (j + segments) % segments;
  };
  segment = std::clamp<Index>(segment, 0, segments - 1);
  Projection best = onto(segment);
  for (Index guard = 0; guard < segments; ++guard) {
    bool moved = false;
    for (int dir : {1, -1}) {
      const Index j = neighbour(best.segment, dir);
      if (j < 0) continue;
      const Projection candidate = onto(j);
      if (std::abs(candidate.lateral) < std::abs(best.lateral) - 1e-12) {
        best = candidate;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  segment = best.segment;
  return best;
}

SimState initial_state(const Trajectory& trajectory, const VehicleParams& params) {
  const TrackPath& path = trajectory.path();
  const Trajectory::Sample ref = trajectory.at(0.0);
  const SteadyCornering ss = steady_cornering(ref.speed, ref.curvature, params);
  SimState state;
  state.east = path.east(0);
  state.north = path.north(0);
  state.psi = ref.heading - ss.beta;
  state.r = ss.yaw_rate;
  state.beta = ss.beta;
  state.ux = ref.speed;
  state.dpsi = -ss.beta;
  return state;
}

TireForces lateral_forces(const SimState& state, double delta, const VehicleParams& params) {
  const double alpha_f = state.beta + params.a * state.r / state.ux - delta;
  const double alpha_r = state.beta - params.b * state.r / state.ux;
  return {fiala_force(alpha_f, params.C_f, params.normal_load(Axle::kFront), params.mu),
          fiala_force(alpha_r, params.C_r, params.normal_load(Axle::kRear), params.mu)};
}

ControlInput control(const SimState& state, const Trajectory& trajectory,
                     const VehicleParams& params, const ControllerGains& gains) {
  const Trajectory::Sample ref = trajectory.at(state.s);
  const SteadyCornering ss = steady_cornering(state.ux, ref.curvature, params);
  ControlInput u;
  // Heading error is measured against the steady-state sideslip so that the
  // lookahead error vanishes in steady cornering on the path. The sideslip term
  // countersteers when the rear lets go; at the friction limit the lookahead
  // term alone cannot stop the yaw from building up.
  u.delta = ss.delta - gains.k_lat * (state.e + gains.x_la * (state.dpsi + ss.beta)) +
            gains.k_beta * (state.beta - ss.beta);

  const double accel_ff = ref.speed * ref.speed_slope;
  const double fx = params.m * accel_ff + gains.k_speed * params.m * (ref.speed - state.ux);
  const double grip = params.mu * params.m * params.g;
  // Throttle only uses the grip left over from cornering at the current speed.
  const double lateral = params.m * state.ux * state.ux * std::abs(ref.curvature);
  const double drive = std::sqrt(std::max(0.0, grip * grip - lateral * lateral));
  u.fx = std::clamp(fx, -grip, std::min(params.F_engine_max, drive));
  return u;
}

SimState step(const SimState& state, const Trajectory& trajectory, const VehicleParams& params,
              const ControllerGains& gains, const SimOptions& options) {
  if (!(options.dt > 0.0)) throw InputError("time step must be positive");
  const ControlInput u = control(state, trajectory, params, gains);
  const double h = options.dt;
  const Pose x = pose_of(state);
  const Pose k1 = derivative(x, u, params);
  const Pose k2 = derivative(x + 0.5 * h * k1, u, params);
  const Pose k3 = derivative(x + 0.5 * h * k2, u, params);
  const Pose k4 = derivative(x + h * k3, u, params);
  const Pose next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

  SimState out = state;
  out.t = state.t + h;
  out.east = next(0);
  out.north = next(1);
  out.psi = next(2);
  out.r = next(3);
  out.beta = next(4);
  out.ux = next(5);
  if (!(out.ux > 0.0)) throw OffTrackError("vehicle stopped", state.s);

  const double L = trajectory.length();
  const Projection p = trajectory.project({out.east, out.north}, out.segment);
  double advance = p.station - (state.s - L * std::floor(state.s / L));
  if (trajectory.path().closed) advance = std::remainder(advance, L);
  out.s = std::max(state.s, state.s + advance);
  out.e = p.lateral;
  out.dpsi = wrap_angle(out.psi - trajectory.at(out.s).heading);
  if (std::abs(out.e) > options.max_lateral_error) {
    throw OffTrackError("lateral error " + std::to_string(out.e) + " m at s = " +
                            std::to_string(out.s) + " m",
                        out.s);
  }
  return out;
}

SimResult simulate_lap(const TrackPath& path, const SpeedProfile& profile,
                       const VehicleParams& params, const ControllerGains& gains,
                       const SimOptions& options) {
  params.validate();
  gains.validate();
  const Trajectory trajectory(path, profile);
  const double target = trajectory.length();
  const double planned = lap_time(profile);
  SimResult result;
  SimState state = initial_state(trajectory, params);
  while (true) {
    const ControlInput u = control(state, trajectory, params, gains);
    const TireForces fy = lateral_forces(state, u.delta, params);
    result.logs.push_back(
        {state.t, state.s, state.e, state.dpsi, state.ux, u.delta, fy.front, fy.rear, u.fx});
    const SimState next = step(state, trajectory, params, gains, options);
    if (next.s >= target) {
      const double frac = (target - state.s) / std::max(next.s - state.s, 1e-12);
      result.lap_time = state.t + frac * (next.t - state.t);
      break;
    }
    result.max_abs_e = std::max(result.max_abs_e, std::abs(next.e));
    if (next.t > options.time_limit_factor * planned) {
      throw OffTrackError("no progress along the path", next.s);
    }
    state = next;
  }
  return result;
}

}  // namespace racing
