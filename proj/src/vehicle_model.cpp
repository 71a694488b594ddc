#include "racing/vehicle_model.hpp"

#include <unsupported/Eigen/MatrixFunctions>
#include <Eigen/Eigenvalues>

#include <string>

namespace racing {

void VehicleParams::validate() const {
  const double values[] = {m, I_z, a, b, C_f, C_r, mu, F_engine_max, g, U_x_max};
  const char* names[] = {"m", "I_z", "a", "b", "C_f", "C_r", "mu", "F_engine_max", "g",
                         "U_x_max"};
  for (int i = 0; i < 10; ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
      throw InputError(std::string("vehicle parameter ") + names[i] + " must be positive");
    }
  }
}

double invert_fiala(double force, double C, double F_z, double mu, double tolerance) {
  const double limit = mu * F_z;
  if (std::abs(force) >= limit) {
    throw InputError("requested tire force is at or beyond saturation");
  }
  if (force == 0.0) return 0.0;
  // |F| grows monotonically with |alpha| on [0, saturation angle).
  double lo = 0.0;
  double hi = saturation_angle(C, F_z, mu);
  const double target = std::abs(force);
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (-fiala_force(mid, C, F_z, mu) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double magnitude = 0.5 * (lo + hi);
  return force > 0.0 ? -magnitude : magnitude;
}

TireLinearization<double> linearize_tire(double U_x, double curvature, Axle axle,
                                         const VehicleParams& params,
                                         Diagnostics* diagnostics, double clamp) {
  if (!(U_x > 0.0)) throw InputError("linearize_tire requires U_x > 0");
  if (!(clamp > 0.0 && clamp < 1.0)) throw InputError("saturation clamp must lie in (0, 1)");
  TireLinearization<double> lin;
  lin.F_z = params.normal_load(axle);
  const double C = params.stiffness(axle);
  const double limit = clamp * params.mu * lin.F_z;
  double force = lin.F_z / params.g * U_x * U_x * curvature;
  if (std::abs(force) > limit) {
    force = std::copysign(limit, force);
    lin.clamped = true;
    if (diagnostics) ++diagnostics->clamp_count;
  }
  lin.F_tilde = force;
  lin.alpha_tilde = invert_fiala(force, C, lin.F_z, params.mu);
  lin.C_tilde = -fiala_slope(lin.alpha_tilde, C, lin.F_z, params.mu);
  return lin;
}

AxleLinearization<double> linearize_axles(double U_x, double curvature,
                                          const VehicleParams& params,
                                          Diagnostics* diagnostics, double clamp) {
  return {linearize_tire(U_x, curvature, Axle::kFront, params, diagnostics, clamp),
          linearize_tire(U_x, curvature, Axle::kRear, params, diagnostics, clamp)};
}

DiscreteModel<double> discretize(const ContinuousModel<double>& model, double dt,
                                 Discretization scheme, double radius_bound,
                                 Diagnostics* diagnostics) {
  if (!(dt > 0.0)) throw InputError("discretize requires dt > 0");
  DiscreteModel<double> out;
  out.dt = dt;
  if (scheme == Discretization::kEuler) {
    out.A = StateMatrix<double>::Identity() + model.A * dt;
    out.B = model.B * dt;
    out.d = model.d * dt;
  } else {
    // exp([[A, B, d], [0, 0, 0]] dt) carries the held input and the affine term.
    constexpr int n = state::kSize + 2;
    Eigen::Matrix<double, n, n> augmented = Eigen::Matrix<double, n, n>::Zero();
    augmented.topLeftCorner<state::kSize, state::kSize>() = model.A;
    augmented.block<state::kSize, 1>(0, state::kSize) = model.B;
    augmented.block<state::kSize, 1>(0, state::kSize + 1) = model.d;
    const Eigen::Matrix<double, n, n> phi = (augmented * dt).exp();
    out.A = phi.topLeftCorner<state::kSize, state::kSize>();
    out.B = phi.block<state::kSize, 1>(0, state::kSize);
    out.d = phi.block<state::kSize, 1>(0, state::kSize + 1);
  }
  out.spectral_radius = out.A.eigenvalues().cwiseAbs().maxCoeff();
  if (out.spectral_radius > radius_bound + 1e-6) {
    out.unstable = true;
    if (diagnostics) {
      diagnostics->warn("discrete step with dt = " + std::to_string(dt) +
                        " s has spectral radius " + std::to_string(out.spectral_radius));
    }
  }
  return out;
}

SteadyCornering steady_cornering(double U_x, double curvature, const VehicleParams& params) {
  const AxleLinearization<double> lin = linearize_axles(U_x, curvature, params);
  SteadyCornering ss;
  ss.alpha_front = lin.front.alpha_tilde;
  ss.alpha_rear = lin.rear.alpha_tilde;
  ss.yaw_rate = U_x * curvature;
  ss.beta = ss.alpha_rear + params.b * curvature;
  ss.delta = params.wheelbase() * curvature - ss.alpha_front + ss.alpha_rear;
  return ss;
}

}  // namespace racing
