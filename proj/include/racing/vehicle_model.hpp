#pragma once

#include <Eigen/Core>

#include <cmath>

#include "racing/types.hpp"

namespace racing {

enum class Axle { kFront, kRear };

// Lumped single-track vehicle. Defaults describe the Audi TTS test car.
struct VehicleParams {
  double m = 1500.0;            // kg
  double I_z = 2250.0;          // kg m^2
  double a = 1.04;              // CG to front axle, m
  double b = 1.42;              // CG to rear axle, m
  double C_f = 160000.0;        // N/rad
  double C_r = 180000.0;        // N/rad
  double mu = 0.95;
  double F_engine_max = 3750.0; // N
  double g = 9.81;              // m/s^2
  double U_x_max = 85.0;        // m/s

  double wheelbase() const { return a + b; }
  // Static axle loads; weight transfer is not modelled.
  double normal_load(Axle axle) const {
    return axle == Axle::kFront ? m * g * b / (a + b) : m * g * a / (a + b);
  }
  double stiffness(Axle axle) const { return axle == Axle::kFront ? C_f : C_r; }

  void validate() const;
};

// Lateral state ordering x = [e, dPsi, r, beta, Psi].
namespace state {
inline constexpr int kE = 0;
inline constexpr int kDPsi = 1;
inline constexpr int kR = 2;
inline constexpr int kBeta = 3;
inline constexpr int kPsi = 4;
inline constexpr int kSize = 5;
}  // namespace state

template <typename Scalar>
using StateMatrix = Eigen::Matrix<Scalar, state::kSize, state::kSize>;
template <typename Scalar>
using StateVector = Eigen::Matrix<Scalar, state::kSize, 1>;

template <typename Scalar>
Scalar saturation_angle(Scalar C, Scalar F_z, Scalar mu) {
  using std::atan;
  return atan(Scalar(3) * mu * F_z / C);
}

// Brush (Fiala) lateral tire force with a single friction coefficient.
template <typename Scalar>
Scalar fiala_force(Scalar alpha, Scalar C, Scalar F_z, Scalar mu) {
  using std::abs;
  using std::tan;
  const Scalar limit = mu * F_z;
  if (abs(alpha) < saturation_angle(C, F_z, mu)) {
    const Scalar t = tan(alpha);
    return -C * t + C * C / (Scalar(3) * limit) * abs(t) * t -
           C * C * C / (Scalar(27) * limit * limit) * t * t * t;
  }
  return alpha > Scalar(0) ? -limit : (alpha < Scalar(0) ? limit : Scalar(0));
}

// dF/d(alpha); zero in the sliding region and at the saturation angle.
template <typename Scalar>
Scalar fiala_slope(Scalar alpha, Scalar C, Scalar F_z, Scalar mu) {
  using std::abs;
  using std::tan;
  if (abs(alpha) >= saturation_angle(C, F_z, mu)) return Scalar(0);
  const Scalar limit = mu * F_z;
  const Scalar t = tan(alpha);
  const Scalar dF_dt = -C + Scalar(2) * C * C / (Scalar(3) * limit) * abs(t) -
                       C * C * C / (Scalar(9) * limit * limit) * t * t;
  return dF_dt * (Scalar(1) + t * t);
}

template <typename Scalar>
struct TireLinearization {
  Scalar F_tilde{0};
  Scalar alpha_tilde{0};
  Scalar C_tilde{0};
  Scalar F_z{0};
  bool clamped = false;
};

template <typename Scalar>
struct AxleLinearization {
  TireLinearization<Scalar> front;
  TireLinearization<Scalar> rear;
};

// Slip angle on the unsaturated branch producing `force`, found by bisection.
double invert_fiala(double force, double C, double F_z, double mu,
                    double tolerance = 1e-10);

// Fraction of mu F_z beyond which the steady-state force is not linearized.
inline constexpr double kSaturationClamp = 0.999;

// Steady-state cornering force F_z/g * U^2 K and the local tire slope there.
// Forces past clamp * mu F_z are held at that value and counted.
TireLinearization<double> linearize_tire(double U_x, double curvature, Axle axle,
                                         const VehicleParams& params,
                                         Diagnostics* diagnostics = nullptr,
                                         double clamp = kSaturationClamp);
AxleLinearization<double> linearize_axles(double U_x, double curvature,
                                          const VehicleParams& params,
                                          Diagnostics* diagnostics = nullptr,
                                          double clamp = kSaturationClamp);

template <typename Scalar>
struct ContinuousModel {
  StateMatrix<Scalar> A = StateMatrix<Scalar>::Zero();
  StateVector<Scalar> B = StateVector<Scalar>::Zero();
  StateVector<Scalar> d = StateVector<Scalar>::Zero();
};

// Affine lateral dynamics x' = A x + B delta + d about steady-state cornering.
template <typename Scalar>
ContinuousModel<Scalar> continuous_matrices(Scalar U_x, Scalar curvature,
                                            const AxleLinearization<Scalar>& lin,
                                            const VehicleParams& params) {
  if (!(U_x > Scalar(0))) throw InputError("continuous_matrices requires U_x > 0");
  using namespace state;
  const Scalar m(params.m);
  const Scalar I_z(params.I_z);
  const Scalar a(params.a);
  const Scalar b(params.b);
  const Scalar Cf = lin.front.C_tilde;
  const Scalar Cr = lin.rear.C_tilde;

  ContinuousModel<Scalar> model;
  auto& A = model.A;
  A(kE, kDPsi) = U_x;
  A(kE, kBeta) = U_x;
  A(kDPsi, kR) = Scalar(1);
  A(kR, kR) = -(a * a * Cf + b * b * Cr) / (U_x * I_z);
  A(kR, kBeta) = (b * Cr - a * Cf) / I_z;
  A(kBeta, kR) = (b * Cr - a * Cf) / (m * U_x * U_x) - Scalar(1);
  A(kBeta, kBeta) = -(Cf + Cr) / (m * U_x);
  A(kPsi, kR) = Scalar(1);

  model.B(kR) = a * Cf / I_z;
  model.B(kBeta) = Cf / (m * U_x);

  const auto& f = lin.front;
  const auto& r = lin.rear;
  model.d(kDPsi) = -curvature * U_x;
  model.d(kR) = (a * Cf * f.alpha_tilde - b * Cr * r.alpha_tilde + a * f.F_tilde -
                 b * r.F_tilde) / I_z;
  model.d(kBeta) = (Cf * f.alpha_tilde + Cr * r.alpha_tilde + f.F_tilde + r.F_tilde) /
                   (m * U_x);
  return model;
}

enum class Discretization { kEuler, kZeroOrderHold };

template <typename Scalar>
struct DiscreteModel {
  StateMatrix<Scalar> A;
  StateVector<Scalar> B;
  StateVector<Scalar> d;
  Scalar dt{0};
  Scalar spectral_radius{0};
  bool unstable = false;
};

// Forward Euler (A_k = I + A dt) or exact zero-order hold of the affine model.
// Flags the step when the spectral radius of A_k exceeds `radius_bound`.
DiscreteModel<double> discretize(const ContinuousModel<double>& model, double dt,
                                 Discretization scheme = Discretization::kEuler,
                                 double radius_bound = 1.0,
                                 Diagnostics* diagnostics = nullptr);

// Steady-state cornering operating point for speed U_x on curvature K.
struct SteadyCornering {
  double delta = 0.0;
  double beta = 0.0;
  double yaw_rate = 0.0;
  double alpha_front = 0.0;
  double alpha_rear = 0.0;
};
SteadyCornering steady_cornering(double U_x, double curvature, const VehicleParams& params);

}  // namespace racing
