#pragma once

#include <optional>
#include <vector>

#include "racing/qp_solver.hpp"
#include "racing/speed_profiler.hpp"
#include "racing/track_geometry.hpp"
#include "racing/vehicle_model.hpp"

namespace racing {

// Heading whose station-to-station change is penalized. kCourse uses the
// direction of travel psi + beta, which is what the path update follows;
// kBody uses psi alone, leaving sideslip free.
enum class HeadingCost { kCourse, kBody };

const char* to_string(HeadingCost cost);

struct QpConfig {
  double lambda = 1.0;  // steering-difference weight, 1/m^2
  double qp_tol = 1e-6;
  int qp_max_iter = 100;
  double ridge = 1e-9;
  Discretization discretization = Discretization::kZeroOrderHold;
  double speed_floor = 5.0;  // m/s; slower stations are rejected
  // Linearization stops at this fraction of the friction limit. Right at the
  // limit the local stiffness is about 1% of nominal and corners on the
  // reference path barely move.
  double saturation_clamp = 0.9;
  HeadingCost heading_cost = HeadingCost::kCourse;
  QpMethod method = QpMethod::kInteriorPoint;
};

// One affine step per segment k -> k + 1, built at station k.
using AffineDynamics = std::vector<DiscreteModel<double>>;

// Decision vector z = [x_0, ..., x_{T-1}, delta_0, ..., delta_{T-1}] with the
// five lateral states of each station stacked contiguously.
//
// Closed paths repeat the first station at the end, so periodicity reads
// x_{T-1} = x_0 for [e, dPsi, r, beta] and delta_{T-1} = delta_0. The heading
// advance Psi_{T-1} - Psi_0 over the lap then follows from the dynamics and is
// not imposed as a separate row.
struct QpProblem {
  Eigen::Index T = 0;
  static constexpr int state_dim = state::kSize;
  bool closed = false;
  double lambda = 1.0;
  HeadingCost heading_cost = HeadingCost::kCourse;
  Vector ds;           // s_k - s_{k-1}, k = 1..T-1
  Vector psi_weight;   // 1 / ds^2
  SparseMatrix H;      // objective 0.5 z'Hz + f'z
  Vector f;
  SparseMatrix A_eq;   // dynamics rows first, then periodicity / anchoring rows
  Vector b_eq;
  Eigen::Index dynamics_rows = 0;
  Vector e_lower;      // w_out
  Vector e_upper;      // w_in

  Eigen::Index variables() const { return (state_dim + 1) * T; }
  static Eigen::Index state_index(Eigen::Index k, int component) {
    return state_dim * k + component;
  }
  Eigen::Index input_index(Eigen::Index k) const { return state_dim * T + k; }
};

struct QpSolution {
  Vector delta;
  Eigen::Matrix<double, state::kSize, Eigen::Dynamic> x;
  double objective = 0.0;
  double kkt_residual = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double dynamics_residual = 0.0;
  int iterations = 0;
  QpStatus status = QpStatus::kMaxIter;
  double wall_time = 0.0;
};

// Per-segment linearization and discretization with dt = ds_k / U_k.
AffineDynamics build_dynamics(const TrackPath& path, const SpeedProfile& profile,
                              const VehicleParams& params, const QpConfig& config,
                              Diagnostics* diagnostics = nullptr);

// `initial_state` pins x_0 (used by the preview planner); otherwise open paths
// leave x_0 free.
QpProblem build_qp(const TrackPath& path, const SpeedProfile& profile,
                   const AffineDynamics& dynamics, double lambda, const QpConfig& config,
                   const std::optional<StateVector<double>>& initial_state = std::nullopt);

SparseQp to_sparse_qp(const QpProblem& problem);

QpSolution solve_qp(const QpProblem& problem, double tol = 1e-6, int max_iter = 100,
                    QpMethod method = QpMethod::kInteriorPoint);

// Curvature part of the objective, sum w_k (h_k - h_{k-1})^2 +
// lambda sum (delta_k - delta_{k-1})^2 with h the penalized heading, at a
// stacked decision vector.
double curvature_objective(const QpProblem& problem, const Vector& z);
Vector stack_solution(const QpSolution& solution);

QpSolution min_curvature_step(const TrackPath& path, const SpeedProfile& profile,
                              const VehicleParams& params, const QpConfig& config = {},
                              Diagnostics* diagnostics = nullptr,
                              const std::optional<StateVector<double>>& initial_state =
                                  std::nullopt);

// Steady-state lateral state at station k of the reference (e = 0).
StateVector<double> equilibrium_state(const TrackPath& path, const SpeedProfile& profile,
                                      Eigen::Index k, const VehicleParams& params);

}  // namespace racing
