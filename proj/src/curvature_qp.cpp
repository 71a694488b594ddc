#include "racing/curvature_qp.hpp"

#include <cmath>
#include <initializer_list>
#include <utility>
#include <string>

namespace racing {
namespace {

using Eigen::Index;
using Triplet = Eigen::Triplet<double>;

void check_sizes(const TrackPath& path, const SpeedProfile& profile) {
  if (profile.ux.size() != path.size() || profile.s.size() != path.size()) {
    throw InputError("speed profile and path have different station counts");
  }
  if (path.size() < 3) throw InputError("curvature QP needs at least three stations");
}

// Heading entering the curvature cost at station k.
double penalized_heading(const QpProblem& problem, const Vector& z, Index k) {
  const double psi = z(QpProblem::state_index(k, state::kPsi));
  if (problem.heading_cost == HeadingCost::kBody) return psi;
  return psi + z(QpProblem::state_index(k, state::kBeta));
}

}  // namespace

const char* to_string(HeadingCost cost) {
  return cost == HeadingCost::kCourse ? "course" : "body";
}

AffineDynamics build_dynamics(const TrackPath& path, const SpeedProfile& profile,
                              const VehicleParams& params, const QpConfig& config,
                              Diagnostics* diagnostics) {
  check_sizes(path, profile);
  const Index T = path.size();
  AffineDynamics dynamics(T - 1);
  for (Index k = 0; k + 1 < T; ++k) {
    const double ux = profile.ux(k);
    if (!(ux >= config.speed_floor)) {
      throw InputError("speed " + std::to_string(ux) + " m/s at s = " +
                       std::to_string(path.s(k)) + " m is below the speed floor");
    }
    const AxleLinearization<double> lin =
        linearize_axles(ux, path.curvature(k), params, diagnostics, config.saturation_clamp);
    const ContinuousModel<double> model =
        continuous_matrices(ux, path.curvature(k), lin, params);
    const double dt = (path.s(k + 1) - path.s(k)) / ux;
    dynamics[k] = discretize(model, dt, config.discretization, 1.0, diagnostics);
  }
  return dynamics;
}

QpProblem build_qp(const TrackPath& path, const SpeedProfile& profile,
                   const AffineDynamics& dynamics, double lambda, const QpConfig& config,
                   const std::optional<StateVector<double>>& initial_state) {
  check_sizes(path, profile);
  const Index T = path.size();
  if (static_cast<Index>(dynamics.size()) != T - 1) {
    throw InputError("dynamics count does not match the path");
  }
  if (!(lambda >= 0.0)) throw InputError("lambda must be non-negative");
  if (path.w_in.size() != T || path.w_out.size() != T) {
    throw InputError("path offsets have the wrong size");
  }

  QpProblem qp;
  qp.T = T;
  qp.closed = path.closed;
  qp.lambda = lambda;
  qp.heading_cost = config.heading_cost;
  qp.ds = path.s.tail(T - 1) - path.s.head(T - 1);
  if ((qp.ds.array() <= 0.0).any()) throw InputError("stations must be strictly increasing");
  qp.psi_weight = qp.ds.array().square().inverse();
  const Index nz = qp.variables();

  // w (sum_i g_i (v_i - u_i))^2 for heading components v at k, u at k - 1.
  std::vector<Triplet> h;
  auto add_difference = [&](std::initializer_list<std::pair<Index, Index>> parts, double w) {
    for (const auto& [vi, ui] : parts) {
      for (const auto& [vj, uj] : parts) {
        h.emplace_back(vi, vj, 2.0 * w);
        h.emplace_back(ui, uj, 2.0 * w);
        h.emplace_back(vi, uj, -2.0 * w);
        h.emplace_back(ui, vj, -2.0 * w);
      }
    }
  };
  for (Index k = 1; k < T; ++k) {
    const std::pair psi{QpProblem::state_index(k, state::kPsi),
                        QpProblem::state_index(k - 1, state::kPsi)};
    const std::pair beta{QpProblem::state_index(k, state::kBeta),
                         QpProblem::state_index(k - 1, state::kBeta)};
    if (config.heading_cost == HeadingCost::kCourse) {
      add_difference({psi, beta}, qp.psi_weight(k - 1));
    } else {
      add_difference({psi}, qp.psi_weight(k - 1));
    }
    if (lambda > 0.0) add_difference({{qp.input_index(k), qp.input_index(k - 1)}}, lambda);
  }
  for (Index i = 0; i < nz; ++i) h.emplace_back(i, i, 2.0 * config.ridge);
  qp.H.resize(nz, nz);
  qp.H.setFromTriplets(h.begin(), h.end());
  qp.f = Vector::Zero(nz);

  std::vector<Triplet> a;
  std::vector<double> b;
  for (Index k = 0; k + 1 < T; ++k) {
    const DiscreteModel<double>& dyn = dynamics[k];
    for (int i = 0; i < state::kSize; ++i) {
      const Index row = static_cast<Index>(b.size());
      a.emplace_back(row, QpProblem::state_index(k + 1, i), 1.0);
      for (int j = 0; j < state::kSize; ++j) {
        if (dyn.A(i, j) != 0.0) a.emplace_back(row, QpProblem::state_index(k, j), -dyn.A(i, j));
      }
      if (dyn.B(i) != 0.0) a.emplace_back(row, qp.input_index(k), -dyn.B(i));
      b.push_back(dyn.d(i));
    }
  }
  qp.dynamics_rows = static_cast<Index>(b.size());
  if (path.closed) {
    for (int i : {state::kE, state::kDPsi, state::kR, state::kBeta}) {
      const Index row = static_cast<Index>(b.size());
      a.emplace_back(row, QpProblem::state_index(T - 1, i), 1.0);
      a.emplace_back(row, QpProblem::state_index(0, i), -1.0);
      b.push_back(0.0);
    }
    const Index row = static_cast<Index>(b.size());
    a.emplace_back(row, qp.input_index(T - 1), 1.0);
    a.emplace_back(row, qp.input_index(0), -1.0);
    b.push_back(0.0);
  }
  if (initial_state) {
    for (int i = 0; i < state::kSize; ++i) {
      const Index row = static_cast<Index>(b.size());
      a.emplace_back(row, QpProblem::state_index(0, i), 1.0);
      b.push_back((*initial_state)(i));
    }
  }
  qp.A_eq.resize(static_cast<Index>(b.size()), nz);
  qp.A_eq.setFromTriplets(a.begin(), a.end());
  qp.b_eq = Eigen::Map<const Vector>(b.data(), static_cast<Index>(b.size()));
  qp.e_lower = path.w_out;
  qp.e_upper = path.w_in;
  return qp;
}

SparseQp to_sparse_qp(const QpProblem& problem) {
  const Index nz = problem.variables();
  const Index meq = problem.A_eq.rows();
  const Index T = problem.T;
  // On a closed path the last station's bound repeats the first through periodicity.
  const Index bounded = problem.closed ? T - 1 : T;
  std::vector<Triplet> a;
  a.reserve(problem.A_eq.nonZeros() + bounded);
  for (Index j = 0; j < problem.A_eq.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(problem.A_eq, j); it; ++it) {
      a.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (Index k = 0; k < bounded; ++k) {
    a.emplace_back(meq + k, QpProblem::state_index(k, state::kE), 1.0);
  }
  SparseQp qp;
  qp.P = problem.H;
  qp.q = problem.f;
  qp.A.resize(meq + bounded, nz);
  qp.A.setFromTriplets(a.begin(), a.end());
  qp.l.resize(meq + bounded);
  qp.u.resize(meq + bounded);
  qp.l << problem.b_eq, problem.e_lower.head(bounded);
  qp.u << problem.b_eq, problem.e_upper.head(bounded);
  return qp;
}

double curvature_objective(const QpProblem& problem, const Vector& z) {
  double total = 0.0;
  for (Index k = 1; k < problem.T; ++k) {
    const double dpsi = penalized_heading(problem, z, k) - penalized_heading(problem, z, k - 1);
    const double ddelta = z(problem.input_index(k)) - z(problem.input_index(k - 1));
    total += problem.psi_weight(k - 1) * dpsi * dpsi + problem.lambda * ddelta * ddelta;
  }
  return total;
}

Vector stack_solution(const QpSolution& solution) {
  const Index T = solution.delta.size();
  Vector z(state::kSize * T + T);
  z.head(state::kSize * T) = Eigen::Map<const Vector>(solution.x.data(), state::kSize * T);
  z.tail(T) = solution.delta;
  return z;
}

QpSolution solve_qp(const QpProblem& problem, double tol, int max_iter, QpMethod method) {
  const SparseQp sparse = to_sparse_qp(problem);
  QpSettings settings;
  settings.tol = tol;
  settings.max_iter = max_iter;
  settings.method = method;
  const QpResult result = solve_sparse_qp(sparse, settings);

  QpSolution sol;
  const Index T = problem.T;
  sol.status = result.status;
  sol.iterations = result.iterations;
  sol.wall_time = result.wall_time;
  sol.kkt_residual = result.residuals.kkt();
  sol.primal_residual = result.residuals.primal;
  sol.dual_residual = result.residuals.dual;
  sol.x = Eigen::Map<const Eigen::Matrix<double, state::kSize, Eigen::Dynamic>>(
      result.x.data(), state::kSize, T);
  sol.delta = result.x.tail(T);
  sol.objective = curvature_objective(problem, result.x);
  if (problem.dynamics_rows > 0) {
    const Vector r = problem.A_eq * result.x - problem.b_eq;
    sol.dynamics_residual = r.head(problem.dynamics_rows).cwiseAbs().maxCoeff();
  }
  return sol;
}

QpSolution min_curvature_step(const TrackPath& path, const SpeedProfile& profile,
                              const VehicleParams& params, const QpConfig& config,
                              Diagnostics* diagnostics,
                              const std::optional<StateVector<double>>& initial_state) {
  const AffineDynamics dynamics = build_dynamics(path, profile, params, config, diagnostics);
  const QpProblem problem = build_qp(path, profile, dynamics, config.lambda, config, initial_state);
  return solve_qp(problem, config.qp_tol, config.qp_max_iter, config.method);
}

StateVector<double> equilibrium_state(const TrackPath& path, const SpeedProfile& profile,
                                      Eigen::Index k, const VehicleParams& params) {
  const SteadyCornering ss = steady_cornering(profile.ux(k), path.curvature(k), params);
  StateVector<double> x;
  x(state::kE) = 0.0;
  x(state::kDPsi) = -ss.beta;
  x(state::kR) = ss.yaw_rate;
  x(state::kBeta) = ss.beta;
  x(state::kPsi) = path.heading(k) - ss.beta;
  return x;
}

}  // namespace racing
