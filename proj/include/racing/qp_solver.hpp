#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "racing/types.hpp"

namespace racing {

using SparseMatrix = Eigen::SparseMatrix<double>;

// minimize 0.5 x'Px + q'x  subject to  l <= Ax <= u.
// P is stored in full (both triangles) and must be positive semidefinite.
// Rows with l == u are equalities; infinite bounds are allowed.
struct SparseQp {
  SparseMatrix P;
  Vector q;
  SparseMatrix A;
  Vector l;
  Vector u;
};

enum class QpMethod { kInteriorPoint, kAdmm };

struct QpSettings {
  QpMethod method = QpMethod::kInteriorPoint;
  double tol = 1e-6;       // absolute KKT tolerance, unscaled
  int max_iter = 100;      // interior-point or ADMM iterations
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;      // over-relaxation
  int scaling_passes = 10;
  int check_every = 25;
  bool polish = true;
  int max_polish_rounds = 30;
};

enum class QpStatus { kOptimal, kMaxIter, kInfeasible };

const char* to_string(QpStatus status);

struct QpResiduals {
  double primal = 0.0;           // |Ax - clamp(Ax, l, u)|_inf
  double dual = 0.0;             // |Px + q + A'y|_inf
  double complementarity = 0.0;  // max |y_i| * slack_i on the bound y_i pushes against

  double kkt() const;
};

struct QpResult {
  Vector x;
  Vector y;  // negative on active lower bounds, positive on active upper bounds
  double objective = 0.0;
  QpResiduals residuals;
  int iterations = 0;
  int polish_rounds = 0;
  bool polished = false;
  QpStatus status = QpStatus::kMaxIter;
  double wall_time = 0.0;
};

QpResiduals qp_residuals(const SparseQp& qp, const Vector& x, const Vector& y);
double qp_objective(const SparseQp& qp, const Vector& x);

// Both methods work on a Ruiz-equilibrated copy and factor a quasi-definite
// KKT matrix with a sparse LDL' whose symbolic analysis is reused.
// kInteriorPoint: Mehrotra predictor-corrector.
// kAdmm: operator splitting with adaptive rho, followed by an active-set
// polish that solves the reduced KKT system directly.
QpResult solve_sparse_qp(const SparseQp& qp, const QpSettings& settings = {});

}  // namespace racing
