#include "racing/qp_solver.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

namespace racing {
namespace {

using Eigen::Index;
using Triplet = Eigen::Triplet<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kEqualityRhoScale = 1e3;

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

Vector column_norms(const SparseMatrix& M) {
  Vector out = Vector::Zero(M.cols());
  for (Index j = 0; j < M.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(M, j); it; ++it) {
      out(j) = std::max(out(j), std::abs(it.value()));
    }
  }
  return out;
}

Vector row_norms(const SparseMatrix& M) {
  Vector out = Vector::Zero(M.rows());
  for (Index j = 0; j < M.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(M, j); it; ++it) {
      out(it.row()) = std::max(out(it.row()), std::abs(it.value()));
    }
  }
  return out;
}

Vector to_scaling(const Vector& norms) {
  Vector out(norms.size());
  for (Index i = 0; i < norms.size(); ++i) {
    const double n = norms(i) < 1e-4 ? 1.0 : std::min(norms(i), 1e4);
    out(i) = 1.0 / std::sqrt(n);
  }
  return out;
}

// Ruiz equilibration of the KKT matrix followed by a cost scaling.
struct Scaling {
  Vector D;  // variable scaling
  Vector E;  // constraint scaling
  double c = 1.0;
};

Scaling equilibrate(SparseQp& qp, int passes) {
  Scaling sc{Vector::Ones(qp.P.cols()), Vector::Ones(qp.A.rows()), 1.0};
  for (int pass = 0; pass < passes; ++pass) {
    const Vector d = to_scaling(column_norms(qp.P).cwiseMax(column_norms(qp.A)));
    const Vector e = to_scaling(row_norms(qp.A));
    qp.P = d.asDiagonal() * qp.P * d.asDiagonal();
    qp.A = e.asDiagonal() * qp.A * d.asDiagonal();
    qp.q = qp.q.cwiseProduct(d);
    sc.D = sc.D.cwiseProduct(d);
    sc.E = sc.E.cwiseProduct(e);
  }
  const Vector pn = column_norms(qp.P);
  double cost = std::max(pn.size() ? pn.mean() : 0.0, inf_norm(qp.q));
  cost = cost < 1e-4 ? 1.0 : std::min(cost, 1e4);
  sc.c = 1.0 / cost;
  qp.P *= sc.c;
  qp.q *= sc.c;
  for (Index i = 0; i < qp.l.size(); ++i) {
    if (std::isfinite(qp.l(i))) qp.l(i) *= sc.E(i);
    if (std::isfinite(qp.u(i))) qp.u(i) *= sc.E(i);
  }
  return sc;
}

void append_block(std::vector<Triplet>& out, const SparseMatrix& M, Index row0, Index col0,
                  bool transpose) {
  for (Index j = 0; j < M.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(M, j); it; ++it) {
      if (transpose) {
        out.emplace_back(row0 + it.col(), col0 + it.row(), it.value());
      } else {
        out.emplace_back(row0 + it.row(), col0 + it.col(), it.value());
      }
    }
  }
}

// [P + sigma I, A'; A, -diag(1/rho)]
SparseMatrix admm_kkt(const SparseQp& qp, double sigma, const Vector& rho) {
  const Index n = qp.P.cols();
  const Index m = qp.A.rows();
  std::vector<Triplet> trips;
  trips.reserve(qp.P.nonZeros() + 2 * qp.A.nonZeros() + n + m);
  append_block(trips, qp.P, 0, 0, false);
  append_block(trips, qp.A, n, 0, false);
  append_block(trips, qp.A, 0, n, true);
  for (Index i = 0; i < n; ++i) trips.emplace_back(i, i, sigma);
  for (Index i = 0; i < m; ++i) trips.emplace_back(n + i, n + i, -1.0 / rho(i));
  SparseMatrix K(n + m, n + m);
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

Vector constraint_rho(const SparseQp& qp, double rho) {
  Vector out(qp.l.size());
  for (Index i = 0; i < out.size(); ++i) {
    if (!std::isfinite(qp.l(i)) && !std::isfinite(qp.u(i))) {
      out(i) = kRhoMin;
    } else if (qp.l(i) == qp.u(i)) {
      out(i) = kEqualityRhoScale * rho;
    } else {
      out(i) = rho;
    }
  }
  return out;
}

Vector clamp(const Vector& v, const Vector& lo, const Vector& hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

struct Unscaled {
  Vector x;
  Vector y;
};

Unscaled unscale(const Scaling& sc, const Vector& x, const Vector& y) {
  return {sc.D.cwiseProduct(x), sc.E.cwiseProduct(y) / sc.c};
}

enum class Bound : signed char { kInactive = 0, kLower = -1, kUpper = 1, kEquality = 2 };

// Solve the equality-constrained QP on the active rows of the scaled problem,
// refining against the unregularized KKT matrix. Returns false when the
// factorization fails.
bool solve_reduced(const SparseQp& qp, const std::vector<Bound>& active, Vector& x,
                   Vector& y) {
  const Index n = qp.P.cols();
  const Index m = qp.A.rows();
  std::vector<Index> rows;
  for (Index i = 0; i < m; ++i) {
    if (active[i] != Bound::kInactive) rows.push_back(i);
  }
  const Index r = static_cast<Index>(rows.size());
  std::vector<Index> slot(m, -1);
  for (Index k = 0; k < r; ++k) slot[rows[k]] = k;

  std::vector<Triplet> trips;
  append_block(trips, qp.P, 0, 0, false);
  Vector rhs(n + r);
  rhs.head(n) = -qp.q;
  for (Index j = 0; j < qp.A.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(qp.A, j); it; ++it) {
      const Index k = slot[it.row()];
      if (k < 0) continue;
      trips.emplace_back(n + k, j, it.value());
      trips.emplace_back(j, n + k, it.value());
    }
  }
  for (Index k = 0; k < r; ++k) {
    const Index i = rows[k];
    rhs(n + k) = active[i] == Bound::kUpper ? qp.u(i) : qp.l(i);
  }
  SparseMatrix K0(n + r, n + r);
  K0.setFromTriplets(trips.begin(), trips.end());

  constexpr double kDelta = 1e-8;
  SparseMatrix K = K0;
  {
    std::vector<Triplet> reg;
    for (Index i = 0; i < n; ++i) reg.emplace_back(i, i, kDelta);
    for (Index k = 0; k < r; ++k) reg.emplace_back(n + k, n + k, -kDelta);
    SparseMatrix R(n + r, n + r);
    R.setFromTriplets(reg.begin(), reg.end());
    K += R;
  }
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(K);
  if (ldlt.info() != Eigen::Success) return false;
  Vector sol = ldlt.solve(rhs);
  for (int refine = 0; refine < 25; ++refine) {
    const Vector res = rhs - K0 * sol;
    if (inf_norm(res) < 1e-13 * std::max(1.0, inf_norm(rhs))) break;
    sol += ldlt.solve(res);
  }
  if (!sol.allFinite()) return false;
  x = sol.head(n);
  y = Vector::Zero(m);
  for (Index k = 0; k < r; ++k) y(rows[k]) = sol(n + k);
  return true;
}

struct PolishOutcome {
  bool ok = false;
  int rounds = 0;
  Vector x;
  Vector y;
};

// Primal-dual active-set refinement started from the ADMM guess.
PolishOutcome polish(const SparseQp& scaled, const Vector& z, const Vector& y_admm,
                     int max_rounds) {
  const Index m = scaled.A.rows();
  std::vector<Bound> active(m, Bound::kInactive);
  for (Index i = 0; i < m; ++i) {
    if (scaled.l(i) == scaled.u(i)) {
      active[i] = Bound::kEquality;
    } else if (z(i) - scaled.l(i) < -y_admm(i)) {
      active[i] = Bound::kLower;
    } else if (scaled.u(i) - z(i) < y_admm(i)) {
      active[i] = Bound::kUpper;
    }
  }
  PolishOutcome out;
  for (int round = 0; round < max_rounds; ++round) {
    out.rounds = round + 1;
    if (!solve_reduced(scaled, active, out.x, out.y)) return out;
    const Vector ax = scaled.A * out.x;
    const double feas = 1e-10 * std::max(1.0, inf_norm(ax));
    bool changed = false;
    for (Index i = 0; i < m; ++i) {
      switch (active[i]) {
        case Bound::kEquality:
          break;
        case Bound::kLower:
          if (out.y(i) > 0.0) active[i] = Bound::kInactive, changed = true;
          break;
        case Bound::kUpper:
          if (out.y(i) < 0.0) active[i] = Bound::kInactive, changed = true;
          break;
        case Bound::kInactive:
          if (ax(i) < scaled.l(i) - feas) {
            active[i] = Bound::kLower, changed = true;
          } else if (ax(i) > scaled.u(i) + feas) {
            active[i] = Bound::kUpper, changed = true;
          }
          break;
      }
    }
    if (!changed) {
      out.ok = true;
      return out;
    }
  }
  return out;
}

}  // namespace

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::kOptimal:
      return "optimal";
    case QpStatus::kMaxIter:
      return "max_iter";
    case QpStatus::kInfeasible:
      return "infeasible";
  }
  return "unknown";
}

double QpResiduals::kkt() const { return std::max({primal, dual, complementarity}); }

double qp_objective(const SparseQp& qp, const Vector& x) {
  return 0.5 * x.dot(qp.P * x) + qp.q.dot(x);
}

QpResiduals qp_residuals(const SparseQp& qp, const Vector& x, const Vector& y) {
  QpResiduals res;
  const Vector ax = qp.A * x;
  res.primal = inf_norm(ax - clamp(ax, qp.l, qp.u));
  res.dual = inf_norm(qp.P * x + qp.q + qp.A.transpose() * y);
  for (Index i = 0; i < y.size(); ++i) {
    double slack;
    if (y(i) > 0.0) {
      slack = std::isfinite(qp.u(i)) ? std::abs(qp.u(i) - ax(i)) : kInf;
    } else if (y(i) < 0.0) {
      slack = std::isfinite(qp.l(i)) ? std::abs(ax(i) - qp.l(i)) : kInf;
    } else {
      continue;
    }
    res.complementarity = std::max(res.complementarity, std::abs(y(i)) * slack);
  }
  return res;
}

namespace {

QpResult solve_admm(const SparseQp& qp, const QpSettings& settings) {
  const Index n = qp.P.cols();
  const Index m = qp.A.rows();
  QpResult result;
  SparseQp scaled = qp;
  const Scaling sc = equilibrate(scaled, settings.scaling_passes);

  double rho = settings.rho;
  Vector rho_vec = constraint_rho(scaled, rho);
  SparseMatrix K = admm_kkt(scaled, settings.sigma, rho_vec);
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  ldlt.analyzePattern(K);
  ldlt.factorize(K);
  if (ldlt.info() != Eigen::Success) throw SolverError("KKT factorization failed");

  Vector x = Vector::Zero(n);
  Vector z = Vector::Zero(m);
  Vector y = Vector::Zero(m);
  Vector rhs(n + m);

  QpResult best;
  double best_kkt = kInf;
  auto consider = [&](const Vector& xs, const Vector& ys, int iterations, bool polished,
                      int rounds) {
    const Unscaled u = unscale(sc, xs, ys);
    const QpResiduals res = qp_residuals(qp, u.x, u.y);
    if (res.kkt() < best_kkt) {
      best_kkt = res.kkt();
      best.x = u.x;
      best.y = u.y;
      best.residuals = res;
      best.polished = polished;
      best.polish_rounds = rounds;
    }
    best.iterations = iterations;
    return res.kkt() <= settings.tol;
  };
  auto try_polish = [&](int iterations) {
    if (!settings.polish) return false;
    const PolishOutcome p = polish(scaled, z, y, settings.max_polish_rounds);
    if (!p.ok) return false;
    return consider(p.x, p.y, iterations, true, p.rounds);
  };

  const double polish_gate = std::max(1e3 * settings.tol, 1e-4);
  int last_polish = -1;
  int iter = 0;
  for (; iter < settings.max_iter; ++iter) {
    rhs.head(n) = settings.sigma * x - scaled.q;
    rhs.tail(m) = z - y.cwiseQuotient(rho_vec);
    const Vector sol = ldlt.solve(rhs);
    const Vector x_tilde = sol.head(n);
    const Vector z_tilde = z + (sol.tail(m) - y).cwiseQuotient(rho_vec);
    const Vector x_next = settings.alpha * x_tilde + (1.0 - settings.alpha) * x;
    const Vector z_relaxed = settings.alpha * z_tilde + (1.0 - settings.alpha) * z;
    const Vector z_next = clamp(z_relaxed + y.cwiseQuotient(rho_vec), scaled.l, scaled.u);
    y += rho_vec.cwiseProduct(z_relaxed - z_next);
    x = x_next;
    z = z_next;

    if ((iter + 1) % settings.check_every != 0) continue;
    const Unscaled u = unscale(sc, x, y);
    const Vector ax = qp.A * u.x;
    const Vector px = qp.P * u.x;
    const Vector aty = qp.A.transpose() * u.y;
    const Vector z_unscaled = z.cwiseQuotient(sc.E);
    const double prim = inf_norm(ax - z_unscaled);
    const double dual = inf_norm(px + qp.q + aty);
    if (consider(x, y, iter + 1, false, 0)) {
      result = best;
      result.status = QpStatus::kOptimal;
      return result;
    }
    if (prim <= polish_gate && dual <= polish_gate && iter - last_polish >= 100) {
      last_polish = iter;
      if (try_polish(iter + 1)) {
        result = best;
        result.status = QpStatus::kOptimal;
        return result;
      }
    }
    // Rebalance rho between primal and dual progress, measured on the scaled problem.
    const Vector sax = scaled.A * x;
    const Vector spx = scaled.P * x;
    const Vector saty = scaled.A.transpose() * y;
    const double prim_rel = inf_norm(sax - z) / std::max({inf_norm(sax), inf_norm(z), 1e-30});
    const double dual_rel = inf_norm(spx + scaled.q + saty) /
                            std::max({inf_norm(spx), inf_norm(saty), inf_norm(scaled.q), 1e-30});
    const double rho_new =
        std::clamp(rho * std::sqrt(prim_rel / std::max(dual_rel, 1e-30)), kRhoMin, kRhoMax);
    if (rho_new > 5.0 * rho || rho_new < 0.2 * rho) {
      rho = rho_new;
      rho_vec = constraint_rho(scaled, rho);
      K = admm_kkt(scaled, settings.sigma, rho_vec);
      ldlt.factorize(K);
      if (ldlt.info() != Eigen::Success) throw SolverError("KKT factorization failed");
    }
  }
  const bool ok = consider(x, y, iter, false, 0) || try_polish(iter);
  result = best;
  result.iterations = iter;
  result.status = ok ? QpStatus::kOptimal : QpStatus::kMaxIter;
  return result;
}


// Mehrotra predictor-corrector on the scaled problem. Equality rows stay in
// the KKT system; each finite inequality bound gets a slack t and multiplier z.
QpResult solve_interior_point(const SparseQp& qp, const QpSettings& settings) {
  const Index n = qp.P.cols();
  const Index m = qp.A.rows();
  SparseQp scaled = qp;
  const Scaling sc = equilibrate(scaled, settings.scaling_passes);

  std::vector<Index> eq_rows;
  std::vector<Index> in_rows;
  for (Index i = 0; i < m; ++i) {
    if (scaled.l(i) == scaled.u(i)) {
      eq_rows.push_back(i);
    } else if (std::isfinite(scaled.l(i)) || std::isfinite(scaled.u(i))) {
      in_rows.push_back(i);
    }
  }
  const Index me = static_cast<Index>(eq_rows.size());
  const Index mi = static_cast<Index>(in_rows.size());
  auto select_rows = [&](const std::vector<Index>& rows) {
    std::vector<Index> slot(m, -1);
    for (std::size_t k = 0; k < rows.size(); ++k) slot[rows[k]] = static_cast<Index>(k);
    std::vector<Triplet> trips;
    for (Index j = 0; j < scaled.A.outerSize(); ++j) {
      for (SparseMatrix::InnerIterator it(scaled.A, j); it; ++it) {
        if (slot[it.row()] >= 0) trips.emplace_back(slot[it.row()], j, it.value());
      }
    }
    SparseMatrix out(static_cast<Index>(rows.size()), n);
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
  };
  const SparseMatrix Ae = select_rows(eq_rows);
  const SparseMatrix Ai = select_rows(in_rows);
  const SparseMatrix AiT = Ai.transpose();
  Vector b(me);
  for (Index k = 0; k < me; ++k) b(k) = scaled.l(eq_rows[k]);
  Vector lo(mi);
  Vector hi(mi);
  Vector has_lo = Vector::Zero(mi);
  Vector has_hi = Vector::Zero(mi);
  for (Index k = 0; k < mi; ++k) {
    lo(k) = scaled.l(in_rows[k]);
    hi(k) = scaled.u(in_rows[k]);
    if (std::isfinite(lo(k))) has_lo(k) = 1.0; else lo(k) = 0.0;
    if (std::isfinite(hi(k))) has_hi(k) = 1.0; else hi(k) = 0.0;
  }
  const double bounds = has_lo.sum() + has_hi.sum();

  Vector x = Vector::Zero(n);
  Vector y = Vector::Zero(me);
  Vector ax = Ai * x;
  Vector tl = (ax - lo).cwiseMax(1.0).cwiseProduct(has_lo);
  Vector tu = (hi - ax).cwiseMax(1.0).cwiseProduct(has_hi);
  Vector zl = has_lo;
  Vector zu = has_hi;
  // Absent bounds carry t = 1, z = 0 so the diagonal algebra stays finite.
  tl += Vector::Ones(mi) - has_lo;
  tu += Vector::Ones(mi) - has_hi;

  auto regularization = [&](double level) {
    std::vector<Triplet> trips;
    for (Index i = 0; i < n; ++i) trips.emplace_back(i, i, level);
    for (Index i = 0; i < me; ++i) trips.emplace_back(n + i, n + i, -level);
    SparseMatrix reg(n + me, n + me);
    reg.setFromTriplets(trips.begin(), trips.end());
    return reg;
  };
  auto assemble = [&](const Vector& d) {
    std::vector<Triplet> trips;
    trips.reserve(scaled.P.nonZeros() + 2 * Ae.nonZeros() + n);
    append_block(trips, scaled.P, 0, 0, false);
    append_block(trips, Ae, n, 0, false);
    append_block(trips, Ae, 0, n, true);
    const SparseMatrix barrier = AiT * d.asDiagonal() * Ai;
    append_block(trips, barrier, 0, 0, false);
    SparseMatrix K(n + me, n + me);
    K.setFromTriplets(trips.begin(), trips.end());
    return K;
  };

  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  bool analyzed = false;
  QpResult best;
  double best_kkt = kInf;
  int iter = 0;
  for (; iter < settings.max_iter; ++iter) {
    ax = Ai * x;
    const Vector zi = zu - zl;
    const Vector rd = scaled.P * x + scaled.q + Ae.transpose() * y + AiT * zi;
    const Vector re = Ae * x - b;
    const Vector rl = (ax - tl - lo).cwiseProduct(has_lo);
    const Vector ru = (ax + tu - hi).cwiseProduct(has_hi);
    const double mu =
        bounds > 0 ? (tl.cwiseProduct(zl).sum() + tu.cwiseProduct(zu).sum()) / bounds : 0.0;

    Vector y_full = Vector::Zero(m);
    for (Index k = 0; k < me; ++k) y_full(eq_rows[k]) = y(k);
    for (Index k = 0; k < mi; ++k) y_full(in_rows[k]) = zi(k);
    const Unscaled u = unscale(sc, x, y_full);
    const QpResiduals res = qp_residuals(qp, u.x, u.y);
    if (res.kkt() < best_kkt) {
      best_kkt = res.kkt();
      best.x = u.x;
      best.y = u.y;
      best.residuals = res;
    }
    if (res.kkt() <= settings.tol && mu <= settings.tol) break;
    if (!std::isfinite(mu)) break;

    const Vector dl = zl.cwiseQuotient(tl).cwiseProduct(has_lo);
    const Vector du = zu.cwiseQuotient(tu).cwiseProduct(has_hi);
    const SparseMatrix K0 = assemble(dl + du);
    // The LDL' runs without pivoting. Once the barrier terms spread over many
    // decades a light regularization gives steps that refinement cannot
    // repair, so the level is raised until the refined solve is accurate.
    double level = 0.0;
    auto factor = [&](double next) {
      const SparseMatrix K = K0 + regularization(next);
      if (!analyzed) {
        ldlt.analyzePattern(K);
        analyzed = true;
      }
      ldlt.factorize(K);
      level = next;
      return ldlt.info() == Eigen::Success;
    };
    // Products with K0 cannot be resolved below round-off of its largest
    // entry. The ridge is all that pins some directions, so the system can be
    // too ill-conditioned for the tight target; the most accurate attempt is
    // then used if it is still a usable Newton step.
    const double k_max = K0.coeffs().cwiseAbs().maxCoeff();
    auto solve_kkt = [&](const Vector& rhs, Vector& sol) {
      const double floor = 1e-13 * k_max;
      const double scale = std::max(1.0, rhs.norm());
      Vector best_sol;
      double best_res = kInf;
      double best_level = level;
      auto attempt = [&] {
        Vector trial = ldlt.solve(rhs);
        double res = (rhs - K0 * trial).norm();
        for (int refine = 0; refine < 10 && res > 1e-10 * scale + floor * trial.norm(); ++refine) {
          trial += ldlt.solve(rhs - K0 * trial);
          res = (rhs - K0 * trial).norm();
        }
        if (res < best_res) {
          best_res = res;
          best_sol = trial;
          best_level = level;
        }
        return res <= 1e-10 * scale + floor * trial.norm();
      };
      if (level > 0.0 && attempt()) {
        sol = best_sol;
        return true;
      }
      for (double next = level > 0.0 ? level * 100.0 : 1e-8; next <= 1e-2; next *= 100.0) {
        if (!factor(next)) continue;
        if (attempt()) break;
      }
      // Later solves in this iteration reuse the best factorization.
      if (best_level != level) factor(best_level);
      sol = best_sol;
      return best_res <= 1e-6 * scale;
    };

    struct Step {
      Vector dx, dy, dtl, dtu, dzl, dzu;
      bool ok = false;
    };
    auto solve_step = [&](const Vector& cl, const Vector& cu) {
      Vector rhs(n + me);
      rhs.head(n) = -rd + AiT * (cl.cwiseQuotient(tl) - dl.cwiseProduct(rl)) -
                    AiT * (cu.cwiseQuotient(tu) + du.cwiseProduct(ru));
      rhs.tail(me) = -re;
      Vector sol;
      Step st;
      st.ok = solve_kkt(rhs, sol);
      if (!st.ok) return st;
      st.dx = sol.head(n);
      st.dy = sol.tail(me);
      const Vector adx = Ai * st.dx;
      st.dtl = (adx + rl).cwiseProduct(has_lo);
      st.dtu = (-adx - ru).cwiseProduct(has_hi);
      st.dzl = (cl - zl.cwiseProduct(st.dtl)).cwiseQuotient(tl).cwiseProduct(has_lo);
      st.dzu = (cu - zu.cwiseProduct(st.dtu)).cwiseQuotient(tu).cwiseProduct(has_hi);
      return st;
    };
    auto max_step = [&](const Step& st) {
      double alpha = 1.0;
      auto limit = [&](const Vector& v, const Vector& dv, const Vector& mask) {
        for (Index k = 0; k < v.size(); ++k) {
          if (mask(k) > 0.0 && dv(k) < 0.0) alpha = std::min(alpha, -v(k) / dv(k));
        }
      };
      limit(tl, st.dtl, has_lo);
      limit(tu, st.dtu, has_hi);
      limit(zl, st.dzl, has_lo);
      limit(zu, st.dzu, has_hi);
      return alpha;
    };

    const Vector cl_aff = -tl.cwiseProduct(zl).cwiseProduct(has_lo);
    const Vector cu_aff = -tu.cwiseProduct(zu).cwiseProduct(has_hi);
    const Step aff = solve_step(cl_aff, cu_aff);
    if (!aff.ok) break;
    const double a_aff = max_step(aff);
    double mu_aff = 0.0;
    if (bounds > 0) {
      mu_aff = ((tl + a_aff * aff.dtl).cwiseProduct(zl + a_aff * aff.dzl).cwiseProduct(has_lo).sum() +
                (tu + a_aff * aff.dtu).cwiseProduct(zu + a_aff * aff.dzu).cwiseProduct(has_hi).sum()) /
               bounds;
    }
    const double sigma = mu > 0.0 ? std::pow(mu_aff / mu, 3) : 0.0;
    const Vector cl = (cl_aff - aff.dtl.cwiseProduct(aff.dzl) +
                       Vector::Constant(mi, sigma * mu)).cwiseProduct(has_lo);
    const Vector cu = (cu_aff - aff.dtu.cwiseProduct(aff.dzu) +
                       Vector::Constant(mi, sigma * mu)).cwiseProduct(has_hi);
    const Step st = solve_step(cl, cu);
    if (!st.ok) break;
    const double alpha = std::min(1.0, 0.99 * max_step(st));
    x += alpha * st.dx;
    y += alpha * st.dy;
    tl += alpha * st.dtl;
    tu += alpha * st.dtu;
    zl += alpha * st.dzl;
    zu += alpha * st.dzu;
  }
  best.iterations = iter;
  best.status = best_kkt <= settings.tol ? QpStatus::kOptimal : QpStatus::kMaxIter;
  return best;
}

}  // namespace

QpResult solve_sparse_qp(const SparseQp& qp, const QpSettings& settings) {
  const auto start = std::chrono::steady_clock::now();
  const Index n = qp.P.cols();
  const Index m = qp.A.rows();
  if (qp.P.rows() != n || qp.q.size() != n || qp.A.cols() != n || qp.l.size() != m ||
      qp.u.size() != m) {
    throw InputError("QP dimensions are inconsistent");
  }
  QpResult result;
  if ((qp.l.array() > qp.u.array()).any()) {
    result.status = QpStatus::kInfeasible;
    result.x = Vector::Zero(n);
    result.y = Vector::Zero(m);
  } else if (settings.method == QpMethod::kAdmm) {
    result = solve_admm(qp, settings);
  } else {
    result = solve_interior_point(qp, settings);
  }
  result.objective = qp_objective(qp, result.x);
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace racing
