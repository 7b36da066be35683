#include "hb/sip.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "hb/geometry.hpp"
#include "hb/linprog.hpp"
#include "hb/rng.hpp"

namespace hb {
namespace {

constexpr double kResidualTol = 1e-8;  // certificate acceptance
constexpr double kSlaterMargin = 1e-9;

double safe_binom(int m, int k) {
  if (k < 0 || k > m) return 0.0;
  double v = 1.0;
  for (int i = 0; i < k; ++i) v *= static_cast<double>(m - i) / (i + 1);
  return v;
}

// Ascending k-combinations of {0..m-1}; returns false when exhausted.
bool next_combination(std::vector<int>& idx, int m) {
  const int k = static_cast<int>(idx.size());
  for (int i = k - 1; i >= 0; --i) {
    if (idx[i] < m - (k - i)) {
      ++idx[i];
      for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

double objective_value(const SIProgram& P, const Vec& x) {
  return eval(*P.objective_f, x) + P.c.dot(x);
}

// ----- cone membership -------------------------------------------------------
//
// Feasibility of  c + u + sum_t gamma_t w_t = 0  with u drawn from
// conv(gens) + cone(rays) and gamma >= 0, decided by phase 1 on
//   [gens | rays | w] z = -c,  1'lambda = 1,  z >= 0.
// A basic solution has at most n+1 positive entries, at least one of them a
// hull weight, so the multiplier support is Caratheodory-reduced to <= n.
std::optional<KKTCertificate> cone_membership(
    const FinGenConvexSet& df, const std::vector<std::pair<int, Vec>>& cone,
    const Vec& c) {
  if (df.is_empty || df.generators.empty()) return std::nullopt;
  const int n = static_cast<int>(c.size());
  const int ng = static_cast<int>(df.generators.size());
  const int nr = static_cast<int>(df.rays.size());
  const int nc = static_cast<int>(cone.size());

  Mat A = Mat::Zero(n + 1, ng + nr + nc);
  double scale = c.norm();
  for (int j = 0; j < ng; ++j) {
    A.block(0, j, n, 1) = df.generators[j];
    A(n, j) = 1.0;
    scale = std::max(scale, df.generators[j].norm());
  }
  for (int k = 0; k < nr; ++k) {
    A.block(0, ng + k, n, 1) = df.rays[k];
    scale = std::max(scale, df.rays[k].norm());
  }
  for (int t = 0; t < nc; ++t) {
    A.block(0, ng + nr + t, n, 1) = cone[t].second;
    scale = std::max(scale, cone[t].second.norm());
  }
  Vec rhs(n + 1);
  rhs.head(n) = -c;
  rhs(n) = 1.0;

  const double tol = 1e-10 * (1.0 + scale);
  Vec z;
  if (!linear_feasible(A, rhs, tol, &z)) return std::nullopt;

  // Count the multiplier support; a non-basic tie could exceed n, in which
  // case re-solving with a multiplier-mass objective restores a basic point.
  auto gamma_count = [&](const Vec& w) {
    int cnt = 0;
    for (int t = 0; t < nc; ++t)
      if (w(ng + nr + t) > 1e-12) ++cnt;
    return cnt;
  };
  if (gamma_count(z) > n) {
    Vec cost = Vec::Zero(ng + nr + nc);
    cost.tail(nc).setOnes();
    LpResult lp = lp_solve_eq(A, rhs, cost);
    if (lp.status == LpStatus::Optimal) z = lp.z;
  }

  // Renormalize the hull weights (phase 1 matches 1'lambda = 1 within tol).
  double lam_sum = z.head(ng).sum();
  if (lam_sum <= 0.0) return std::nullopt;
  KKTCertificate cert;
  cert.u = Vec::Zero(n);
  for (int j = 0; j < ng; ++j) cert.u += (z(j) / lam_sum) * df.generators[j];
  for (int k = 0; k < nr; ++k) cert.u += z(ng + k) * df.rays[k];
  Vec resid = c + cert.u;
  for (int t = 0; t < nc; ++t) {
    const double g = z(ng + nr + t);
    if (g > 1e-12) {
      cert.support.push_back({cone[t].first, g, cone[t].second});
      resid += g * cone[t].second;
    }
  }
  cert.residual = resid.norm();
  if (!(cert.residual <= kResidualTol)) return std::nullopt;
  if (static_cast<int>(cert.support.size()) > n) return std::nullopt;
  return cert;
}

std::optional<KKTCertificate> membership_at(const SIProgram& P, const Vec& x,
                                            double eps_act,
                                            const std::vector<int>* restrict_D) {
  const FinGenConvexSet df = subdifferential(*P.objective_f, x);
  std::vector<std::pair<int, Vec>> cone;
  if (restrict_D != nullptr) {
    for (int t : *restrict_D) cone.push_back({t, P.constraints[t].gradient(x)});
  } else {
    for (int t : active_indices(P, x, eps_act))
      cone.push_back({t, P.constraints[t].gradient(x)});
  }
  return cone_membership(df, cone, P.c);
}

// ----- subgradient machinery --------------------------------------------------

Vec one_subgradient(const FunctionHandle& f, const Vec& x) {
  if (const auto* sm = std::get_if<SmoothForm>(&f.form))
    return sm->piece.gradient(x);
  if (const auto* mf = std::get_if<MaxForm>(&f.form)) {
    int best = 0;
    double bv = -kInf;
    for (int i = 0; i < static_cast<int>(mf->pieces.size()); ++i) {
      const double v = mf->pieces[i].eval(x);
      if (v > bv) {
        bv = v;
        best = i;
      }
    }
    return mf->pieces[best].gradient(x);
  }
  const FinGenConvexSet s = subdifferential(f, x);
  if (!s.is_empty && !s.generators.empty()) return s.generators[0];
  return Vec::Zero(f.dim);
}

// max_t (g_t(x) - b_t) and the gradient of an attaining piece.
std::pair<double, Vec> margin_and_grad(const SIProgram& P, const Vec& x) {
  double best = -kInf;
  int arg = 0;
  for (int t = 0; t < P.grid.size(); ++t) {
    const double v = P.constraints[t].eval(x) - P.b(t);
    if (v > best) {
      best = v;
      arg = t;
    }
  }
  return {best, P.constraints[arg].gradient(x)};
}

// Plain normalized-step subgradient descent on phi, tracking the best point.
template <typename ValueGrad>
std::pair<Vec, double> subgradient_descent(const Vec& x0, int iters,
                                           double radius, ValueGrad&& phi) {
  Vec x = x0, best_x = x0;
  double best_v = phi(x0).first;
  for (int k = 1; k <= iters; ++k) {
    auto [v, g] = phi(x);
    if (v < best_v) {
      best_v = v;
      best_x = x;
    }
    const double gn = g.norm();
    if (gn < 1e-15) break;
    x -= (radius / std::sqrt(static_cast<double>(k))) * (g / gn);
  }
  const double v_final = phi(x).first;
  if (v_final < best_v) {
    best_v = v_final;
    best_x = x;
  }
  return {best_x, best_v};
}

// ----- Newton polish on the active set ---------------------------------------

Mat piece_hessian(const SmoothPiece& p, const Vec& x) {
  const int n = static_cast<int>(x.size());
  Mat H = Mat::Zero(n, n);
  for (const Term& term : p.terms) {
    for (int i = 0; i < n; ++i) {
      const double ei = term.exponents(i);
      if (ei == 0.0) continue;
      for (int j = i; j < n; ++j) {
        const double ej = term.exponents(j);
        double d2;
        if (i == j) {
          if (ei == 1.0) continue;
          d2 = term.coeff * ei * (ei - 1.0) * std::pow(x(i), ei - 2.0);
        } else {
          if (ej == 0.0) continue;
          d2 = term.coeff * ei * ej * std::pow(x(i), ei - 1.0) *
               std::pow(x(j), ej - 1.0);
        }
        for (int k = 0; k < n; ++k) {
          if (k == i || k == j) continue;
          d2 *= std::pow(x(k), term.exponents(k));
        }
        H(i, j) += d2;
        if (i != j) H(j, i) += d2;
      }
    }
  }
  return H;
}

// Solves  grad f(x) + c + sum_{t in A} gamma_t grad g_t(x) = 0,
//         g_t(x) = b_t (t in A)
// by damped Newton; returns false on breakdown (the caller keeps its point).
bool newton_kkt(const SIProgram& P, const SmoothPiece& obj,
                std::vector<int>& A, Vec& x) {
  const int n = P.n;
  for (int round = 0; round < 2 * (P.grid.size() + 1); ++round) {
    if (static_cast<int>(A.size()) > n) A.resize(n);
    const int m = static_cast<int>(A.size());
    Vec y(n + m);  // (x, gamma)
    y.head(n) = x;
    y.tail(m).setZero();

    auto residual = [&](const Vec& w) {
      Vec r(n + m);
      Vec grad = obj.gradient(w.head(n)) + P.c;
      for (int i = 0; i < m; ++i)
        grad += w(n + i) * P.constraints[A[i]].gradient(w.head(n));
      r.head(n) = grad;
      for (int i = 0; i < m; ++i)
        r(n + i) = P.constraints[A[i]].eval(w.head(n)) - P.b(A[i]);
      return r;
    };

    bool ok = false;
    Vec r = residual(y);
    for (int it = 0; it < 60; ++it) {
      const double rn = r.norm();
      if (!std::isfinite(rn)) return false;
      if (rn <= 1e-13 * (1.0 + y.norm())) {
        ok = true;
        break;
      }
      Mat J = Mat::Zero(n + m, n + m);
      Mat H = piece_hessian(obj, y.head(n));
      for (int i = 0; i < m; ++i)
        H += y(n + i) * piece_hessian(P.constraints[A[i]], y.head(n));
      J.topLeftCorner(n, n) = H;
      for (int i = 0; i < m; ++i) {
        const Vec gi = P.constraints[A[i]].gradient(y.head(n));
        J.block(0, n + i, n, 1) = gi;
        J.block(n + i, 0, 1, n) = gi.transpose();
      }
      if (!J.allFinite()) return false;
      const Vec step = Eigen::FullPivLU<Mat>(J).solve(-r);
      if (!step.allFinite()) return false;
      double damp = 1.0;
      Vec y_next;
      Vec r_next;
      bool improved = false;
      for (int h = 0; h < 30; ++h) {
        y_next = y + damp * step;
        r_next = residual(y_next);
        if (r_next.norm() < r.norm()) {
          improved = true;
          break;
        }
        damp *= 0.5;
      }
      if (!improved) break;
      y = y_next;
      r = r_next;
    }
    if (!ok) return false;

    // Active-set adjustment: drop negative multipliers, add violated rows.
    int drop = -1;
    double most_neg = -1e-10;
    for (int i = 0; i < m; ++i)
      if (y(n + i) < most_neg) {
        most_neg = y(n + i);
        drop = i;
      }
    if (drop >= 0) {
      A.erase(A.begin() + drop);
      x = y.head(n);
      continue;
    }
    int add = -1;
    double worst = 1e-10;
    for (int t = 0; t < P.grid.size(); ++t) {
      if (std::find(A.begin(), A.end(), t) != A.end()) continue;
      const double v = P.constraints[t].eval(y.head(n)) - P.b(t);
      if (v > worst * (1.0 + std::abs(P.b(t)))) {
        worst = v;
        add = t;
      }
    }
    if (add >= 0 && static_cast<int>(A.size()) < n) {
      A.push_back(add);
      std::sort(A.begin(), A.end());
      x = y.head(n);
      continue;
    }
    x = y.head(n);
    return true;
  }
  return false;
}

// ----- affine solver path -----------------------------------------------------

SolutionSet solve_affine(const SIProgram& P, bool enumerate_vertices,
                         int basis_budget) {
  const auto* sm = std::get_if<SmoothForm>(&P.objective_f->form);
  auto [a0, beta0] = sm->piece.affine_parts(P.n);

  IneqLp lp;
  lp.G = Mat(P.grid.size(), P.n);
  lp.h = Vec(P.grid.size());
  for (int t = 0; t < P.grid.size(); ++t) {
    auto [at, bt] = P.constraints[t].affine_parts(P.n);
    lp.G.row(t) = at.transpose();
    lp.h(t) = P.b(t) - bt;
  }
  lp.c = a0 + P.c;

  IneqLpResult res = lp_solve_ineq(lp, enumerate_vertices, basis_budget);
  SolutionSet out;
  if (res.status == LpStatus::Infeasible) {
    out.feasible = false;
    // Least-violation witness from the uniform-margin LP.
    IneqLp margin;
    margin.G = Mat(P.grid.size(), P.n + 1);
    margin.G.leftCols(P.n) = lp.G;
    margin.G.rightCols(1).setOnes();
    margin.h = lp.h;
    margin.c = Vec::Zero(P.n + 1);
    margin.c(P.n) = -1.0;
    IneqLpResult mres = lp_solve_ineq(margin);
    if (mres.status == LpStatus::Optimal) {
      InfeasibilityWitness w;
      w.x = mres.x.head(P.n);
      w.violation = -mres.x(P.n);
      out.infeasibility = w;
    }
    return out;
  }
  if (res.status == LpStatus::Unbounded)
    throw Error(ErrorCode::SolverFailure,
                "objective unbounded below over the feasible set");
  if (res.status != LpStatus::Optimal)
    throw Error(ErrorCode::SolverFailure, "simplex iteration limit reached");

  out.points = enumerate_vertices && !res.optimal_vertices.empty()
                   ? res.optimal_vertices
                   : std::vector<Vec>{res.x};
  out.rays = res.optimal_rays;
  out.objective = res.objective + beta0;
  return out;
}

// ----- convex solver path -----------------------------------------------------

SolutionSet solve_convex(const SIProgram& P) {
  SolutionSet out;
  const Vec x0 = Vec::Zero(P.n);

  // Feasibility presolve: drive the uniform margin down.
  auto margin_fn = [&](const Vec& x) { return margin_and_grad(P, x); };
  auto [x_feas, phi_feas] = subgradient_descent(x0, 6000, 1.0, margin_fn);
  if (phi_feas > 1e-7) {
    out.feasible = false;
    out.infeasibility = InfeasibilityWitness{x_feas, phi_feas};
    return out;
  }

  // Exact-penalty subgradient descent, penalty grown until feasible.
  Vec x_best = x_feas;
  for (double rho : {10.0, 100.0, 1e4, 1e6}) {
    auto penalty_fn = [&](const Vec& x) -> std::pair<double, Vec> {
      auto [phi, gphi] = margin_and_grad(P, x);
      double v = objective_value(P, x);
      Vec g = one_subgradient(*P.objective_f, x) + P.c;
      if (phi > 0.0) {
        v += rho * phi;
        g += rho * gphi;
      }
      return {v, g};
    };
    auto [x_pen, v_pen] = subgradient_descent(x_best, 4000, 1.0, penalty_fn);
    (void)v_pen;
    x_best = x_pen;
    if (margin_and_grad(P, x_best).first <= 1e-9) break;
  }

  // Newton polish on candidate active sets (smooth objectives).  The
  // subgradient point is only ~1e-2 accurate, so candidate sets are detected
  // over a tolerance ladder; newton_kkt's own adjustment loop prunes wrong
  // guesses.  A feasible polished point beats an infeasible penalty point
  // outright (the penalty solution can sit on the low-objective infeasible
  // side of the boundary).
  if (const auto* sm = std::get_if<SmoothForm>(&P.objective_f->form)) {
    for (double level : {1e-5, 1e-3, 3e-2, 3e-1}) {
      std::vector<std::pair<double, int>> order;
      for (int t = 0; t < P.grid.size(); ++t) {
        const double gap = std::abs(P.constraints[t].eval(x_best) - P.b(t));
        if (gap <= level * (1.0 + std::abs(P.b(t)))) order.push_back({gap, t});
      }
      std::sort(order.begin(), order.end());
      std::vector<int> A;
      for (const auto& [gap, t] : order)
        if (static_cast<int>(A.size()) < P.n) A.push_back(t);
      std::sort(A.begin(), A.end());
      Vec x_polish = x_best;
      if (!newton_kkt(P, sm->piece, A, x_polish)) continue;
      if (!feasible(P, x_polish, 1e-9)) continue;
      const bool best_feasible = feasible(P, x_best, 1e-9);
      if (!best_feasible || objective_value(P, x_polish) <=
                                objective_value(P, x_best) + 1e-9) {
        x_best = x_polish;
        break;
      }
    }
  }

  // Certification carries the claim; an uncertified convex solve is an error.
  std::optional<KKTCertificate> cert;
  try {
    cert = kkt_check(P, x_best, 1e-6);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoSlater) throw;
    cert = std::nullopt;  // no Slater point: the KKT test is not decisive
  }
  if (slater_point(P).has_value() && !cert.has_value())
    throw Error(ErrorCode::NoCertificate,
                "convex solve converged but failed KKT certification");

  out.points = {x_best};
  out.objective = objective_value(P, x_best);
  out.certificate = std::move(cert);
  return out;
}

}  // namespace

// ===== problem data ==========================================================

double IndexGrid::distance(int i, int j) const {
  return (points[i] - points[j]).norm();
}

void SIProgram::validate() const {
  if (!objective_f)
    throw Error(ErrorCode::Precondition, "program has no objective");
  if (objective_f->dim != n || c.size() != n)
    throw Error(ErrorCode::Precondition, "objective/c dimension mismatch");
  if (grid.size() == 0)
    throw Error(ErrorCode::Precondition, "empty index grid");
  if (static_cast<int>(constraints.size()) != grid.size() ||
      b.size() != grid.size())
    throw Error(ErrorCode::Precondition,
                "constraint/level count must match the index grid");
  if (!objective_f->all_pieces_convex())
    throw Error(ErrorCode::Precondition, "objective must be convex");
  for (const SmoothPiece& g : constraints)
    if (!g.convex)
      throw Error(ErrorCode::Precondition, "every constraint must be convex");
  for (size_t i = 0; i < grid.points.size(); ++i)
    for (size_t j = i + 1; j < grid.points.size(); ++j)
      if ((grid.points[i] - grid.points[j]).norm() == 0.0)
        throw Error(ErrorCode::Precondition, "grid points must be distinct");
}

bool SIProgram::is_affine() const {
  const auto* sm = std::get_if<SmoothForm>(&objective_f->form);
  if (sm == nullptr || !sm->piece.is_affine()) return false;
  for (const SmoothPiece& g : constraints)
    if (!g.is_affine()) return false;
  return true;
}

double param_norm(const Vec& dc, const Vec& db) {
  const double cn = dc.size() > 0 ? dc.norm() : 0.0;
  const double bn = db.size() > 0 ? db.lpNorm<Eigen::Infinity>() : 0.0;
  return std::max(cn, bn);
}

double KKTCertificate::gamma_sum() const {
  double s = 0.0;
  for (const KKTSupport& e : support) s += e.gamma;
  return s;
}

bool KKTSubsetFamily::contains(const std::vector<int>& D) const {
  std::vector<int> key = D;
  std::sort(key.begin(), key.end());
  for (const KKTSubsetEntry& e : subsets)
    if (e.indices == key) return true;
  return false;
}

const Vec& SolutionSet::point() const {
  if (!feasible || points.empty())
    throw Error(ErrorCode::EmptySet, "solution set is empty");
  return points.front();
}

// ===== basic predicates ======================================================

bool feasible(const SIProgram& P, const Vec& x, double tol) {
  for (int t = 0; t < P.grid.size(); ++t)
    if (P.constraints[t].eval(x) > P.b(t) + tol) return false;
  return true;
}

std::vector<int> active_indices(const SIProgram& P, const Vec& x,
                                double eps_act) {
  std::vector<int> act;
  for (int t = 0; t < P.grid.size(); ++t)
    if (P.b(t) - P.constraints[t].eval(x) <= eps_act) act.push_back(t);
  return act;
}

std::optional<Vec> slater_point(const SIProgram& P) {
  P.validate();
  bool affine = true;
  for (const SmoothPiece& g : P.constraints)
    if (!g.is_affine()) affine = false;

  if (affine) {
    // max s  s.t.  <a_t, x> + s <= b_t - beta_t,  s <= 1 (cap: any positive
    // margin suffices, and the cap keeps the LP bounded).
    const int m = P.grid.size();
    IneqLp lp;
    lp.G = Mat::Zero(m + 1, P.n + 1);
    lp.h = Vec(m + 1);
    for (int t = 0; t < m; ++t) {
      auto [at, bt] = P.constraints[t].affine_parts(P.n);
      lp.G.row(t).head(P.n) = at.transpose();
      lp.G(t, P.n) = 1.0;
      lp.h(t) = P.b(t) - bt;
    }
    lp.G(m, P.n) = 1.0;
    lp.h(m) = 1.0;
    lp.c = Vec::Zero(P.n + 1);
    lp.c(P.n) = -1.0;
    IneqLpResult res = lp_solve_ineq(lp);
    if (res.status != LpStatus::Optimal) return std::nullopt;
    if (-res.objective <= kSlaterMargin) return std::nullopt;
    return res.x.head(P.n);
  }

  auto margin_fn = [&](const Vec& x) { return margin_and_grad(P, x); };
  auto [x_best, phi_best] =
      subgradient_descent(Vec::Zero(P.n), 6000, 1.0, margin_fn);
  if (phi_best < -kSlaterMargin) return x_best;
  return std::nullopt;
}

// ===== supremum function =====================================================

HandlePtr sup_function(const SIProgram& P, const Vec& xbar) {
  P.validate();
  if (xbar.size() != P.n)
    throw Error(ErrorCode::Precondition, "center dimension mismatch");
  if (!feasible(P, xbar, 1e-8))
    throw Error(ErrorCode::CenterNotOptimal, "center is not feasible");

  // Optimality gate: KKT under Slater, objective-value agreement otherwise.
  if (slater_point(P).has_value()) {
    if (!kkt_check(P, xbar).has_value())
      throw Error(ErrorCode::CenterNotOptimal,
                  "center fails the KKT optimality test");
  } else {
    const SolutionSet s = solve(P);
    if (!s.feasible ||
        objective_value(P, xbar) > s.objective + 1e-8)
      throw Error(ErrorCode::CenterNotOptimal,
                  "center objective value is not minimal");
  }

  const double vbar = objective_value(P, xbar);
  std::vector<SmoothPiece> pieces;
  if (const auto* sm = std::get_if<SmoothForm>(&P.objective_f->form)) {
    pieces.push_back(sm->piece.plus_affine(P.c, -vbar));
  } else if (const auto* mf = std::get_if<MaxForm>(&P.objective_f->form)) {
    for (const SmoothPiece& p : mf->pieces)
      pieces.push_back(p.plus_affine(P.c, -vbar));
  } else {
    throw Error(ErrorCode::Precondition,
                "objective does not fold into max-of-smooth form");
  }
  for (int t = 0; t < P.grid.size(); ++t) {
    SmoothPiece g = P.constraints[t];
    g.constant -= P.b(t);
    pieces.push_back(std::move(g));
  }
  return std::make_shared<const FunctionHandle>(
      FunctionHandle::max_family(std::move(pieces), P.n, "sup-function"));
}

FinGenConvexSet sup_subdifferential(const SIProgram& P, const Vec& xbar,
                                    const Vec& x, double eps_act) {
  const HandlePtr fbar = sup_function(P, xbar);
  return subdifferential(*fbar, x, eps_act);
}

// ===== KKT machinery =========================================================

std::optional<KKTCertificate> kkt_check(const SIProgram& P, const Vec& x,
                                        double eps_act) {
  P.validate();
  if (!slater_point(P).has_value())
    throw Error(ErrorCode::NoSlater,
                "no strictly feasible point: the KKT test is not decisive");
  return membership_at(P, x, eps_act, nullptr);
}

EncReport enc_check(const SIProgram& P, const Vec& xbar, long long budget) {
  P.validate();
  EncReport rep;
  rep.slater = slater_point(P).has_value();
  if (!rep.slater) return rep;  // the condition includes Slater

  const std::vector<int> act = active_indices(P, xbar);
  const int m = static_cast<int>(act.size());
  if (safe_binom(m, P.n - 1) > static_cast<double>(budget))
    throw Error(ErrorCode::ActiveSetTooLarge,
                "active-set subset enumeration exceeds the budget");

  const FinGenConvexSet df = subdifferential(*P.objective_f, xbar);
  std::vector<Vec> grads(m);
  for (int i = 0; i < m; ++i)
    grads[i] = P.constraints[act[i]].gradient(xbar);

  for (int k = 0; k < P.n && k <= m; ++k) {
    std::vector<int> pick(k);
    for (int i = 0; i < k; ++i) pick[i] = i;
    bool more = true;
    while (more) {
      std::vector<std::pair<int, Vec>> cone;
      for (int i : pick) cone.push_back({act[i], grads[i]});
      ++rep.subsets_tested;
      if (cone_membership(df, cone, P.c).has_value()) {
        std::vector<int> D;
        for (int i : pick) D.push_back(act[i]);
        rep.enc_holds = false;
        rep.violating_D = D;
        return rep;
      }
      more = next_combination(pick, m);
    }
  }
  rep.enc_holds = true;
  return rep;
}

KKTSubsetFamily kkt_subsets(const SIProgram& P, const Vec& xbar,
                            long long budget) {
  P.validate();
  const std::vector<int> act = active_indices(P, xbar);
  const int m = static_cast<int>(act.size());
  if (safe_binom(m, std::min(P.n, m)) > static_cast<double>(budget))
    throw Error(ErrorCode::ActiveSetTooLarge,
                "active-set subset enumeration exceeds the budget");

  const FinGenConvexSet df = subdifferential(*P.objective_f, xbar);
  std::vector<Vec> grads(m);
  for (int i = 0; i < m; ++i)
    grads[i] = P.constraints[act[i]].gradient(xbar);

  KKTSubsetFamily fam;
  for (int k = 0; k <= std::min(P.n, m); ++k) {
    std::vector<int> pick(k);
    for (int i = 0; i < k; ++i) pick[i] = i;
    bool more = true;
    while (more) {
      std::vector<std::pair<int, Vec>> cone;
      for (int i : pick) cone.push_back({act[i], grads[i]});
      if (auto cert = cone_membership(df, cone, P.c)) {
        KKTSubsetEntry e;
        for (int i : pick) e.indices.push_back(act[i]);
        e.certificate = std::move(*cert);
        fam.subsets.push_back(std::move(e));
      }
      more = next_combination(pick, m);
    }
  }
  return fam;
}

HandlePtr f_D(const SIProgram& P, const Vec& xbar, const std::vector<int>& D) {
  P.validate();
  std::vector<int> key = D;
  std::sort(key.begin(), key.end());
  if (static_cast<int>(key.size()) > P.n)
    throw Error(ErrorCode::Precondition, "subset larger than the dimension");
  const std::vector<int> act = active_indices(P, xbar);
  for (int t : key)
    if (std::find(act.begin(), act.end(), t) == act.end())
      throw Error(ErrorCode::Precondition, "subset index not active at center");
  const FinGenConvexSet df = subdifferential(*P.objective_f, xbar);
  std::vector<std::pair<int, Vec>> cone;
  for (int t : key) cone.push_back({t, P.constraints[t].gradient(xbar)});
  if (!cone_membership(df, cone, P.c).has_value())
    throw Error(ErrorCode::Precondition,
                "subset does not absorb the objective stationarity residual");

  std::vector<SmoothPiece> pieces;
  for (int t = 0; t < P.grid.size(); ++t) {
    SmoothPiece g = P.constraints[t];
    g.constant -= P.b(t);
    pieces.push_back(std::move(g));
  }
  for (int t : key) {
    SmoothPiece g = P.constraints[t];
    g.constant -= P.b(t);
    pieces.push_back(g.negated());
  }
  return std::make_shared<const FunctionHandle>(
      FunctionHandle::max_family(std::move(pieces), P.n, "two-sided-sup"));
}

// ===== solvers ===============================================================

SolutionSet solve(const SIProgram& P, bool enumerate_vertices,
                  int basis_budget) {
  P.validate();
  if (P.is_affine()) {
    SolutionSet out = solve_affine(P, enumerate_vertices, basis_budget);
    if (out.feasible && slater_point(P).has_value())
      out.certificate = membership_at(P, out.points.front(), 1e-6, nullptr);
    return out;
  }
  return solve_convex(P);
}

MultiplierProbe multiplier_bound_probe(const SIProgram& P,
                                       const NeighborhoodSpec& spec,
                                       int sample_count, std::uint64_t seed,
                                       const ExecConfig& exec) {
  P.validate();
  if (!slater_point(P).has_value())
    throw Error(ErrorCode::NoSlater,
                "multiplier probe requires a strictly feasible point");

  std::vector<double> sums(static_cast<size_t>(sample_count),
                           std::numeric_limits<double>::quiet_NaN());
  for_each_index(sample_count, exec, [&](int i) {
    try {
      Substream rng = Substream::keyed(seed, 0, static_cast<std::uint64_t>(i));
      SIProgram Q = P;
      Vec dir(P.n);
      for (int j = 0; j < P.n; ++j) dir(j) = rng.next_gaussian();
      const double dn = dir.norm();
      if (dn > 0.0)
        Q.c += spec.radius_c *
               std::pow(rng.next_unit(), 1.0 / P.n) * (dir / dn);
      for (int t = 0; t < P.grid.size(); ++t)
        Q.b(t) += spec.radius_b * (2.0 * rng.next_unit() - 1.0);

      const SolutionSet s = solve(Q);
      if (!s.feasible) return;
      std::optional<KKTCertificate> cert = s.certificate;
      if (!cert.has_value())
        cert = membership_at(Q, s.point(), 1e-6, nullptr);
      if (cert.has_value()) sums[static_cast<size_t>(i)] = cert->gamma_sum();
    } catch (...) {
      // counted below as a solver failure
    }
  });

  MultiplierProbe probe;
  for (double s : sums) {
    if (std::isnan(s)) {
      ++probe.solver_failures;
    } else {
      ++probe.samples_used;
      probe.max_gamma_sum = std::max(probe.max_gamma_sum, s);
    }
  }
  return probe;
}

}  // namespace hb
