#include "hb/linprog.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <utility>
#include <vector>

namespace hb {
namespace {

constexpr double kPivTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr int kMaxPivots = 200000;

// Dense tableau: T is (m+1) x (n+1); row m holds reduced costs, column n the
// right-hand side, T(m, n) holds minus the current objective.
struct Tableau {
  Mat T;
  std::vector<int> basis;
  int m = 0;
  int n = 0;

  void pivot(int r, int jc) {
    T.row(r) /= T(r, jc);
    for (int i = 0; i <= m; ++i) {
      if (i == r) continue;
      const double f = T(i, jc);
      if (f != 0.0) T.row(i) -= f * T.row(r);
    }
    basis[r] = jc;
  }

  // Bland leaving row for entering column jc; -1 when the column is a ray.
  int ratio_row(int jc) const {
    double best = kInf;
    for (int i = 0; i < m; ++i)
      if (T(i, jc) > kPivTol) best = std::min(best, T(i, n) / T(i, jc));
    if (best == kInf) return -1;
    int pick = -1;
    for (int i = 0; i < m; ++i) {
      if (T(i, jc) <= kPivTol) continue;
      if (T(i, n) / T(i, jc) <= best + 1e-9 * (1.0 + std::abs(best)))
        if (pick < 0 || basis[i] < basis[pick]) pick = i;
    }
    return pick;
  }

  LpStatus iterate() {
    for (int it = 0; it < kMaxPivots; ++it) {
      int jc = -1;
      for (int j = 0; j < n; ++j)
        if (T(m, j) < -kCostTol) {
          jc = j;
          break;
        }
      if (jc < 0) return LpStatus::Optimal;
      const int r = ratio_row(jc);
      if (r < 0) return LpStatus::Unbounded;
      pivot(r, jc);
    }
    return LpStatus::IterationLimit;
  }

  Vec basic_point() const {
    Vec z = Vec::Zero(n);
    for (int i = 0; i < m; ++i)
      if (basis[i] < n) z(basis[i]) = std::max(0.0, T(i, n));
    return z;
  }
};

struct TwoPhase {
  LpStatus status = LpStatus::Infeasible;
  Tableau tb;  // final phase-2 tableau over the structural columns
};

TwoPhase run_two_phase(Mat A, Vec b, const Vec& c, double feas_tol) {
  const int n = static_cast<int>(A.cols());
  const int m = static_cast<int>(A.rows());
  for (int i = 0; i < m; ++i)
    if (b(i) < 0) {
      A.row(i) = -A.row(i);
      b(i) = -b(i);
    }

  // Phase 1: artificial basis, minimize total artificial mass.
  Tableau p1;
  p1.m = m;
  p1.n = n + m;
  p1.T.setZero(m + 1, p1.n + 1);
  p1.T.topLeftCorner(m, n) = A;
  p1.T.block(0, n, m, m).setIdentity();
  p1.T.col(p1.n).head(m) = b;
  p1.basis.resize(m);
  for (int i = 0; i < m; ++i) p1.basis[i] = n + i;
  for (int j = 0; j < n; ++j) p1.T(m, j) = -A.col(j).sum();
  p1.T(m, p1.n) = -b.sum();

  const LpStatus s1 = p1.iterate();
  if (s1 == LpStatus::IterationLimit) return {s1, {}};
  if (-p1.T(m, p1.n) > feas_tol) return {LpStatus::Infeasible, {}};

  // Drive artificials out of the basis; rows that cannot pivot on any
  // structural column are redundant and get dropped.
  std::vector<int> keep;
  for (int i = 0; i < m; ++i) {
    if (p1.basis[i] < n) {
      keep.push_back(i);
      continue;
    }
    int jc = -1;
    for (int j = 0; j < n; ++j)
      if (std::abs(p1.T(i, j)) > kPivTol) {
        jc = j;
        break;
      }
    if (jc >= 0) {
      p1.pivot(i, jc);
      keep.push_back(i);
    }
  }

  // Phase 2 over structural columns only.
  Tableau t2;
  t2.m = static_cast<int>(keep.size());
  t2.n = n;
  t2.T.setZero(t2.m + 1, n + 1);
  for (int k = 0; k < t2.m; ++k) {
    t2.T.block(k, 0, 1, n) = p1.T.block(keep[k], 0, 1, n);
    t2.T(k, n) = p1.T(keep[k], p1.n);
    t2.basis.push_back(p1.basis[keep[k]]);
  }
  for (int j = 0; j < n; ++j) {
    double r = c(j);
    for (int k = 0; k < t2.m; ++k) r -= c(t2.basis[k]) * t2.T(k, j);
    t2.T(t2.m, j) = r;
  }
  double obj = 0.0;
  for (int k = 0; k < t2.m; ++k) obj += c(t2.basis[k]) * t2.T(k, n);
  t2.T(t2.m, n) = -obj;

  TwoPhase out;
  out.status = t2.iterate();
  out.tb = std::move(t2);
  return out;
}

}  // namespace

LpResult lp_solve_eq(const Mat& A, const Vec& b, const Vec& c) {
  LpResult out;
  auto tp = run_two_phase(A, b, c, 1e-9 * (1.0 + b.cwiseAbs().sum()));
  out.status = tp.status;
  if (tp.status != LpStatus::Optimal) return out;
  out.z = tp.tb.basic_point();
  out.objective = c.dot(out.z);
  return out;
}

bool linear_feasible(const Mat& A, const Vec& b, double tol, Vec* z_out) {
  auto tp = run_two_phase(A, b, Vec::Zero(A.cols()), tol);
  if (tp.status != LpStatus::Optimal) return false;
  if (z_out) *z_out = tp.tb.basic_point();
  return true;
}

IneqLpResult lp_solve_ineq(const IneqLp& lp, bool enumerate_vertices,
                           int basis_budget) {
  const int n = static_cast<int>(lp.c.size());
  const int m = static_cast<int>(lp.G.rows());
  IneqLpResult out;

  if (m == 0) {
    if (lp.c.size() > 0 && lp.c.lpNorm<Eigen::Infinity>() > 0) {
      out.status = LpStatus::Unbounded;
      return out;
    }
    out.status = LpStatus::Optimal;
    out.objective = 0.0;
    out.x = Vec::Zero(n);
    if (enumerate_vertices) {
      out.optimal_vertices.push_back(out.x);
      for (int i = 0; i < n; ++i) {
        out.optimal_rays.push_back(Vec::Unit(n, i));
        out.optimal_rays.push_back(-Vec::Unit(n, i));
      }
    }
    return out;
  }

  // Split x = u - v with slack s:  [G -G I][u;v;s] = h, all parts >= 0.
  const int N = 2 * n + m;
  Mat A(m, N);
  A << lp.G, -lp.G, Mat::Identity(m, m);
  Vec c(N);
  c << lp.c, -lp.c, Vec::Zero(m);

  auto tp = run_two_phase(A, lp.h, c, 1e-9 * (1.0 + lp.h.cwiseAbs().sum()));
  out.status = tp.status;
  if (tp.status != LpStatus::Optimal) return out;

  const auto to_x = [n](const Vec& z) -> Vec {
    return z.head(n) - z.segment(n, n);
  };
  out.x = to_x(tp.tb.basic_point());
  out.objective = lp.c.dot(out.x);
  if (!enumerate_vertices) return out;

  const auto add_vertex = [&out](const Vec& x) {
    for (const Vec& e : out.optimal_vertices)
      if ((e - x).lpNorm<Eigen::Infinity>() <=
          1e-7 * (1.0 + x.lpNorm<Eigen::Infinity>()))
        return;
    out.optimal_vertices.push_back(x);
  };
  const auto add_ray = [&out](Vec d) {
    const double nn = d.norm();
    if (nn <= 1e-9) return;  // u/v cancellation, not a real direction
    d /= nn;
    for (const Vec& e : out.optimal_rays)
      if ((e - d).norm() <= 1e-6) return;
    out.optimal_rays.push_back(d);
  };
  const auto basis_key = [](const std::vector<int>& b) {
    auto k = b;
    std::sort(k.begin(), k.end());
    return k;
  };

  // Breadth-first walk over alternative optimal bases via pivots on columns
  // with zero reduced cost; ray columns contribute recession directions.
  std::set<std::vector<int>> seen;
  std::deque<Tableau> work;
  seen.insert(basis_key(tp.tb.basis));
  work.push_back(std::move(tp.tb));
  int explored = 0;
  while (!work.empty() && explored < basis_budget) {
    Tableau tb = std::move(work.front());
    work.pop_front();
    ++explored;
    add_vertex(to_x(tb.basic_point()));

    std::vector<char> is_basic(N, 0);
    for (int bi : tb.basis) is_basic[bi] = 1;
    for (int j = 0; j < N; ++j) {
      if (is_basic[j] || tb.T(tb.m, j) > kCostTol) continue;
      const int r = tb.ratio_row(j);
      if (r < 0) {
        Vec dz = Vec::Zero(N);
        dz(j) = 1.0;
        for (int i = 0; i < tb.m; ++i) dz(tb.basis[i]) = -tb.T(i, j);
        add_ray(to_x(dz));
        continue;
      }
      Tableau nb = tb;
      nb.pivot(r, j);
      if (seen.insert(basis_key(nb.basis)).second) work.push_back(std::move(nb));
    }
  }
  return out;
}

}  // namespace hb
