#pragma once

// ===== dense tableau simplex =====
//
// Small dense LP kernel used for set membership tests, stationarity
// certificates, and polyhedral solution-set extraction.  Bland's rule
// throughout, so the pivot sequence is deterministic and cycle-free.

#include <vector>

#include "hb/types.hpp"

namespace hb {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

// min c'z  s.t.  A z = b,  z >= 0.
struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  double objective = kInf;
  Vec z;  // a basic optimal solution when status == Optimal
};

LpResult lp_solve_eq(const Mat& A, const Vec& b, const Vec& c);

// Feasibility of { z >= 0 : A z = b }.  Runs phase 1 only and accepts when
// the minimal artificial mass is <= tol (callers pass a scale-aware tol).
// On success writes a feasible basic point through z_out when non-null.
bool linear_feasible(const Mat& A, const Vec& b, double tol, Vec* z_out);

// min c'x  s.t.  G x <= h,  x free.
struct IneqLp {
  Mat G;
  Vec h;
  Vec c;
};

struct IneqLpResult {
  LpStatus status = LpStatus::Infeasible;
  double objective = kInf;
  Vec x;  // one optimal point when status == Optimal
  // Filled when vertex enumeration is requested: points spanning the optimal
  // face (hull generators; may contain interior witnesses of the face when
  // the face is not pointed in x-space) and its recession directions.
  std::vector<Vec> optimal_vertices;
  std::vector<Vec> optimal_rays;
};

// Solves the inequality-form LP via the split x = u - v plus slacks.  With
// enumerate_vertices the optimal face is walked breadth-first across
// degenerate/alternative optimal bases (at most basis_budget of them) and
// distinct optimal points plus extreme ray directions are collected.
IneqLpResult lp_solve_ineq(const IneqLp& lp, bool enumerate_vertices = false,
                           int basis_budget = 10000);

}  // namespace hb
