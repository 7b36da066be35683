#include <cmath>

#include "doctest.h"
#include "hb/linprog.hpp"
#include "hb/types.hpp"

using namespace hb;

TEST_CASE("equality-form simplex: unique optimum") {
  // min 2a + 3b  s.t.  a + b = 4, a - b = 0, a,b >= 0  ->  (2,2), value 10
  Mat A(2, 2);
  A << 1, 1, 1, -1;
  Vec b = vec2(4.0, 0.0);
  Vec c = vec2(2.0, 3.0);
  const auto r = lp_solve_eq(A, b, c);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.objective == doctest::Approx(10.0));
  CHECK(r.z(0) == doctest::Approx(2.0));
  CHECK(r.z(1) == doctest::Approx(2.0));
}

TEST_CASE("equality-form simplex: infeasible and unbounded") {
  Mat A1(1, 1);
  A1 << 1;
  CHECK(lp_solve_eq(A1, vec1(-1.0), vec1(1.0)).status == LpStatus::Infeasible);

  Mat A2 = Mat::Zero(1, 1);  // the constraint vanishes; min -z is unbounded
  CHECK(lp_solve_eq(A2, vec1(0.0), vec1(-1.0)).status == LpStatus::Unbounded);
}

TEST_CASE("phase-1 feasibility with witness") {
  // z1 + z2 = 1, z >= 0 is feasible; witness must satisfy the row.
  Mat A(1, 2);
  A << 1, 1;
  Vec z;
  REQUIRE(linear_feasible(A, vec1(1.0), 1e-9, &z));
  CHECK(z.sum() == doctest::Approx(1.0));
  CHECK(z.minCoeff() >= -1e-12);

  Mat B(2, 1);  // z = 1 and z = 2 simultaneously: infeasible
  B << 1, 1;
  CHECK_FALSE(linear_feasible(B, vec2(1.0, 2.0), 1e-9, nullptr));
}

TEST_CASE("inequality-form: box corner") {
  IneqLp lp;
  lp.G = Mat(4, 2);
  lp.G << 1, 0, 0, 1, -1, 0, 0, -1;
  lp.h = Vec(4);
  lp.h << 1, 1, 0, 0;
  lp.c = vec2(-1.0, -1.0);
  const auto r = lp_solve_ineq(lp, true);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.objective == doctest::Approx(-2.0));
  CHECK(r.x(0) == doctest::Approx(1.0));
  CHECK(r.x(1) == doctest::Approx(1.0));
  REQUIRE(r.optimal_vertices.size() == 1);
  CHECK(r.optimal_rays.empty());
}

TEST_CASE("inequality-form: optimal edge is enumerated") {
  // min -a over the unit box: optimal face {1} x [0,1].
  IneqLp lp;
  lp.G = Mat(4, 2);
  lp.G << 1, 0, 0, 1, -1, 0, 0, -1;
  lp.h = Vec(4);
  lp.h << 1, 1, 0, 0;
  lp.c = vec2(-1.0, 0.0);
  const auto r = lp_solve_ineq(lp, true);
  REQUIRE(r.status == LpStatus::Optimal);
  REQUIRE(r.optimal_vertices.size() == 2);
  bool saw0 = false, saw1 = false;
  for (const Vec& v : r.optimal_vertices) {
    CHECK(v(0) == doctest::Approx(1.0));
    if (std::abs(v(1)) < 1e-7) saw0 = true;
    if (std::abs(v(1) - 1.0) < 1e-7) saw1 = true;
  }
  CHECK(saw0);
  CHECK(saw1);
  CHECK(r.optimal_rays.empty());
}

TEST_CASE("inequality-form: recession ray of the optimal face") {
  // min 0 s.t. -x <= 0: the whole half-line [0, inf) is optimal.
  IneqLp lp;
  lp.G = Mat(1, 1);
  lp.G << -1;
  lp.h = vec1(0.0);
  lp.c = vec1(0.0);
  const auto r = lp_solve_ineq(lp, true);
  REQUIRE(r.status == LpStatus::Optimal);
  REQUIRE(r.optimal_rays.size() == 1);
  CHECK(r.optimal_rays[0](0) == doctest::Approx(1.0));

  IneqLp unb = lp;
  unb.c = vec1(-1.0);
  CHECK(lp_solve_ineq(unb).status == LpStatus::Unbounded);
}

TEST_CASE("inequality-form: infeasible system") {
  IneqLp lp;
  lp.G = Mat(2, 1);
  lp.G << 1, -1;
  lp.h = vec2(0.0, -1.0);  // x <= 0 and x >= 1
  lp.c = vec1(0.0);
  CHECK(lp_solve_ineq(lp).status == LpStatus::Infeasible);
}
