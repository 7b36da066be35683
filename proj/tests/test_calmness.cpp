#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "hb/calmness.hpp"
#include "hb/geometry.hpp"
#include "hb/rng.hpp"
#include "hb/sip.hpp"

using namespace hb;

namespace {

// minimize x^2 subject to x <= b over a single grid index.
SIProgram remark_program(double b = 0.0) {
  SIProgram P;
  P.n = 1;
  P.objective_f = std::make_shared<const FunctionHandle>(
      FunctionHandle::smooth(SmoothPiece::power1d(1, 0, 1.0, 2.0, true), 1,
                             "square"));
  P.c = vec1(0.0);
  P.grid.points = {vec1(0.0)};
  P.grid.provenance = "single index standing for a one-point compact set";
  P.constraints = {SmoothPiece::affine(vec1(1.0), 0.0)};
  P.b = vec1(b);
  return P;
}

// minimize x1 + x2 subject to -x1 <= 0, -x2 <= 0.
SIProgram quadrant_lp() {
  SIProgram P;
  P.n = 2;
  P.objective_f = std::make_shared<const FunctionHandle>(
      FunctionHandle::smooth(SmoothPiece::constant_piece(2, 0.0), 2, "zero"));
  P.c = vec2(1.0, 1.0);
  P.grid.points = {vec1(0.0), vec1(1.0)};
  P.grid.provenance = "two indices standing for a discretized segment";
  P.constraints = {SmoothPiece::affine(vec2(-1.0, 0.0), 0.0),
                   SmoothPiece::affine(vec2(0.0, -1.0), 0.0)};
  P.b = vec2(0.0, 0.0);
  return P;
}

// minimize x subject to -x <= 0.
SIProgram halfline_lp() {
  SIProgram P;
  P.n = 1;
  P.objective_f = std::make_shared<const FunctionHandle>(
      FunctionHandle::smooth(SmoothPiece::constant_piece(1, 0.0), 1, "zero"));
  P.c = vec1(1.0);
  P.grid.points = {vec1(0.0)};
  P.constraints = {SmoothPiece::affine(vec1(-1.0), 0.0)};
  P.b = vec1(0.0);
  return P;
}

// minimize x^2 subject to x <= 1: the constraint stays inactive under small
// right-hand-side perturbations, so the solution never moves.
SIProgram slack_program() {
  SIProgram P = remark_program(1.0);
  return P;
}

// x <= 0 and -x <= 0: feasible set {0}, no strict interior.
SIProgram pinched_program() {
  SIProgram P;
  P.n = 1;
  P.objective_f = std::make_shared<const FunctionHandle>(
      FunctionHandle::smooth(SmoothPiece::constant_piece(1, 0.0), 1, "zero"));
  P.c = vec1(1.0);
  P.grid.points = {vec1(0.0), vec1(1.0)};
  P.constraints = {SmoothPiece::affine(vec1(1.0), 0.0),
                   SmoothPiece::affine(vec1(-1.0), 0.0)};
  P.b = vec2(0.0, 0.0);
  return P;
}

LiminfQuery quick_query(const Vec& center, double r0 = 0.5, int shells = 20,
                        int samples = 8) {
  LiminfQuery q;
  q.center = center;
  q.r0 = r0;
  q.shells = shells;
  q.samples_per_shell = samples;
  return q;
}

bool all_paths_recertified(const CalmnessReport& rep) {
  return std::all_of(rep.adversarial_paths.begin(),
                     rep.adversarial_paths.end(),
                     [](const AdversarialPath& p) { return p.recertified; });
}

}  // namespace

// ===== shell-sampled calmness estimates =====================================

TEST_CASE("rhs calmness of the quadratic program holds at order two-thirds") {
  SIProgram P = remark_program();
  const CalmnessReport rep = estimate_clm(P, vec1(0.0), 2.0 / 3.0,
                                          MapKind::PartialS_c,
                                          quick_query(vec1(0.0)));
  CHECK(rep.kind == MapKind::PartialS_c);
  CHECK(rep.verdict == CalmVerdict::Calm);
  CHECK(rep.admitted > 0);
  // the worst admitted ratio behaves like |db|^{-1/3}, far above 1 in the tail
  CHECK(rep.estimate.value >= 1.0);
  CHECK(std::isfinite(rep.estimate.value));
  CHECK_FALSE(rep.adversarial_paths.empty());
  CHECK(all_paths_recertified(rep));
  for (const AdversarialPath& p : rep.adversarial_paths) {
    CHECK(p.perturbation.norm <= 0.5 + 1e-15);
    CHECK(p.ratio < kInf);
    CHECK(p.x.size() == 1);
  }
  CHECK(rep.solver_failures == 0);
}

TEST_CASE("level-set mapping of the quadratic program fails at order 3/4") {
  SIProgram P = remark_program();
  // ratio along the level-perturbation axis decays like rho^{1/4}; the whole
  // 5-shell tail must sit below theta, which takes ~36 shells from 1e-3
  LiminfQuery q = quick_query(vec1(0.0), 1e-3, 36, 4);
  const CalmnessReport rep =
      estimate_clm(P, vec1(0.0), 0.75, MapKind::LevelL, q);
  CHECK(rep.kind == MapKind::LevelL);
  CHECK(rep.verdict == CalmVerdict::NotCalm);
  CHECK(rep.estimate.value <= 1e-2);
  CHECK(rep.estimate.value > 0.0);
  CHECK(rep.infeasible_samples > 0);  // shrinking the level empties the set
  CHECK(all_paths_recertified(rep));
}

TEST_CASE("level-set calmness at the matching order is exactly one") {
  SIProgram P = remark_program();
  const CalmnessReport rep =
      estimate_clm(P, vec1(0.0), 0.5, MapKind::LevelL, quick_query(vec1(0.0)));
  CHECK(rep.verdict == CalmVerdict::Calm);
  // norm rho along the level axis moves the set end to sqrt(rho)
  CHECK(rep.estimate.value == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("vacuous verdict when perturbations cannot move the solution") {
  SIProgram P = slack_program();
  LiminfQuery q = quick_query(vec1(0.0), 0.25, 12, 4);
  const CalmnessReport rep =
      estimate_clm(P, vec1(0.0), 1.0, MapKind::PartialS_c, q);
  CHECK(rep.verdict == CalmVerdict::Vacuous);
  CHECK(rep.admitted == 0);
  CHECK(std::isinf(rep.estimate.value));
  CHECK(rep.adversarial_paths.empty());
}

TEST_CASE("the center must solve the base program") {
  SIProgram P = remark_program();
  try {
    estimate_clm(P, vec1(-0.5), 1.0, MapKind::FullS, quick_query(vec1(-0.5)));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CenterNotOptimal);
  }
}

TEST_CASE("solver failures are counted, not swallowed") {
  SIProgram P = halfline_lp();
  // outermost shell pushes the cost through zero: the program turns unbounded
  LiminfQuery q = quick_query(vec1(0.0), 2.0, 3, 8);
  const CalmnessReport rep =
      estimate_clm(P, vec1(0.0), 1.0, MapKind::FullS, q);
  CHECK(rep.solver_failures > 0);
  CHECK(rep.admitted > 0);  // the sane shells still contribute
}

TEST_CASE("serial and parallel sampling produce identical reports") {
  SIProgram P = remark_program();
  ExecConfig serial;
  serial.policy = ExecPolicy::Serial;
  ExecConfig parallel;
  parallel.policy = ExecPolicy::Parallel;
  parallel.workers = 8;
  const LiminfQuery q = quick_query(vec1(0.0), 0.5, 12, 8);
  const CalmnessReport a =
      estimate_clm(P, vec1(0.0), 2.0 / 3.0, MapKind::PartialS_c, q, serial);
  const CalmnessReport b =
      estimate_clm(P, vec1(0.0), 2.0 / 3.0, MapKind::PartialS_c, q, parallel);
  CHECK(a.verdict == b.verdict);
  CHECK(a.admitted == b.admitted);
  CHECK(a.estimate.value == b.estimate.value);  // bitwise
  REQUIRE(a.estimate.trace.shells.size() == b.estimate.trace.shells.size());
  for (size_t k = 0; k < a.estimate.trace.shells.size(); ++k)
    CHECK(a.estimate.trace.shells[k].min_value ==
          b.estimate.trace.shells[k].min_value);
}

TEST_CASE("estimates shrink with the order while perturbations stay small") {
  SIProgram P = remark_program();
  const LiminfQuery q = quick_query(vec1(0.0), 0.5, 14, 6);
  const double v_half =
      estimate_clm(P, vec1(0.0), 0.5, MapKind::PartialS_c, q).estimate.value;
  const double v_twothirds =
      estimate_clm(P, vec1(0.0), 2.0 / 3.0, MapKind::PartialS_c, q)
          .estimate.value;
  const double v_one =
      estimate_clm(P, vec1(0.0), 1.0, MapKind::PartialS_c, q).estimate.value;
  // norms <= 1, so norm^q is pointwise nonincreasing in q over one sample set
  CHECK(v_half >= v_twothirds - 1e-12);
  CHECK(v_twothirds >= v_one - 1e-12);
}

// ===== support-pinned ramp ==================================================

TEST_CASE("support-pinned ramp keeps the probe feasible, the support active") {
  const SIProgram R = remark_program();
  const SIProgram Q = quadrant_lp();
  int built = 0;
  for (int inst = 0; inst < 2; ++inst) {
    const SIProgram& P = inst == 0 ? R : Q;
    for (int i = 0; i < (inst == 0 ? 40 : 60); ++i) {
      Substream rng = Substream::keyed(7, static_cast<std::uint64_t>(inst),
                                       static_cast<std::uint64_t>(i));
      Vec x_r(P.n);
      for (int j = 0; j < P.n; ++j) x_r(j) = 0.5 * rng.next_gaussian();
      PerturbationP32 p;
      try {
        p = build_perturbation_P32(P, x_r);
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Precondition);  // landed inside the set
        continue;
      }
      ++built;
      CHECK(p.fbar > 0.0);
      CHECK(p.feasibility_margin >= -1e-12);
      CHECK(p.containment_gap == 0.0);
      CHECK(p.bound_gap <= 1e-12);
      // recheck the three claims directly against the program data
      SIProgram Pr = P;
      Pr.b = p.b_r;
      CHECK(feasible(Pr, x_r, 1e-12));
      for (int t : p.T0)
        CHECK(p.b_r(t) == P.constraints[static_cast<size_t>(t)].eval(x_r));
      for (int t = 0; t < P.grid.size(); ++t)
        CHECK(std::abs(p.b_r(t) - P.b(t)) <=
              (p.N + 1.0) * p.fbar + 1e-12);
    }
  }
  CHECK(built >= 80);
}

TEST_CASE("ramp reproduces the closed forms of the quadratic program") {
  SIProgram P = remark_program();

  // deep on the infeasible side: full weight, so b_r = x_r^2 exactly
  const PerturbationP32 neg = build_perturbation_P32(P, vec1(-0.25));
  CHECK(neg.fbar == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK(neg.b_r(0) == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK(neg.T0.empty());  // the base optimum carries the zero certificate
  CHECK(neg.N == 1.0);

  // strictly above the set: the weight-1 region is empty, b_r copies g(x_r)
  const PerturbationP32 pos = build_perturbation_P32(P, vec1(0.25));
  CHECK(pos.b_r(0) == 0.25);
  CHECK(pos.fbar == 0.25);
  CHECK(pos.feasibility_margin == 0.0);

  // a probe inside the solution set is rejected
  CHECK_THROWS_AS(build_perturbation_P32(P, vec1(0.0)), Error);
}

TEST_CASE("ramp pins the full support of the corner program") {
  SIProgram P = quadrant_lp();
  const PerturbationP32 p = build_perturbation_P32(P, vec2(-0.3, 0.4));
  CHECK(p.T0 == std::vector<int>{0, 1});
  CHECK(p.fbar == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(p.N == doctest::Approx(2.0).epsilon(1e-12));  // (1 + gamma_plus)/gamma
  CHECK(p.b_r(0) == 0.3);    // -x1 copied verbatim
  CHECK(p.b_r(1) == -0.4);   // -x2 copied verbatim
  CHECK(p.containment_gap == 0.0);
  CHECK(p.feasibility_margin >= 0.0);
}

TEST_CASE("ramp requires a certificate at the base optimum") {
  SIProgram P = pinched_program();
  try {
    build_perturbation_P32(P, vec1(0.5));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoSlater);
  }
}

// ===== two-sided ramp =======================================================

TEST_CASE("two-sided ramp tracks the dyadic probe sequence") {
  SIProgram P = remark_program();
  const HandlePtr h = f_D(P, vec1(0.0), {0});
  for (int r = 1; r <= 8; ++r) {
    const Vec x_r = vec1(-std::pow(2.0, -r));
    const PerturbationT602 p = build_perturbation_T602(P, x_r, {0}, r);
    CHECK(p.f_D == -x_r(0));
    CHECK(p.b_r(0) == x_r(0));  // pinned index copies g(x_r) = x_r
    CHECK(p.feasibility_margin == 0.0);
    CHECK(p.containment_gap == 0.0);
    CHECK(p.norm_gap <= 1e-15);

    // parameter-to-point ratio chain at q = 1/2
    const double q = 0.5;
    const double lhs =
        std::pow(std::abs(p.b_r(0) - P.b(0)), q) / std::abs(x_r(0));
    const double sd = min_norm_point(subdifferential(*h, x_r)).norm;
    const double rhs =
        std::pow(1.0 + 1.0 / r, q) * std::pow(p.f_D, q - 1.0) * sd;
    CHECK(lhs <= rhs + 1e-9);
  }
}

TEST_CASE("two-sided ramp postconditions hold at seeded probe points") {
  SIProgram P = quadrant_lp();
  const std::vector<int> D = {0, 1};
  const HandlePtr h = f_D(P, vec2(0.0, 0.0), D);
  const int r = 3;
  int built = 0;
  for (int i = 0; i < 100; ++i) {
    Substream rng = Substream::keyed(11, 0, static_cast<std::uint64_t>(i));
    const Vec x_r = vec2(0.4 * rng.next_gaussian(), 0.4 * rng.next_gaussian());
    PerturbationT602 p;
    try {
      p = build_perturbation_T602(P, x_r, D, r);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Precondition);
      continue;
    }
    ++built;
    CHECK(p.feasibility_margin >= -1e-12);
    CHECK(p.containment_gap == 0.0);
    CHECK(p.norm_gap <= 1e-12);
    SIProgram Pr = P;
    Pr.b = p.b_r;
    CHECK(feasible(Pr, x_r, 1e-12));
    for (int t : D)
      CHECK(p.b_r(t) == P.constraints[static_cast<size_t>(t)].eval(x_r));

    double norm = 0.0;
    for (int t = 0; t < P.grid.size(); ++t)
      norm = std::max(norm, std::abs(p.b_r(t) - P.b(t)));
    const double sd = min_norm_point(subdifferential(*h, x_r)).norm;
    const double q = 1.0;
    const double lhs = std::pow(norm, q) / x_r.norm();
    const double rhs =
        std::pow(1.0 + 1.0 / r, q) * std::pow(p.f_D, q - 1.0) * sd;
    CHECK(lhs <= rhs + 1e-9);
  }
  CHECK(built >= 90);
}

TEST_CASE("two-sided ramp rejects invalid inputs") {
  SIProgram R = remark_program();
  // empty index set reduces to the plain constraint ramp
  const PerturbationT602 p = build_perturbation_T602(R, vec1(0.25), {}, 2);
  CHECK(p.b_r(0) == 0.25);
  CHECK(p.f_D == 0.25);

  CHECK_THROWS_AS(build_perturbation_T602(R, vec1(-0.25), {0}, 0), Error);

  SIProgram Q = quadrant_lp();
  // {0} alone is not an absorbing subset of the corner program
  CHECK_THROWS_AS(build_perturbation_T602(Q, vec2(-0.3, 0.1), {0}, 1), Error);
}

// ===== calmness upper bound =================================================

TEST_CASE("upper bound on the corner program finds the diagonal witness") {
  SIProgram P = quadrant_lp();
  const UpperBoundT602 ub =
      upper_bound_T602(P, vec2(0.0, 0.0), 1.0, quick_query(vec2(0.0, 0.0)));
  REQUIRE(ub.per_subset.size() == 1);
  CHECK(ub.witness_D == std::vector<int>{0, 1});
  // two-sided sup of the active pair is the max norm; its flattest descent
  // direction sits on the diagonal with subdifferential distance 1/sqrt(2)
  CHECK(ub.bound == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("upper bound on the quadratic program is one") {
  SIProgram P = remark_program();
  const UpperBoundT602 ub =
      upper_bound_T602(P, vec1(0.0), 1.0, quick_query(vec1(0.0)));
  CHECK(ub.per_subset.size() == 2);
  CHECK(ub.bound == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(ub.witness_D.empty());  // the one-sided ramp already attains it
}

TEST_CASE("upper bound preconditions are enforced") {
  SIProgram P = pinched_program();
  try {
    upper_bound_T602(P, vec1(0.0), 1.0, quick_query(vec1(0.0)));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoSlater);
  }

  SIProgram Q = quadrant_lp();
  try {
    upper_bound_T602(Q, vec2(0.5, 0.5), 1.0, quick_query(vec2(0.5, 0.5)));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Precondition);
  }
}

// ===== equivalence chain ====================================================

TEST_CASE("all four readings agree on the quadratic program at order 1/2") {
  SIProgram P = remark_program();
  const EquivalenceChainReport rep =
      check_equivalence_chain(P, vec1(0.0), 0.5, quick_query(vec1(0.0)));
  CHECK_FALSE(rep.inconclusive);
  CHECK(rep.implications_hold);
  CHECK_FALSE(rep.linear_case);
  CHECK(rep.v_iv == CalmVerdict::Calm);
  CHECK(rep.v_iii == CalmVerdict::Calm);
  CHECK(rep.v_i == CalmVerdict::Calm);
  CHECK(rep.v_ii == CalmVerdict::Calm);
  // the sup-function bound and the level-set modulus agree near 1
  CHECK(rep.er_fbar.value == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(rep.level.estimate.value == doctest::Approx(1.0).epsilon(1e-5));
  const double tol = rep.er_fbar.trace.tail_spread() +
                     rep.level.estimate.trace.tail_spread() + 1e-4;
  CHECK(std::abs(rep.er_fbar.value - rep.level.estimate.value) <= tol);
}

TEST_CASE("level reading drops out first when the order rises to 2/3") {
  SIProgram P = remark_program();
  // the failing ratios decay like rho^{1/6}: the schedule must reach depths
  // where the whole tail sits below the verdict threshold.  Down there the
  // sup function is ~rho^2 on the adversarial side, so the admission floor
  // has to drop below it.
  LiminfQuery q = quick_query(vec1(0.0), 0.5, 30);
  q.positivity_floor = 1e-22;
  const EquivalenceChainReport rep =
      check_equivalence_chain(P, vec1(0.0), 2.0 / 3.0, q, {}, 0.05);
  CHECK_FALSE(rep.inconclusive);
  CHECK(rep.implications_hold);  // the one-way implications survive
  CHECK(rep.v_iv == CalmVerdict::NotCalm);
  CHECK(rep.v_iii == CalmVerdict::NotCalm);
  CHECK(rep.v_i == CalmVerdict::Calm);   // argmin mappings stay calm
  CHECK(rep.v_ii == CalmVerdict::Calm);
}

TEST_CASE("linear programs make the chain an equivalence") {
  SIProgram P = halfline_lp();
  const EquivalenceChainReport rep =
      check_equivalence_chain(P, vec1(0.0), 1.0, quick_query(vec1(0.0)));
  CHECK(rep.linear_case);
  CHECK(rep.linear_agreement);
  CHECK(rep.implications_hold);
  CHECK_FALSE(rep.inconclusive);
  CHECK(rep.v_iv == CalmVerdict::Calm);
  CHECK(rep.v_iii == CalmVerdict::Calm);
  CHECK(rep.v_i == CalmVerdict::Calm);
  CHECK(rep.v_ii == CalmVerdict::Calm);
  CHECK(rep.er_fbar.value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.full.estimate.value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.partial.estimate.value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.level.estimate.value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("corner program: moduli line up along the chain") {
  SIProgram P = quadrant_lp();
  const LiminfQuery q = quick_query(vec2(0.0, 0.0));
  const EquivalenceChainReport rep =
      check_equivalence_chain(P, vec2(0.0, 0.0), 1.0, q);
  CHECK(rep.linear_case);
  CHECK(rep.linear_agreement);
  CHECK(rep.implications_hold);

  // level modulus equals the sup-function error bound (same geometry)
  const double root5 = std::sqrt(5.0);
  CHECK(rep.er_fbar.value == doctest::Approx(1.0 / root5).epsilon(1e-6));
  CHECK(rep.level.estimate.value == doctest::Approx(1.0 / root5).epsilon(1e-6));
  const double agree_tol = rep.er_fbar.trace.tail_spread() +
                           rep.level.estimate.trace.tail_spread() + 1e-4;
  CHECK(std::abs(rep.er_fbar.value - rep.level.estimate.value) <= agree_tol);

  // argmin mappings move along the diagonal corner: modulus 1/sqrt(2)
  const double root2 = std::sqrt(2.0);
  CHECK(rep.full.estimate.value == doctest::Approx(1.0 / root2).epsilon(1e-9));
  CHECK(rep.partial.estimate.value ==
        doctest::Approx(1.0 / root2).epsilon(1e-9));

  // sampled chain: full <= partial <= per-subset upper bound
  const UpperBoundT602 ub = upper_bound_T602(P, vec2(0.0, 0.0), 1.0, q);
  const double chain_tol = rep.full.estimate.trace.tail_spread() +
                           rep.partial.estimate.trace.tail_spread() +
                           ub.per_subset.front().second.trace.tail_spread() +
                           1e-4;
  CHECK(rep.full.estimate.value <= rep.partial.estimate.value + chain_tol);
  CHECK(rep.partial.estimate.value <= ub.bound + chain_tol);
}

// ===== single-valuedness probe ==============================================

TEST_CASE("equality probe skips programs without the single-valued property") {
  SIProgram P = remark_program();
  const EncEqualityProbe probe =
      clm_enc_equality_probe(P, vec1(0.0), 1.0, quick_query(vec1(0.0)));
  CHECK(probe.skipped_no_enc);
  CHECK_FALSE(probe.enc.enc_holds);
  CHECK_FALSE(probe.agree);
}

TEST_CASE("equality probe matches both argmin estimates on the corner") {
  SIProgram P = quadrant_lp();
  const EncEqualityProbe probe =
      clm_enc_equality_probe(P, vec2(0.0, 0.0), 1.0,
                             quick_query(vec2(0.0, 0.0)));
  CHECK_FALSE(probe.skipped_no_enc);
  CHECK(probe.enc.enc_holds);
  CHECK(probe.agree);
  CHECK(probe.difference <= probe.tolerance);
  const double root2 = std::sqrt(2.0);
  CHECK(probe.full.estimate.value ==
        doctest::Approx(1.0 / root2).epsilon(1e-9));
  CHECK(probe.partial.estimate.value ==
        doctest::Approx(1.0 / root2).epsilon(1e-9));
}
