#include "hb/repro.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hb/calmness.hpp"
#include "hb/geometry.hpp"
#include "hb/instance.hpp"
#include "hb/moduli.hpp"
#include "hb/report.hpp"
#include "hb/rng.hpp"
#include "hb/sip.hpp"

namespace hb {

namespace {

LiminfQuery plan_at(const Vec& center, int shells = 20) {
  LiminfQuery q;
  q.center = center;
  q.shells = shells;
  return q;
}

bool within(double value, double expect, double tol) {
  return std::isfinite(value) && std::abs(value - expect) <= tol;
}

/// Exact distance to the base solution set (polyhedral projection), used
/// where the sublevel set of a sup function degenerates to a single point.
DistanceFn solution_distance_fn(const SIProgram& P) {
  const SolutionSet s = solve(P, P.is_affine());
  FinGenConvexSet S;
  S.is_empty = s.points.empty();
  S.dim = P.n;
  S.generators = s.points;
  S.rays = s.rays;
  return [S](const Vec& x) {
    if (S.is_empty) return kInf;
    return min_norm_point(S.translated(-x)).norm;
  };
}

// ===== c1 .. c5: single-instance modulus values =============================

void run_c1(AcceptanceRow& row, const ExecConfig& exec) {
  const Instance inst = load_shipped("example-3.6");
  const auto eu =
      estimate_er_under(inst.f, inst.center, 0.5, plan_at(inst.center), exec);
  const auto er =
      estimate_er(inst.f, inst.center, 0.5, plan_at(inst.center), exec);
  const auto cert = certify_error_bound(inst.f, inst.center, 0.5, 0.99, 1.0,
                                        plan_at(inst.center), exec);
  const bool ok_cert =
      cert.holds_on_samples && !cert.vacuous && cert.sample_count > 0;
  row.pass = within(eu.value, 1.0, 1e-6) && within(er.value, 1.0, 1e-3) &&
             ok_cert;
  row.detail = "ErUnder(1/2) = " + format_double(eu.value) +
               ", Er(1/2) = " + format_double(er.value) +
               ", bound tau=0.99 " + (ok_cert ? "holds" : "fails") + " on " +
               std::to_string(cert.sample_count) + " samples";
}

void run_c2(AcceptanceRow& row, const ExecConfig& exec) {
  const Instance inst = load_shipped("example-sqrt");
  const auto eu =
      estimate_er_under(inst.f, inst.center, 2.0, plan_at(inst.center), exec);
  row.pass = within(eu.value, 1.0, 1e-6);
  row.detail = "ErUnder(2) = " + format_double(eu.value);
}

void run_c3(AcceptanceRow& row, const ExecConfig& exec) {
  const Instance inst = load_shipped("example-3.16");
  const auto ep = estimate_er_under_prime(inst.f, inst.center, 0.5,
                                          plan_at(inst.center), exec);
  row.pass = within(ep.value, 1.0 / std::sqrt(2.0), 1e-3);
  row.detail = "ErUnderPrime(1/2) = " + format_double(ep.value) +
               " vs 1/sqrt(2) = " + format_double(1.0 / std::sqrt(2.0));
}

void run_c4(AcceptanceRow& row, const ExecConfig& exec) {
  const Instance inst = load_shipped("example-3.20");
  const double q = 0.5;

  // (a) the unscaled quantity d^{q-1} d(0,df)^q is sqrt(2) at every sampled
  //     point with f > 0, on every tread of the staircase
  ShellQuantity quantity;
  quantity.needs_dist = true;
  quantity.needs_subdist = true;
  quantity.ratio = [q](const Vec&, double, double dist, double subdist) {
    return pow0(dist, q - 1.0) * pow0(subdist, q);
  };
  const LiminfTrace tr =
      run_liminf(inst.f, plan_at(inst.center, 12), quantity, false, exec);
  double worst = 0.0;
  for (const SampleRow& s : tr.samples)
    worst = std::max(worst, std::abs(s.ratio - std::sqrt(2.0)));
  const bool ok_exact = !tr.samples.empty() && worst <= 1e-9;

  // (b) the value-filtered estimate decays with the tread index
  const auto eu =
      estimate_er_under(inst.f, inst.center, q, plan_at(inst.center, 5), exec);
  const bool ok_decay = eu.value > 0.0 && eu.value <= 0.2;

  // (c) the distance-weighted estimate keeps the sqrt(2)/2 limit
  const auto ep = estimate_er_under_prime(inst.f, inst.center, q,
                                          plan_at(inst.center, 12), exec);
  const bool ok_prime = within(ep.value, std::sqrt(2.0) / 2.0, 1e-3);

  row.pass = ok_exact && ok_decay && ok_prime;
  row.detail = "max |ratio - sqrt(2)| = " + format_double(worst) + " over " +
               std::to_string(tr.samples.size()) +
               " samples, ErUnder(1/2) = " + format_double(eu.value) +
               ", ErUnderPrime(1/2) = " + format_double(ep.value);
}

void run_c5(AcceptanceRow& row, const ExecConfig& exec) {
  const Instance inst = load_shipped("example-abs");
  ConditionParams params;
  params.variant = ConditionVariant::P316;
  params.q = 1.0;
  params.tau = 2.0;
  params.beta = 0.5;
  const auto cond =
      check_condition(inst.f, inst.center, params, plan_at(inst.center), exec);
  const auto cert = certify_error_bound(inst.f, inst.center, 1.0, 2.0, 1.0,
                                        plan_at(inst.center), exec);
  const bool ok_vacuous = cond.vacuous && cond.gated_count == 0;
  const bool ok_violated = !cert.holds_on_samples && cert.sample_count > 0 &&
                           cert.violation_count == cert.sample_count;
  row.pass = ok_vacuous && ok_violated;
  row.detail = std::string("hypothesis gate admits ") +
               std::to_string(cond.gated_count) + " of " +
               std::to_string(cond.sample_count) +
               " samples; claimed bound violated at " +
               std::to_string(cert.violation_count) + " of " +
               std::to_string(cert.sample_count);
}

// ===== c6: ordering inequality across the library ===========================

void run_c6(AcceptanceRow& row, const ExecConfig& exec) {
  bool all_hold = true;
  double eq_worst = 0.0;
  std::string first_fail;
  int checked = 0;
  for (const std::string& name : shipped_instance_names()) {
    const Instance inst = load_shipped(name);
    const HandlePtr f = instance_function(inst);
    DistanceFn dist;
    if (inst.program) dist = solution_distance_fn(*inst.program);
    LiminfQuery query =
        plan_at(inst.center, name == "example-3.20" ? 8 : 12);
    if (inst.center.size() >= 2) query.samples_per_shell = 192;
    for (double q : {0.25, 0.5, 0.75, 1.0}) {
      const auto rep =
          check_ordering_inequality(f, inst.center, q, query, exec, dist);
      ++checked;
      if (!rep.holds) {
        all_hold = false;
        if (first_fail.empty())
          first_fail = name + " q=" + format_double(q) + " (lhs " +
                       format_double(rep.lhs) + " > rhs " +
                       format_double(rep.rhs) + " + " +
                       format_double(rep.tolerance) + ")";
      }
      if (q == 0.5 && (name == "example-3.6" || name == "example-3.16"))
        eq_worst = std::max(eq_worst, std::abs(rep.lhs - rep.rhs));
    }
  }
  row.pass = all_hold && eq_worst <= 1e-3;
  row.detail = std::to_string(checked) + " instance/q pairs" +
               (all_hold ? std::string(", all hold")
                         : ", first failure: " + first_fail) +
               "; parabola equality gap = " + format_double(eq_worst);
}

// ===== c7 / c8: scalar companions ===========================================

void run_c7(AcceptanceRow& row, const ExecConfig&) {
  bool ok = true;
  double worst_val = 0.0, worst_arg = 0.0;
  for (int i = 1; i <= 10; ++i) {
    const double q = 0.1 * i;
    const AlphaFactor af = alpha_factor_argmax(q);
    double best = 0.0, arg = 0.0;
    for (int k = 1; k < 1000000; ++k) {
      const double a = 1e-6 * k;
      const double v = std::pow(a, q) * std::pow(1.0 - a, 1.0 - q);
      if (v > best) {
        best = v;
        arg = a;
      }
    }
    // the closed form dominates the sweep; the sweep undershoots by at most
    // (max slope) * step
    worst_val = std::max(worst_val, std::abs(af.value - best));
    worst_arg = std::max(worst_arg, std::abs(af.alpha_star - arg));
    ok = ok && af.value >= best - 1e-12 && af.value - best <= 2e-6 &&
         std::abs(af.alpha_star - arg) <= 2e-6;
  }
  const AlphaFactor one = alpha_factor_argmax(1.0);
  ok = ok && one.value == 1.0 && one.alpha_star == 1.0;
  row.pass = ok;
  row.detail = "max |value - sweep| = " + format_double(worst_val) +
               ", max |argmax - sweep| = " + format_double(worst_arg) +
               ", q=1 value = " + format_double(one.value);
}

void run_c8(AcceptanceRow& row, const ExecConfig&) {
  const double qs[] = {0.2, 0.4, 0.6, 0.8, 1.0};
  const double lambdas[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  const double alphas[] = {0.3, 0.6};
  const double taus[] = {0.5, 2.0};
  int cases = 0;
  double worst = 0.0;
  bool exact_ok = true;
  for (double q : qs)
    for (double lambda : lambdas)
      for (double alpha : alphas)
        for (double tau : taus) {
          ++cases;
          const double t = solve_tau_alpha(q, lambda, alpha, tau);
          const double phi = lambda * std::pow(t, 1.0 / q) *
                                 pow0(1.0 - alpha, 1.0 - 1.0 / q) +
                             (1.0 - lambda) * t;
          worst = std::max(worst, std::abs(phi - alpha * tau));
          if (lambda == 0.0 || q == 1.0)
            exact_ok = exact_ok && t == alpha * tau;
        }
  row.pass = cases == 100 && worst <= 1e-12 && exact_ok;
  row.detail = std::to_string(cases) +
               " cases, max residual = " + format_double(worst) +
               ", degenerate cases exact: " + (exact_ok ? "yes" : "no");
}

// ===== c9: the single-constraint program ====================================

void run_c9(AcceptanceRow& row, const ExecConfig& exec) {
  const Instance inst = load_shipped("sip-remark");
  const SIProgram& P = *inst.program;

  // (a) parametric optimal point: x*(b) = b for b < 0 and 0 for b >= 0
  double worst_sol = 0.0;
  for (int k = -9; k <= 9; ++k) {
    const double b = 0.1 * k;
    SIProgram Q = P;
    Q.b = vec1(b);
    const SolutionSet s = solve(Q);
    const double expect = b < 0.0 ? b : 0.0;
    worst_sol = std::max(worst_sol, std::abs(s.point()(0) - expect));
  }
  const bool ok_param = worst_sol <= 1e-12;

  // (b) the partial mapping is calm of order 2/3
  LiminfQuery clm_q = plan_at(inst.center);
  clm_q.samples_per_shell = 8;
  const auto partial = estimate_clm(P, inst.center, 2.0 / 3.0,
                                    MapKind::PartialS_c, clm_q, exec);
  const bool ok_partial = partial.verdict == CalmVerdict::Calm &&
                          partial.estimate.value >= 1.0 - 1e-9;

  // (c) the level-set mapping is not calm of order 3/4
  LiminfQuery lvl_q = plan_at(inst.center, 36);
  lvl_q.r0 = 1e-3;
  lvl_q.samples_per_shell = 4;
  const auto level =
      estimate_clm(P, inst.center, 0.75, MapKind::LevelL, lvl_q, exec);
  const bool ok_level = level.verdict == CalmVerdict::NotCalm &&
                        level.estimate.value <= 1e-2;

  // (d) the sup-function modulus at order 1/2, with the exact solution
  //     distance
  const HandlePtr fbar = sup_function(P, inst.center);
  const auto er = estimate_er(fbar, inst.center, 0.5, plan_at(inst.center),
                              exec, solution_distance_fn(P));
  const bool ok_er = within(er.value, 1.0, 1e-3);

  row.pass = ok_param && ok_partial && ok_level && ok_er;
  row.detail = "max |x*(b) - expected| = " + format_double(worst_sol) +
               "; partial(2/3) " + to_string(partial.verdict) + " est " +
               format_double(partial.estimate.value) + "; level(3/4) " +
               to_string(level.verdict) + " est " +
               format_double(level.estimate.value) +
               "; Er(1/2) of sup = " + format_double(er.value);
}

// ===== c10: ramp constructions at seeded probes =============================

void run_c10(AcceptanceRow& row, const ExecConfig&) {
  struct Setup {
    std::string name;
    std::vector<int> D;
    double chain_q;
  };
  const Setup setups[] = {{"sip-remark", {0}, 0.5},
                          {"lp-quadrant", {0, 1}, 1.0}};
  const int r = 3;
  int built32 = 0, built602 = 0, probes = 0;
  bool post_ok = true;
  std::string first_fail;
  const auto note = [&](const std::string& what) {
    post_ok = false;
    if (first_fail.empty()) first_fail = what;
  };
  for (int which = 0; which < 2; ++which) {
    const Setup& setup = setups[which];
    const Instance inst = load_shipped(setup.name);
    const SIProgram& P = *inst.program;
    const HandlePtr h = f_D(P, inst.center, setup.D);
    for (int i = 0; i < 50; ++i) {
      Substream rng =
          Substream::keyed(31, static_cast<std::uint64_t>(which),
                           static_cast<std::uint64_t>(i));
      Vec x_r = inst.center;
      for (int d = 0; d < x_r.size(); ++d) x_r(d) += 0.5 * rng.next_gaussian();
      ++probes;

      try {
        const PerturbationP32 p = build_perturbation_P32(P, x_r);
        ++built32;
        if (!(p.feasibility_margin >= -1e-12)) note("P32 feasibility");
        if (!(p.containment_gap == 0.0)) note("P32 containment");
        if (!(p.bound_gap <= 1e-12)) note("P32 bound");
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Precondition) note("P32 unexpected error");
      }

      try {
        const PerturbationT602 t = build_perturbation_T602(P, x_r, setup.D, r);
        ++built602;
        if (!(t.feasibility_margin >= -1e-9)) note("ramp feasibility");
        if (!(t.containment_gap == 0.0)) note("ramp containment");
        if (!(t.norm_gap <= 1e-9)) note("ramp norm bound");
        double norm = 0.0;
        for (int k = 0; k < P.grid.size(); ++k)
          norm = std::max(norm, std::abs(t.b_r(k) - P.b(k)));
        const double dist = (x_r - inst.center).norm();
        const double sd = min_norm_point(subdifferential(*h, x_r)).norm;
        const double q = setup.chain_q;
        const double lhs = std::pow(norm, q) / dist;
        const double rhs = std::pow(1.0 + 1.0 / r, q) *
                           std::pow(t.f_D, q - 1.0) * sd;
        if (!(lhs <= rhs + 1e-9)) note("ratio chain");
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Precondition) note("ramp unexpected error");
      }
    }
  }
  row.pass = post_ok && built32 >= 95 && built602 >= 95 && probes == 100;
  row.detail = std::to_string(built32) + "/100 one-sided and " +
               std::to_string(built602) + "/100 two-sided ramps built" +
               (post_ok ? ", all postconditions hold"
                        : ", first failure: " + first_fail);
}

// ===== c11: the subset upper bound dominates the sampled moduli =============

void run_c11(AcceptanceRow& row, const ExecConfig& exec) {
  const Instance inst = load_shipped("lp-quadrant");
  const SIProgram& P = *inst.program;
  LiminfQuery query = plan_at(inst.center);
  query.samples_per_shell = 8;
  const auto full =
      estimate_clm(P, inst.center, 1.0, MapKind::FullS, query, exec);
  const auto partial =
      estimate_clm(P, inst.center, 1.0, MapKind::PartialS_c, query, exec);
  const UpperBoundT602 ub = upper_bound_T602(P, inst.center, 1.0, query, exec);
  double witness_spread = 0.0;
  for (const auto& entry : ub.per_subset)
    if (entry.first == ub.witness_D)
      witness_spread = entry.second.trace.tail_spread();
  const double tol = full.estimate.trace.tail_spread() +
                     partial.estimate.trace.tail_spread() + witness_spread +
                     1e-4;
  const bool ok_first = full.estimate.value <= partial.estimate.value + tol;
  const bool ok_second = partial.estimate.value <= ub.bound + tol;
  row.pass = ok_first && ok_second && std::isfinite(ub.bound);
  row.detail = "clm(full) = " + format_double(full.estimate.value) +
               " <= clm(partial) = " + format_double(partial.estimate.value) +
               " <= bound = " + format_double(ub.bound) +
               " (tolerance " + format_double(tol) + ")";
}

// ===== c12: oracle cross-checks =============================================

void run_c12(AcceptanceRow& row, const ExecConfig&) {
  // (a) certified sublevel distance vs the brute-force grid
  double worst_grid = 0.0;
  bool ok_grid = true;
  for (const std::string& name : shipped_instance_names()) {
    const Instance inst = load_shipped(name);
    if (inst.center.size() > 2) continue;
    const HandlePtr f = instance_function(inst);
    const int n = static_cast<int>(inst.center.size());
    SublevelDistance sd(f, 0.0, inst.center, 8.0, inst.center);
    const Vec lo = inst.center - 2.0 * Vec::Ones(n);
    const Vec hi = inst.center + 2.0 * Vec::Ones(n);
    const int pts = 201;  // step 0.02; the center lands on the grid exactly
    const double slack = 0.02 * std::sqrt(static_cast<double>(n)) + 1e-6;
    Substream rng = Substream::keyed(41, 0, 0);
    for (int probe = 0; probe < 3; ++probe) {
      Vec x = inst.center;
      for (int d = 0; d < n; ++d) x(d) += 1.5 * rng.next_symmetric();
      const DistResult a = sd.at(x);
      const DistResult g = sublevel_distance_grid(*f, x, 0.0, lo, hi, pts);
      if (g.status != DistStatus::Oracle) {
        ok_grid = false;
        continue;
      }
      const double diff = std::abs(a.distance - g.distance);
      worst_grid = std::max(worst_grid, diff);
      ok_grid = ok_grid && diff <= slack;
    }
  }

  // (b) min-norm certificates on random generator sets
  int certified = 0;
  double worst_gap = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Substream rng = Substream::keyed(43, 0, static_cast<std::uint64_t>(trial));
    const int dim = 1 + static_cast<int>(rng.next_u64() % 4);
    const int ng = 1 + static_cast<int>(rng.next_u64() % 8);
    FinGenConvexSet S;
    S.is_empty = false;
    S.dim = dim;
    double scale = 1.0;
    for (int i = 0; i < ng; ++i) {
      Vec g(dim);
      for (int d = 0; d < dim; ++d) g(d) = 4.0 * rng.next_symmetric();
      scale = std::max(scale, g.norm());
      S.generators.push_back(g);
    }
    const MinNormResult r = min_norm_point(S);
    // the certificate gap lives in inner-product units: scale^2
    if (r.certified && r.gap <= 1e-9 * scale * scale) ++certified;
    worst_gap = std::max(worst_gap, r.gap / (scale * scale));
  }
  const bool ok_minnorm = certified == 1000;

  // (c) optimality certificates agree with the solver on random programs
  int lp_ok = 0;
  for (int i = 0; i < 50; ++i) {
    Substream rng = Substream::keyed(47, 0, static_cast<std::uint64_t>(i));
    SIProgram P;
    P.n = 2;
    P.objective_f = std::make_shared<const FunctionHandle>(FunctionHandle::smooth(
        SmoothPiece::constant_piece(2, 0.0), 2, "zero"));
    for (int t = 0; t < 4; ++t) {
      Vec a = vec2(rng.next_gaussian(), rng.next_gaussian());
      if (a.norm() < 1e-6) a = vec2(1.0, 0.0);
      a /= a.norm();
      P.constraints.push_back(SmoothPiece::affine(a, 0.0));
      P.b.conservativeResize(P.b.size() + 1);
      P.b(P.b.size() - 1) = 0.2 + rng.next_unit();
    }
    const Vec boxes[4] = {vec2(1, 0), vec2(-1, 0), vec2(0, 1), vec2(0, -1)};
    for (const Vec& a : boxes) {
      P.constraints.push_back(SmoothPiece::affine(a, 0.0));
      P.b.conservativeResize(P.b.size() + 1);
      P.b(P.b.size() - 1) = 1.0;
    }
    for (int t = 0; t < static_cast<int>(P.constraints.size()); ++t)
      P.grid.points.push_back(vec1(static_cast<double>(t)));
    Vec c = vec2(rng.next_gaussian(), rng.next_gaussian());
    if (c.norm() < 1e-6) c = vec2(0.0, 1.0);
    P.c = c;

    const SolutionSet s = solve(P);
    if (!s.feasible) continue;
    const auto cert = kkt_check(P, s.point(), 1e-6);
    const auto interior = slater_point(P);
    const bool agree = cert.has_value() && cert->residual <= 1e-8 &&
                       static_cast<int>(cert->support.size()) <= P.n &&
                       interior.has_value() &&
                       !kkt_check(P, *interior, 1e-9).has_value();
    if (agree) ++lp_ok;
  }
  const bool ok_lp = lp_ok == 50;

  row.pass = ok_grid && ok_minnorm && ok_lp;
  row.detail = "grid max diff = " + format_double(worst_grid) +
               "; min-norm certified " + std::to_string(certified) +
               "/1000 (worst scaled gap " + format_double(worst_gap) +
               "); solver/certificate agreement " + std::to_string(lp_ok) +
               "/50";
}

// ===== suite assembly =======================================================

struct Criterion {
  const char* id;
  const char* title;
  std::vector<std::string> tags;
  std::function<void(AcceptanceRow&, const ExecConfig&)> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> table = {
      {"c1",
       "one-sided parabola: modulus and value-filtered estimate equal 1, "
       "bound certified",
       {"example-3.6"},
       run_c1},
      {"c2", "one-sided square root: order-2 value-filtered estimate equals 1",
       {"example-sqrt"}, run_c2},
      {"c3",
       "one-sided parabola: distance-weighted estimate equals 1/sqrt(2)",
       {"example-3.16"}, run_c3},
      {"c4",
       "quadratic staircase: exact per-sample invariant, decaying value "
       "estimate",
       {"example-3.20"}, run_c4},
      {"c5",
       "absolute value: norm-gated condition vacuous, claimed bound fails at "
       "every sample",
       {"example-abs"}, run_c5},
      {"c6", "ordering of the two lower estimates across the instance library",
       {"ordering"}, run_c6},
      {"c7", "closed-form weight maximizer matches the fine grid sweep",
       {"alpha-factor"}, run_c7},
      {"c8",
       "scalar root finder meets its defining equation on a parameter grid",
       {"tau-alpha"}, run_c8},
      {"c9",
       "single-constraint program: parametric solutions and calmness "
       "verdicts",
       {"sip-remark"}, run_c9},
      {"c10",
       "ramp right-hand sides satisfy their postconditions at seeded probes",
       {"ramp", "perturbation"}, run_c10},
      {"c11", "corner program: sampled moduli respect the subset upper bound",
       {"lp-quadrant"}, run_c11},
      {"c12",
       "oracle cross-checks: grid distance, norm certificates, optimality "
       "agreement",
       {"oracles", "geometry"}, run_c12},
  };
  return table;
}

bool matches(const Criterion& c, const std::string& only) {
  if (only.empty()) return true;
  if (only == c.id) return true;
  for (const std::string& tag : c.tags)
    if (tag.find(only) != std::string::npos) return true;
  return false;
}

}  // namespace

bool AcceptanceSummary::all_pass() const {
  return std::all_of(rows.begin(), rows.end(),
                     [](const AcceptanceRow& r) { return r.pass; });
}

AcceptanceSummary run_acceptance(const std::string& only,
                                 const ExecConfig& exec) {
  AcceptanceSummary summary;
  for (const Criterion& c : criteria()) {
    if (!matches(c, only)) continue;
    AcceptanceRow row;
    row.id = c.id;
    row.title = c.title;
    row.tags = c.tags;
    try {
      c.run(row, exec);
    } catch (const Error& e) {
      row.pass = false;
      row.detail = std::string("error: ") + e.what();
    }
    summary.rows.push_back(std::move(row));
  }
  return summary;
}

}  // namespace hb
