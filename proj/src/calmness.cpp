#include "hb/calmness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include "hb/function.hpp"
#include "hb/geometry.hpp"
#include "hb/rng.hpp"

namespace hb {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double objective_value(const SIProgram& P, const Vec& x) {
  return eval(*P.objective_f, x) + P.c.dot(x);
}

// Distance from x to the solver's finite representation of the solution set
// (convex hull of the reported points plus the reported recession rays).
double solution_distance(const FinGenConvexSet& S, const Vec& x) {
  if (S.is_empty) return kInf;
  return min_norm_point(S.translated(-x)).norm;
}

FinGenConvexSet solution_geometry(const SolutionSet& s, int dim) {
  FinGenConvexSet g;
  g.is_empty = s.points.empty();
  g.dim = dim;
  g.generators = s.points;
  g.rays = s.rays;
  return g;
}

// Sup-function value computed directly from the program data, so that the
// ramp constructions compare against exactly the numbers they threshold on.
double sup_value(const SIProgram& P, const Vec& x, double alpha_bar) {
  double v = objective_value(P, x) - alpha_bar;
  for (int t = 0; t < P.grid.size(); ++t)
    v = std::max(v, P.constraints[static_cast<size_t>(t)].eval(x) - P.b(t));
  return v;
}

// ===== level-set membership =================================================

double level_margin(const SIProgram& P, double alpha, const Vec& b,
                    const Vec& x) {
  double m = objective_value(P, x) - alpha;
  for (int t = 0; t < P.grid.size(); ++t)
    m = std::max(m, P.constraints[static_cast<size_t>(t)].eval(x) - b(t));
  return m;
}

Vec one_objective_subgradient(const SIProgram& P, const Vec& x) {
  const FinGenConvexSet sd = subdifferential(*P.objective_f, x);
  Vec g = sd.generators.empty() ? Vec(Vec::Zero(P.n)) : sd.generators.front();
  return g + P.c;
}

Vec level_margin_subgradient(const SIProgram& P, double alpha, const Vec& b,
                             const Vec& x) {
  double best = objective_value(P, x) - alpha;
  int arg = -1;  // -1 = objective row
  for (int t = 0; t < P.grid.size(); ++t) {
    const double v = P.constraints[static_cast<size_t>(t)].eval(x) - b(t);
    if (v > best) {
      best = v;
      arg = t;
    }
  }
  if (arg < 0) return one_objective_subgradient(P, x);
  return P.constraints[static_cast<size_t>(arg)].gradient(x);
}

// Find a point with nonpositive margin.  The step length targets margin zero
// directly (step = margin / ‖g‖² along the subgradient), which keeps the
// iteration scale-free: perturbations shrink over fourteen orders of
// magnitude and a fixed step schedule would never land inside the thin
// feasible slabs of the deep shells.
std::optional<Vec> level_feasible_point(const SIProgram& P, double alpha,
                                        const Vec& b, const Vec& start) {
  Vec x = start;
  double m = level_margin(P, alpha, b, x);
  if (m <= 0.0) return x;
  for (int it = 0; it < 600; ++it) {
    const Vec g = level_margin_subgradient(P, alpha, b, x);
    const double gn2 = g.squaredNorm();
    if (!(gn2 > 1e-30)) break;  // flat positive margin: the set is empty
    x -= (m / gn2) * g;
    if (!x.allFinite()) break;
    m = level_margin(P, alpha, b, x);
    if (m <= 0.0) return x;
  }
  return std::nullopt;
}

// Largest step s in [0, cap] keeping base + s*dir inside the level set.  The
// margin is convex along the ray and nonpositive at the base, so the feasible
// steps form an interval and bisection returns its right end.
double max_feasible_step(const SIProgram& P, double alpha, const Vec& b,
                         const Vec& base, const Vec& dir, double cap) {
  if (level_margin(P, alpha, b, base + cap * dir) <= 0.0) return cap;
  double lo = 0.0, hi = cap;
  for (int it = 0; it < 64; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (level_margin(P, alpha, b, base + mid * dir) <= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

// Probe directions for the level-set mapping.  In 1-D the two signs cover
// everything.  In 2-D the extreme ratio sits where two active rows of the
// margin tie, so the axes and an angular fill are enriched with the exact tie
// directions of the row gradients at the center (for affine rows these are
// the true minimizers; for curved rows they are a first-order hint).
std::vector<Vec> level_directions(const SIProgram& P, const Vec& xbar,
                                  std::uint64_t seed) {
  const int n = P.n;
  std::vector<Vec> dirs;
  if (n == 1) {
    dirs.push_back(vec1(1.0));
    dirs.push_back(vec1(-1.0));
    return dirs;
  }
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e(i) = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  if (n == 2) {
    const int scan = 64;
    for (int i = 0; i < scan; ++i) {
      const double a = kTwoPi * (i + 0.5) / scan;  // nodes off the axes
      dirs.push_back(vec2(std::cos(a), std::sin(a)));
    }
    std::vector<Vec> grads;
    const FinGenConvexSet sd = subdifferential(*P.objective_f, xbar);
    for (const Vec& g : sd.generators) grads.push_back(g + P.c);
    for (int t = 0; t < P.grid.size(); ++t)
      grads.push_back(P.constraints[static_cast<size_t>(t)].gradient(xbar));
    for (size_t i = 0; i < grads.size(); ++i)
      for (size_t j = i + 1; j < grads.size(); ++j) {
        const Vec d = grads[i] - grads[j];
        if (d.norm() <= 1e-12) continue;
        const Vec p = vec2(-d(1), d(0)).normalized();
        dirs.push_back(p);
        dirs.push_back(-p);
      }
  } else {
    Substream rng = Substream::keyed(seed, 0, 0);
    for (int j = 0; j < 16; ++j) {
      Vec v(n);
      for (int i = 0; i < n; ++i) v(i) = rng.next_gaussian();
      if (v.norm() > 1e-12) dirs.push_back(v.normalized());
    }
  }
  return dirs;
}

// ===== perturbation shells ==================================================

struct SampleOutcome {
  int status = 0;  // 0 nothing admitted, 1 admitted, 2 solver failure,
                   // 3 infeasible instance
  double ratio = kInf;
  double dist = 0.0;
  Vec x;
  bool recert = false;
};

// Deterministic probes first (coordinate axes of the parameter block, then
// the ± corners of the sup-norm ball over the right-hand-side block — its
// extreme points), then `randoms` annulus draws, each from a counter-based
// stream keyed by (seed, shell, probe index).
std::vector<Perturbation> shell_probes(const SIProgram& P, MapKind kind,
                                       double alpha_bar, double rho,
                                       double gamma, int randoms,
                                       std::uint64_t seed, int shell) {
  const int n = P.n;
  const int m = P.grid.size();
  const bool perturb_c = kind == MapKind::FullS;
  const int nb = kind == MapKind::LevelL ? m + 1 : m;

  Vec base_b(nb);
  for (int t = 0; t < m; ++t) base_b(t) = P.b(t);
  if (kind == MapKind::LevelL) base_b(m) = alpha_bar;

  std::vector<Perturbation> probes;
  const auto push = [&](const Vec& dc, const Vec& db) {
    Perturbation p;
    p.c = perturb_c ? Vec(P.c + dc) : P.c;
    p.b = base_b + db;
    p.norm = param_norm(perturb_c ? dc : Vec(Vec::Zero(n)), db);
    probes.push_back(std::move(p));
  };

  const Vec zc = Vec::Zero(n);
  if (perturb_c) {
    for (int i = 0; i < n; ++i)
      for (double sgn : {1.0, -1.0}) {
        Vec dc = Vec::Zero(n);
        dc(i) = sgn * rho;
        push(dc, Vec::Zero(nb));
      }
  }
  for (int t = 0; t < nb; ++t)
    for (double sgn : {1.0, -1.0}) {
      Vec db = Vec::Zero(nb);
      db(t) = sgn * rho;
      push(zc, db);
    }
  if (nb > 1)
    for (double sgn : {1.0, -1.0}) push(zc, Vec(Vec::Constant(nb, sgn * rho)));

  for (int j = 0; j < randoms; ++j) {
    Substream rng = Substream::keyed(seed, static_cast<std::uint64_t>(shell),
                                     static_cast<std::uint64_t>(probes.size()));
    Vec dc = Vec::Zero(n);
    Vec db(nb);
    double norm0 = 0.0;
    do {
      if (perturb_c) {
        for (int i = 0; i < n; ++i) dc(i) = rng.next_gaussian();
        const double r = dc.norm();
        if (r > 1e-12)
          dc *= std::pow(rng.next_unit(), 1.0 / n) / r;
        else
          dc.setZero();
      }
      for (int t = 0; t < nb; ++t) db(t) = rng.next_symmetric();
      norm0 = std::max(perturb_c ? dc.norm() : 0.0,
                       db.lpNorm<Eigen::Infinity>());
    } while (norm0 < 1e-12);
    const double s = rho * (gamma + (1.0 - gamma) * (1.0 - rng.next_unit()));
    dc *= s / norm0;
    db *= s / norm0;
    push(dc, db);
  }
  return probes;
}

SampleOutcome eval_argmin_sample(const SIProgram& P, const Vec& xbar,
                                 const FinGenConvexSet& Sgeo, double q,
                                 const Perturbation& pert, bool affine,
                                 double dfloor, double box_radius) {
  SampleOutcome out;
  SIProgram Q = P;
  Q.c = pert.c;
  Q.b = pert.b;
  SolutionSet s;
  try {
    s = solve(Q, affine);
  } catch (const Error&) {
    out.status = 2;
    return out;
  }
  if (!s.feasible) {
    out.status = 3;
    return out;
  }
  double best_obj = s.objective;
  for (const Vec& p : s.points) {
    if ((p - xbar).norm() > box_radius) continue;
    const double d = solution_distance(Sgeo, p);
    if (!(d > dfloor) || !std::isfinite(d)) continue;
    const double ratio = std::pow(pert.norm, q) / d;
    if (ratio < out.ratio) {
      out.status = 1;
      out.ratio = ratio;
      out.dist = d;
      out.x = p;
    }
  }
  if (out.status == 1) {
    const double ov = objective_value(Q, out.x);
    out.recert = feasible(Q, out.x, 1e-8) &&
                 std::abs(ov - best_obj) <= 1e-8 * (1.0 + std::abs(best_obj));
  }
  return out;
}

SampleOutcome eval_level_sample(const SIProgram& P, const Vec& xbar,
                                const FinGenConvexSet& Sgeo, double q,
                                const Perturbation& pert,
                                const std::vector<Vec>& dirs, double dfloor,
                                double box_radius) {
  SampleOutcome out;
  const int m = P.grid.size();
  const Vec b = pert.b.head(m);
  const double alpha = pert.b(m);
  const std::optional<Vec> base = level_feasible_point(P, alpha, b, xbar);
  if (!base) {
    out.status = 3;
    return out;
  }
  const auto consider = [&](const Vec& x) {
    if ((x - xbar).norm() > box_radius) return;
    const double d = solution_distance(Sgeo, x);
    if (!(d > dfloor) || !std::isfinite(d)) return;
    const double ratio = std::pow(pert.norm, q) / d;
    if (ratio < out.ratio) {
      out.status = 1;
      out.ratio = ratio;
      out.dist = d;
      out.x = x;
    }
  };
  consider(*base);
  for (const Vec& v : dirs) {
    const double s = max_feasible_step(P, alpha, b, *base, v, box_radius);
    if (s > 0.0) consider(*base + s * v);
  }
  if (out.status == 1)
    out.recert = level_margin(P, alpha, b, out.x) <= 1e-9;
  return out;
}

CalmVerdict classify_tail(const LiminfTrace& trace, double theta) {
  const int k0 =
      std::max(0, static_cast<int>(trace.shells.size()) - trace.tail);
  double lo = kInf, hi = -kInf;
  for (size_t k = static_cast<size_t>(k0); k < trace.shells.size(); ++k) {
    const double v = trace.shells[k].min_value;
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(lo < kInf)) return CalmVerdict::Vacuous;
  if (lo >= theta) return CalmVerdict::Calm;
  if (hi < theta) return CalmVerdict::NotCalm;
  return CalmVerdict::Inconclusive;
}

void validate_clm_inputs(const SIProgram& P, const Vec& xbar, double q,
                         const LiminfQuery& query) {
  P.validate();
  if (xbar.size() != P.n)
    throw Error(ErrorCode::Precondition, "center dimension mismatch");
  if (!(q > 0.0))
    throw Error(ErrorCode::Precondition, "calmness order q must be positive");
  if (!(query.r0 > 0.0) || !(query.gamma > 0.0) || !(query.gamma < 1.0) ||
      query.shells < 0 || query.tail < 1)
    throw Error(ErrorCode::Precondition, "invalid shell schedule");
}

}  // namespace

// ===== sampled calmness estimate ============================================

CalmnessReport estimate_clm(const SIProgram& P, const Vec& xbar, double q,
                            MapKind kind, const LiminfQuery& query,
                            const ExecConfig& exec, double theta) {
  validate_clm_inputs(P, xbar, q, query);

  const bool affine = P.is_affine();
  const SolutionSet s0 = solve(P, affine);
  if (!s0.feasible)
    throw Error(ErrorCode::Precondition, "base program is infeasible");
  const FinGenConvexSet Sgeo = solution_geometry(s0, P.n);
  if (!(solution_distance(Sgeo, xbar) <= 1e-8 * (1.0 + xbar.norm())))
    throw Error(ErrorCode::CenterNotOptimal,
                "center is not optimal for the base program");
  const double alpha_bar = objective_value(P, xbar);

  std::vector<Vec> dirs;
  if (kind == MapKind::LevelL) dirs = level_directions(P, xbar, query.seed);

  const int randoms =
      query.samples_per_shell == 0 ? 16 : query.samples_per_shell;
  const double dfloor = std::max(query.positivity_floor, 0.0);

  CalmnessReport rep;
  rep.kind = kind;
  rep.q = q;
  rep.theta = theta;
  rep.estimate.kind = ModulusKind::Clm;
  rep.estimate.q = q;
  LiminfTrace& trace = rep.estimate.trace;
  trace.tail = query.tail;
  trace.shells.reserve(static_cast<size_t>(query.shells) + 1);

  for (int k = 0; k <= query.shells; ++k) {
    const double rho = query.r0 * std::pow(query.gamma, k);
    const std::vector<Perturbation> probes = shell_probes(
        P, kind, alpha_bar, rho, query.gamma, randoms, query.seed, k);
    const int count = static_cast<int>(probes.size());

    std::vector<SampleOutcome> outs(static_cast<size_t>(count));
    for_each_index(count, exec, [&](int i) {
      const auto idx = static_cast<size_t>(i);
      outs[idx] =
          kind == MapKind::LevelL
              ? eval_level_sample(P, xbar, Sgeo, q, probes[idx], dirs, dfloor,
                                  query.box_radius)
              : eval_argmin_sample(P, xbar, Sgeo, q, probes[idx], affine,
                                   dfloor, query.box_radius);
    });

    ShellRow row;
    row.radius = rho;
    row.inner = query.gamma * rho;
    int best = -1;
    for (int i = 0; i < count; ++i) {
      const SampleOutcome& o = outs[static_cast<size_t>(i)];
      if (o.status == 2) ++rep.solver_failures;
      if (o.status == 3) ++rep.infeasible_samples;
      if (o.status != 1) continue;
      ++row.admitted;
      ++rep.admitted;
      row.f_min = std::min(row.f_min, probes[static_cast<size_t>(i)].norm);
      row.f_max = std::max(row.f_max, probes[static_cast<size_t>(i)].norm);
      if (o.ratio < row.min_value) {
        row.min_value = o.ratio;
        row.argmin = o.x;
        best = i;
      }
      if (query.record_samples) {
        SampleRow srow;
        srow.shell = k;
        srow.x = o.x;
        srow.fx = probes[static_cast<size_t>(i)].norm;
        srow.dist = o.dist;
        srow.subdist = std::numeric_limits<double>::quiet_NaN();
        srow.ratio = o.ratio;
        trace.samples.push_back(std::move(srow));
      }
    }
    if (best >= 0) {
      AdversarialPath path;
      path.perturbation = probes[static_cast<size_t>(best)];
      path.x = outs[static_cast<size_t>(best)].x;
      path.ratio = outs[static_cast<size_t>(best)].ratio;
      path.recertified = outs[static_cast<size_t>(best)].recert;
      rep.adversarial_paths.push_back(std::move(path));
    }
    trace.shells.push_back(std::move(row));
  }

  const int k0 = std::max(0, query.shells + 1 - query.tail);
  for (int k = k0; k <= query.shells; ++k)
    trace.extracted_value = std::min(
        trace.extracted_value, trace.shells[static_cast<size_t>(k)].min_value);
  rep.estimate.value = trace.extracted_value;
  rep.verdict = classify_tail(trace, theta);
  return rep;
}

// ===== ramp constructions ===================================================

namespace {

// Shared ramp core: weight 0 above the `hold` threshold (and on the pinned
// indices), weight 1 at or below the `push` threshold, linear in the
// constraint value between.  Weight-0 entries copy g_t(x_r) verbatim so the
// pinned indices stay active without any roundoff.
Vec ramp_rhs(const SIProgram& P, const Vec& values, const Vec& x_r,
             const std::vector<char>& pinned, double hold, double push,
             double lift) {
  const int m = P.grid.size();
  bool any_push = false;
  for (int t = 0; t < m; ++t)
    if (!pinned[static_cast<size_t>(t)] && values(t) <= push) any_push = true;

  Vec b_r(m);
  for (int t = 0; t < m; ++t) {
    const double g = P.constraints[static_cast<size_t>(t)].eval(x_r);
    double phi = 0.0;
    if (any_push && !pinned[static_cast<size_t>(t)]) {
      const double v = values(t);
      if (v <= push)
        phi = 1.0;
      else if (v < hold)
        phi = std::min(1.0, std::max(0.0, (hold - v) / (hold - push)));
    }
    if (phi == 0.0)
      b_r(t) = g;
    else if (phi == 1.0)
      b_r(t) = P.b(t) + lift;
    else
      b_r(t) = (1.0 - phi) * g + phi * (P.b(t) + lift);
  }
  return b_r;
}

double feasibility_margin_at(const SIProgram& P, const Vec& b_r,
                             const Vec& x_r) {
  double margin = kInf;
  for (int t = 0; t < P.grid.size(); ++t)
    margin = std::min(
        margin, b_r(t) - P.constraints[static_cast<size_t>(t)].eval(x_r));
  return margin;
}

}  // namespace

PerturbationP32 build_perturbation_P32(const SIProgram& P, const Vec& x_r) {
  P.validate();
  if (x_r.size() != P.n)
    throw Error(ErrorCode::Precondition, "probe point dimension mismatch");

  const SolutionSet s0 = solve(P, P.is_affine());
  if (!s0.feasible)
    throw Error(ErrorCode::Precondition, "base program is infeasible");
  const Vec xbar = s0.point();
  const std::optional<KKTCertificate> cert = kkt_check(P, xbar);
  if (!cert)
    throw Error(ErrorCode::NoCertificate,
                "no multiplier certificate at the base optimum");

  const double alpha_bar = objective_value(P, xbar);
  const int m = P.grid.size();
  Vec values(m);
  for (int t = 0; t < m; ++t)
    values(t) = P.constraints[static_cast<size_t>(t)].eval(x_r) - P.b(t);
  const double fbar = sup_value(P, x_r, alpha_bar);
  if (!(fbar > 0.0))
    throw Error(ErrorCode::Precondition,
                "probe point does not leave the solution set");

  // The threshold scale comes from the certificate: with the support split by
  // the sign of g_t(x_r) − b̄_t, every support value is at least
  // −N·f̄(x_r) for N = max over the negative side of
  // (1 + sum of positive-side multipliers) / gamma_t (1 if that side is
  // empty).  The support therefore belongs in the weight-0 region; it is
  // pinned explicitly so that roundoff in the comparison cannot unseat it.
  double gamma_plus = 0.0;
  for (const KKTSupport& e : cert->support)
    if (values(e.t) >= 0.0) gamma_plus += e.gamma;
  double N = 1.0;
  bool has_minus = false;
  for (const KKTSupport& e : cert->support)
    if (values(e.t) < 0.0) {
      const double cand = (1.0 + gamma_plus) / e.gamma;
      N = has_minus ? std::max(N, cand) : cand;
      has_minus = true;
    }

  PerturbationP32 out;
  out.N = N;
  out.fbar = fbar;
  std::vector<char> pinned(static_cast<size_t>(m), 0);
  for (const KKTSupport& e : cert->support) {
    pinned[static_cast<size_t>(e.t)] = 1;
    out.T0.push_back(e.t);
  }
  std::sort(out.T0.begin(), out.T0.end());

  out.b_r = ramp_rhs(P, values, x_r, pinned, -N * fbar, -(N + 1.0) * fbar,
                     fbar);

  out.feasibility_margin = feasibility_margin_at(P, out.b_r, x_r);
  out.containment_gap = 0.0;
  for (int t : out.T0)
    out.containment_gap = std::max(
        out.containment_gap,
        std::abs(out.b_r(t) -
                 P.constraints[static_cast<size_t>(t)].eval(x_r)));
  out.bound_gap = -kInf;
  for (int t = 0; t < m; ++t)
    out.bound_gap = std::max(
        out.bound_gap, std::abs(out.b_r(t) - P.b(t)) - (N + 1.0) * fbar);
  return out;
}

PerturbationT602 build_perturbation_T602(const SIProgram& P, const Vec& x_r,
                                         const std::vector<int>& D, int r) {
  P.validate();
  if (x_r.size() != P.n)
    throw Error(ErrorCode::Precondition, "probe point dimension mismatch");
  if (r < 1)
    throw Error(ErrorCode::Precondition, "sequence index r must be >= 1");

  const SolutionSet s0 = solve(P, P.is_affine());
  if (!s0.feasible)
    throw Error(ErrorCode::Precondition, "base program is infeasible");
  const Vec xbar = s0.point();
  (void)f_D(P, xbar, D);  // verifies D is an absorbing active subset

  const int m = P.grid.size();
  std::vector<char> pinned(static_cast<size_t>(m), 0);
  for (int t : D) pinned[static_cast<size_t>(t)] = 1;

  Vec values(m);
  for (int t = 0; t < m; ++t)
    values(t) = P.constraints[static_cast<size_t>(t)].eval(x_r) - P.b(t);
  double fD = -kInf;
  for (int t = 0; t < m; ++t) fD = std::max(fD, values(t));
  for (int t : D) fD = std::max(fD, -values(t));
  if (!(fD > 0.0))
    throw Error(ErrorCode::Precondition,
                "two-sided sup-function vanishes at the probe point");

  const double push = -(1.0 + 1.0 / r) * fD;
  for (int t : D)
    if (values(t) <= push) {
      std::ostringstream os;
      os << "pinned index " << t << " reaches the weight-1 threshold: "
         << "|g_t - b_t| <= f_D must fail, inputs are contradictory";
      throw Error(ErrorCode::DisjointnessViolation, os.str());
    }

  PerturbationT602 out;
  out.f_D = fD;
  out.b_r = ramp_rhs(P, values, x_r, pinned, -fD, push, fD);

  out.feasibility_margin = feasibility_margin_at(P, out.b_r, x_r);
  out.containment_gap = 0.0;
  for (int t : D)
    out.containment_gap = std::max(
        out.containment_gap,
        std::abs(out.b_r(t) -
                 P.constraints[static_cast<size_t>(t)].eval(x_r)));
  double norm = 0.0;
  for (int t = 0; t < m; ++t)
    norm = std::max(norm, std::abs(out.b_r(t) - P.b(t)));
  out.norm_gap = norm - (1.0 + 1.0 / r) * fD;
  return out;
}

// ===== calmness upper bound =================================================

UpperBoundT602 upper_bound_T602(const SIProgram& P, const Vec& xbar, double q,
                                const LiminfQuery& query,
                                const ExecConfig& exec) {
  validate_clm_inputs(P, xbar, q, query);
  if (!slater_point(P).has_value())
    throw Error(ErrorCode::NoSlater,
                "upper bound requires a strictly feasible point");
  const SolutionSet s0 = solve(P, P.is_affine());
  if (!s0.feasible || s0.points.size() != 1 || !s0.rays.empty() ||
      (s0.points.front() - xbar).norm() > 1e-8 * (1.0 + xbar.norm()))
    throw Error(ErrorCode::Precondition,
                "solution set is not the verified singleton {center}");

  const KKTSubsetFamily family = kkt_subsets(P, xbar);
  if (family.subsets.empty())
    throw Error(ErrorCode::Precondition,
                "no absorbing subsets at the center");

  ShellQuantity quant;
  quant.needs_subdist = true;
  quant.ratio = [q](const Vec&, double fx, double, double sd) {
    return pow0(fx, q - 1.0) * sd;
  };

  UpperBoundT602 out;
  for (const KKTSubsetEntry& entry : family.subsets) {
    const HandlePtr h = f_D(P, xbar, entry.indices);
    LiminfQuery sub = query;
    sub.center = xbar;
    LiminfTrace tr = run_liminf(h, sub, quant, /*value_filter=*/true, exec);
    ModulusEstimate est;
    est.kind = ModulusKind::Clm;
    est.q = q;
    est.value = tr.extracted_value;
    est.trace = std::move(tr);
    if (est.value < out.bound) {
      out.bound = est.value;
      out.witness_D = entry.indices;
    }
    out.per_subset.emplace_back(entry.indices, std::move(est));
  }
  return out;
}

// ===== equivalence chain ====================================================

namespace {

bool counts_as_calm(CalmVerdict v) {
  return v == CalmVerdict::Calm || v == CalmVerdict::Vacuous;
}

bool decisive(CalmVerdict v) { return v != CalmVerdict::Inconclusive; }

}  // namespace

EquivalenceChainReport check_equivalence_chain(const SIProgram& P,
                                               const Vec& xbar, double q,
                                               const LiminfQuery& query,
                                               const ExecConfig& exec,
                                               double theta) {
  validate_clm_inputs(P, xbar, q, query);

  EquivalenceChainReport rep;
  rep.q = q;
  rep.linear_case = P.is_affine();

  // (iv): q-order error bound of the sup function, with distances measured
  // against the solved solution set (its zero set).
  const HandlePtr fbar = sup_function(P, xbar);
  const SolutionSet s0 = solve(P, P.is_affine());
  const FinGenConvexSet Sgeo = solution_geometry(s0, P.n);
  const DistanceFn dist = [Sgeo](const Vec& x) {
    return solution_distance(Sgeo, x);
  };
  LiminfQuery er_query = query;
  er_query.center = xbar;
  rep.er_fbar = estimate_er(fbar, xbar, q, er_query, exec, dist);
  rep.v_iv = classify_tail(rep.er_fbar.trace, theta);

  rep.level = estimate_clm(P, xbar, q, MapKind::LevelL, query, exec, theta);
  rep.full = estimate_clm(P, xbar, q, MapKind::FullS, query, exec, theta);
  rep.partial =
      estimate_clm(P, xbar, q, MapKind::PartialS_c, query, exec, theta);
  rep.v_iii = rep.level.verdict;
  rep.v_i = rep.full.verdict;
  rep.v_ii = rep.partial.verdict;

  rep.inconclusive = !decisive(rep.v_iv) || !decisive(rep.v_iii) ||
                     !decisive(rep.v_i) || !decisive(rep.v_ii);

  rep.implications_hold = true;
  if (decisive(rep.v_iii) && decisive(rep.v_iv) &&
      counts_as_calm(rep.v_iii) != counts_as_calm(rep.v_iv))
    rep.implications_hold = false;
  if (decisive(rep.v_iv) && decisive(rep.v_i) && counts_as_calm(rep.v_iv) &&
      !counts_as_calm(rep.v_i))
    rep.implications_hold = false;
  if (decisive(rep.v_i) && decisive(rep.v_ii) && counts_as_calm(rep.v_i) &&
      !counts_as_calm(rep.v_ii))
    rep.implications_hold = false;

  rep.linear_agreement = true;
  if (rep.linear_case && !rep.inconclusive) {
    const bool ref = counts_as_calm(rep.v_iv);
    rep.linear_agreement = counts_as_calm(rep.v_iii) == ref &&
                           counts_as_calm(rep.v_i) == ref &&
                           counts_as_calm(rep.v_ii) == ref;
  }
  return rep;
}

// ===== single-valuedness probe ==============================================

EncEqualityProbe clm_enc_equality_probe(const SIProgram& P, const Vec& xbar,
                                        double q, const LiminfQuery& query,
                                        const ExecConfig& exec, double theta) {
  EncEqualityProbe probe;
  probe.enc = enc_check(P, xbar);
  if (!probe.enc.enc_holds) {
    probe.skipped_no_enc = true;
    return probe;
  }
  probe.full = estimate_clm(P, xbar, q, MapKind::FullS, query, exec, theta);
  probe.partial =
      estimate_clm(P, xbar, q, MapKind::PartialS_c, query, exec, theta);
  const double a = probe.full.estimate.value;
  const double b = probe.partial.estimate.value;
  probe.tolerance = probe.full.estimate.trace.tail_spread() +
                    probe.partial.estimate.trace.tail_spread() + 1e-4;
  if (std::isfinite(a) && std::isfinite(b)) {
    probe.difference = std::abs(a - b);
    probe.agree = probe.difference <= probe.tolerance;
  } else {
    probe.difference = kInf;
    probe.agree = std::isinf(a) && std::isinf(b);
  }
  return probe;
}

}  // namespace hb
