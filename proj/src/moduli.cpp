#include "hb/moduli.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <variant>

#include "hb/rng.hpp"

namespace hb {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Relative slack applied when a sampled inequality is tested: quantities that
// are identities in exact arithmetic (ratio == 1 vs tau == 1) must not flip
// on the last ulp of a pow() round-trip.
constexpr double kCheckSlack = 1e-9;

int default_samples(int requested, int dim) {
  if (requested > 0) return requested;
  return dim == 1 ? 64 : 512;
}

/// Deterministic sample points on the annulus (inner, outer] around `center`.
/// 1-D: symmetric grid touching the outer radius.  n-D: one RNG substream per
/// (seed, shell, sample) — the draw is independent of evaluation order.
std::vector<Vec> shell_points(const Vec& center, double outer, double inner,
                              int count, std::uint64_t seed, int shell_index) {
  const int n = static_cast<int>(center.size());
  std::vector<Vec> pts;
  pts.reserve(static_cast<size_t>(count));
  if (n == 1) {
    const int pos = count - count / 2;
    for (int j = 0; j < pos; ++j) {
      const double t = inner + (outer - inner) * (j + 1) / pos;
      pts.push_back(vec1(center(0) + t));
    }
    for (int j = 0; j < count / 2; ++j) {
      const double t = inner + (outer - inner) * (j + 1) / (count / 2);
      pts.push_back(vec1(center(0) - t));
    }
    return pts;
  }
  for (int j = 0; j < count; ++j) {
    Substream rng = Substream::keyed(seed, static_cast<std::uint64_t>(shell_index),
                                     static_cast<std::uint64_t>(j));
    Vec dir(n);
    double norm2 = 0.0;
    do {
      for (int d = 0; d < n; ++d) dir(d) = rng.next_gaussian();
      norm2 = dir.squaredNorm();
    } while (norm2 < 1e-300);
    const double t = inner + (outer - inner) * rng.next_unit();
    pts.push_back(center + (t / std::sqrt(norm2)) * dir);
  }
  return pts;
}

/// 2-D max-of-smooth only: locate directions on the shell where the leading
/// piece changes and append the crossing points.  Subdifferential distance is
/// minimized on such piece boundaries, which random shells almost never hit.
void add_tie_points(const FunctionHandle& f, const Vec& center, double radius,
                    std::vector<Vec>& pts) {
  const auto* mf = std::get_if<MaxForm>(&f.form);
  if (mf == nullptr || center.size() != 2 || mf->pieces.size() < 2) return;
  auto at_angle = [&](double theta) {
    Vec x(2);
    x << center(0) + radius * std::cos(theta),
        center(1) + radius * std::sin(theta);
    return x;
  };
  auto top_piece = [&](double theta) {
    const Vec x = at_angle(theta);
    int best = 0;
    double best_v = -kInf;
    for (size_t i = 0; i < mf->pieces.size(); ++i) {
      const double v = mf->pieces[i].eval(x);
      if (v > best_v) {
        best_v = v;
        best = static_cast<int>(i);
      }
    }
    return best;
  };
  // Half-step offset keeps scan nodes off symmetry axes (a tie sitting
  // exactly on a node is invisible to the sign change test).
  const int scan = 128;
  const double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i < scan; ++i) {
    double lo = two_pi * (i + 0.5) / scan;
    double hi = two_pi * (i + 1.5) / scan;
    const int p_lo = top_piece(lo);
    if (top_piece(hi) == p_lo) continue;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (top_piece(mid) == p_lo)
        lo = mid;
      else
        hi = mid;
    }
    pts.push_back(at_angle(0.5 * (lo + hi)));
  }
}

double safe_eval(const FunctionHandle& f, const Vec& x) {
  try {
    return eval(f, x);
  } catch (const Error&) {
    return kInf;  // outside the function's domain: never admitted
  }
}

/// Distance backend shared by the estimators and checkers: an explicit
/// override wins; otherwise the geometry oracle on [f <= 0] is used (its 1-D
/// profile is built once, up front, so concurrent queries are read-only).
class DistanceBackend {
 public:
  DistanceBackend(const HandlePtr& f, const Vec& center, double box_radius,
                  const DistanceFn& override_fn) {
    if (override_fn) {
      fn_ = override_fn;
      return;
    }
    oracle_.emplace(f, 0.0, center, box_radius);
    if (f->dim == 1) oracle_->intervals();
  }

  double operator()(const Vec& x) const {
    if (fn_) return fn_(x);
    return oracle_->at(x).distance;
  }

 private:
  DistanceFn fn_;
  std::optional<SublevelDistance> oracle_;
};

double subdiff_distance(const FunctionHandle& f, const Vec& x) {
  return min_norm_point(subdifferential(f, x)).norm;
}

void validate_plan(const HandlePtr& f, const LiminfQuery& q) {
  if (!f) throw Error(ErrorCode::Precondition, "null function handle");
  if (q.center.size() != f->dim)
    throw Error(ErrorCode::Precondition, "query center dimension mismatch");
  if (!(q.r0 > 0.0) || !(q.gamma > 0.0) || !(q.gamma < 1.0))
    throw Error(ErrorCode::Precondition, "shell schedule needs r0 > 0, gamma in (0,1)");
  if (q.shells < 0 || q.tail < 1)
    throw Error(ErrorCode::Precondition, "shell count/tail out of range");
  if (!(q.positivity_floor >= 0.0))
    throw Error(ErrorCode::Precondition, "positivity floor must be >= 0");
  if (!q.value_ceiling_schedule.empty() &&
      static_cast<int>(q.value_ceiling_schedule.size()) != q.shells + 1)
    throw Error(ErrorCode::Precondition,
                "explicit ceiling schedule must list one value per shell");
}

void require_center_in_set(const FunctionHandle& f, const Vec& center,
                           double floor) {
  const double fc = safe_eval(f, center);
  if (!(fc <= floor)) {
    std::ostringstream os;
    os << "f(center) = " << fc << " > " << floor
       << ": the reference point must lie in [f <= 0]";
    throw Error(ErrorCode::CenterNotInSet, os.str());
  }
}

}  // namespace

double LiminfTrace::tail_spread() const {
  const int k0 = std::max(0, static_cast<int>(shells.size()) - tail);
  double lo = kInf, hi = -kInf;
  for (size_t k = static_cast<size_t>(k0); k < shells.size(); ++k) {
    const double v = shells[k].min_value;
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > -kInf) || !(lo < kInf)) return 0.0;
  return hi - lo;
}

// ===== liminf engine ========================================================

LiminfTrace run_liminf(const HandlePtr& f, const LiminfQuery& query,
                       const ShellQuantity& quantity, bool value_filter,
                       const ExecConfig& exec, const DistanceFn& distance) {
  validate_plan(f, query);
  if (!quantity.ratio)
    throw Error(ErrorCode::Precondition, "shell quantity has no ratio callback");
  require_center_in_set(*f, query.center, query.positivity_floor);

  std::optional<DistanceBackend> dist;
  if (quantity.needs_dist)
    dist.emplace(f, query.center, query.box_radius, distance);

  const int samples = default_samples(query.samples_per_shell, f->dim);

  LiminfTrace trace;
  trace.tail = query.tail;
  trace.shells.reserve(static_cast<size_t>(query.shells) + 1);

  // The adaptive "f(x) -> 0+" ceiling: the largest value admitted by the most
  // recent nonempty shell; after an empty shell, sqrt(r_k) times the largest
  // value seen anywhere so far.
  double last_admitted_max = kNaN;
  double running_max = -kInf;

  for (int k = 0; k <= query.shells; ++k) {
    const double outer = query.r0 * std::pow(query.gamma, k);
    const double inner = query.gamma * outer;

    std::vector<Vec> pts =
        shell_points(query.center, outer, inner, samples, query.seed, k);
    if (query.tie_enrichment && f->dim == 2)
      add_tie_points(*f, query.center, outer, pts);
    const int m = static_cast<int>(pts.size());

    std::vector<double> fx(static_cast<size_t>(m), kInf);
    for_each_index(m, exec, [&](int i) {
      fx[static_cast<size_t>(i)] = safe_eval(*f, pts[static_cast<size_t>(i)]);
    });

    double ceiling = kInf;
    if (value_filter) {
      if (!query.value_ceiling_schedule.empty()) {
        ceiling = query.value_ceiling_schedule[static_cast<size_t>(k)];
      } else if (k > 0) {
        if (std::isfinite(last_admitted_max))
          ceiling = last_admitted_max;
        else if (running_max > 0.0)
          ceiling = std::sqrt(outer) * running_max;
      }
    }

    std::vector<char> admitted(static_cast<size_t>(m), 0);
    for (int i = 0; i < m; ++i) {
      const double v = fx[static_cast<size_t>(i)];
      admitted[static_cast<size_t>(i)] =
          (v > query.positivity_floor && v < kInf && v <= ceiling) ? 1 : 0;
    }

    std::vector<double> ratio(static_cast<size_t>(m), kInf);
    std::vector<double> dist_col(static_cast<size_t>(m), kNaN);
    std::vector<double> sub_col(static_cast<size_t>(m), kNaN);
    for_each_index(m, exec, [&](int i) {
      const auto idx = static_cast<size_t>(i);
      if (!admitted[idx]) return;
      try {
        double d = kNaN, sd = kNaN;
        if (quantity.needs_dist) d = (*dist)(pts[idx]);
        if (quantity.needs_subdist) sd = subdiff_distance(*f, pts[idx]);
        dist_col[idx] = d;
        sub_col[idx] = sd;
        ratio[idx] = quantity.ratio(pts[idx], fx[idx], d, sd);
      } catch (...) {
        ratio[idx] = kInf;  // quantity undefined here: no contribution
      }
    });

    ShellRow row;
    row.radius = outer;
    row.inner = inner;
    row.ceiling = ceiling;
    for (int i = 0; i < m; ++i) {
      const auto idx = static_cast<size_t>(i);
      const double v = fx[idx];
      if (std::isfinite(v)) running_max = std::max(running_max, v);
      if (!admitted[idx]) continue;
      row.admitted += 1;
      row.f_min = std::min(row.f_min, v);
      row.f_max = std::max(row.f_max, v);
      if (ratio[idx] < row.min_value) {
        row.min_value = ratio[idx];
        row.argmin = pts[idx];
      }
      if (query.record_samples) {
        SampleRow s;
        s.shell = k;
        s.x = pts[idx];
        s.fx = v;
        s.dist = dist_col[idx];
        s.subdist = sub_col[idx];
        s.ratio = ratio[idx];
        trace.samples.push_back(std::move(s));
      }
    }
    if (row.admitted > 0) last_admitted_max = row.f_max;
    trace.shells.push_back(std::move(row));
  }

  const int k0 = std::max(0, query.shells + 1 - query.tail);
  for (int k = k0; k <= query.shells; ++k)
    trace.extracted_value =
        std::min(trace.extracted_value, trace.shells[static_cast<size_t>(k)].min_value);
  return trace;
}

// ===== modulus estimators ===================================================

ModulusEstimate estimate_er(const HandlePtr& f, const Vec& xbar, double q,
                            LiminfQuery query, const ExecConfig& exec,
                            const DistanceFn& distance) {
  if (!(q > 0.0)) throw Error(ErrorCode::Precondition, "estimate_er needs q > 0");
  query.center = xbar;
  ShellQuantity quantity;
  quantity.needs_dist = true;
  quantity.ratio = [q](const Vec&, double fx, double d, double) {
    return pow0(fx, q) / d;
  };
  ModulusEstimate est;
  est.kind = ModulusKind::Er;
  est.q = q;
  est.trace = run_liminf(f, query, quantity, /*value_filter=*/false, exec, distance);
  est.value = est.trace.extracted_value;
  return est;
}

ModulusEstimate estimate_er_under(const HandlePtr& f, const Vec& xbar, double q,
                                  LiminfQuery query, const ExecConfig& exec) {
  if (!(q > 0.0))
    throw Error(ErrorCode::Precondition, "estimate_er_under needs q > 0");
  query.center = xbar;
  ShellQuantity quantity;
  quantity.needs_subdist = true;
  quantity.ratio = [q](const Vec&, double fx, double, double sd) {
    return q * sd / pow0(fx, 1.0 - q);
  };
  ModulusEstimate est;
  est.kind = ModulusKind::ErUnder;
  est.q = q;
  est.trace = run_liminf(f, query, quantity, /*value_filter=*/true, exec, {});
  est.value = est.trace.extracted_value;
  return est;
}

ModulusEstimate estimate_er_under_prime(const HandlePtr& f, const Vec& xbar,
                                        double q, LiminfQuery query,
                                        const ExecConfig& exec,
                                        const DistanceFn& distance) {
  if (!(q > 0.0) || !(q <= 1.0))
    throw Error(ErrorCode::Precondition,
                "estimate_er_under_prime needs q in (0, 1]");
  query.center = xbar;
  const double factor = pow0(q, q) * pow0(1.0 - q, 1.0 - q);
  ShellQuantity quantity;
  quantity.needs_dist = true;
  quantity.needs_subdist = true;
  quantity.ratio = [q, factor](const Vec&, double, double d, double sd) {
    return factor * pow0(sd, q) / pow0(d, 1.0 - q);
  };
  ModulusEstimate est;
  est.kind = ModulusKind::ErUnderPrime;
  est.q = q;
  est.trace = run_liminf(f, query, quantity, /*value_filter=*/true, exec, distance);
  est.value = est.trace.extracted_value;
  return est;
}

// ===== sufficient-condition checks ==========================================

namespace {

struct BallSamples {
  std::vector<Vec> pts;
  bool box_limited = false;
};

/// Sample B_delta(center) as geometric annuli from the effective radius down.
/// Radii beyond the sampling box (delta = +inf included) are truncated to the
/// box and flagged.
BallSamples sample_ball(const FunctionHandle& f, const LiminfQuery& plan,
                        double delta) {
  BallSamples out;
  double r0 = delta;
  if (!(delta <= plan.box_radius)) {
    r0 = plan.box_radius;
    out.box_limited = true;
  }
  const int samples = default_samples(plan.samples_per_shell, f.dim);
  for (int k = 0; k <= plan.shells; ++k) {
    const double outer = r0 * std::pow(plan.gamma, k);
    const double inner = plan.gamma * outer;
    std::vector<Vec> pts =
        shell_points(plan.center, outer, inner, samples, plan.seed, k);
    if (plan.tie_enrichment && f.dim == 2)
      add_tie_points(f, plan.center, outer, pts);
    for (auto& p : pts) out.pts.push_back(std::move(p));
  }
  return out;
}

enum class PointState : char { Skipped, Ungated, Holds, Violated };

struct PointOutcome {
  PointState state = PointState::Skipped;
  double fx = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
};

ConditionReport aggregate(const std::vector<Vec>& pts,
                          const std::vector<PointOutcome>& outcome) {
  ConditionReport report;
  constexpr size_t kMaxListed = 32;
  for (size_t i = 0; i < pts.size(); ++i) {
    const PointOutcome& o = outcome[i];
    if (o.state == PointState::Skipped) continue;
    report.sample_count += 1;
    if (o.state == PointState::Ungated) continue;
    report.gated_count += 1;
    if (o.state == PointState::Holds) continue;
    report.violation_count += 1;
    if (report.violating_points.size() < kMaxListed) {
      PointCheck v;
      v.x = pts[i];
      v.fx = o.fx;
      v.lhs = o.lhs;
      v.rhs = o.rhs;
      report.violating_points.push_back(std::move(v));
    }
  }
  report.vacuous = report.gated_count == 0;
  report.holds_on_samples = report.violation_count == 0;
  return report;
}

void validate_condition(const ConditionParams& p) {
  if (!(p.tau > 0.0)) throw Error(ErrorCode::Precondition, "tau must be > 0");
  if (!(p.delta > 0.0)) throw Error(ErrorCode::Precondition, "delta must be > 0");
  if (!(p.q > 0.0)) throw Error(ErrorCode::Precondition, "q must be > 0");
  const bool q_capped = p.variant == ConditionVariant::T33 ||
                        p.variant == ConditionVariant::C314 ||
                        p.variant == ConditionVariant::T37 ||
                        p.variant == ConditionVariant::P316;
  if (q_capped && !(p.q <= 1.0))
    throw Error(ErrorCode::Precondition, "variant requires q in (0, 1]");
  if (p.variant == ConditionVariant::T37 &&
      (!(p.lambda >= 0.0) || !(p.lambda <= 1.0)))
    throw Error(ErrorCode::Precondition, "lambda must lie in [0, 1]");
  if (p.variant == ConditionVariant::P316 && !(p.beta > 0.0))
    throw Error(ErrorCode::Precondition, "P316 gate needs beta > 0");
}

}  // namespace

ConditionReport check_condition(const HandlePtr& f, const Vec& xbar,
                                const ConditionParams& params, LiminfQuery plan,
                                const ExecConfig& exec,
                                const DistanceFn& distance) {
  plan.center = xbar;
  validate_plan(f, plan);
  validate_condition(params);
  require_center_in_set(*f, xbar, plan.positivity_floor);

  const double q = params.q;
  const double tau = params.tau;
  const double lambda = params.lambda;
  const double kappa = pow0(q, q) * pow0(1.0 - q, 1.0 - q);
  const bool simplified = params.gate_mode == GateMode::Simplified;

  // Which points need the sublevel distance: the gate reference in Distance
  // mode, the d-powers in the T33/C314/P316 condition (absent at q = 1 where
  // d^0 = 1), and T37's lambda term on both sides.
  const bool t37_d = params.variant == ConditionVariant::T37 &&
                     lambda > 0.0 && q < 1.0;
  const bool gate_d =
      (!simplified && params.variant != ConditionVariant::P316) || t37_d;
  const bool cond_d =
      ((params.variant == ConditionVariant::T33 ||
        params.variant == ConditionVariant::C314 ||
        params.variant == ConditionVariant::P316) &&
       q < 1.0) ||
      t37_d;
  const bool need_d = gate_d || cond_d;

  std::optional<DistanceBackend> dist;
  if (need_d) dist.emplace(f, xbar, plan.box_radius, distance);

  BallSamples ball = sample_ball(*f, plan, params.delta);
  const int m = static_cast<int>(ball.pts.size());
  std::vector<PointOutcome> outcome(static_cast<size_t>(m));

  for_each_index(m, exec, [&](int i) {
    const auto idx = static_cast<size_t>(i);
    PointOutcome& o = outcome[idx];
    try {
      const Vec& x = ball.pts[idx];
      const double fx = safe_eval(*f, x);
      if (!(fx > plan.positivity_floor) || !(fx < kInf) ||
          !(fx < params.value_cap))
        return;
      o.state = PointState::Ungated;
      o.fx = fx;
      const double norm = (x - xbar).norm();
      const double d = need_d ? (*dist)(x) : kNaN;

      double gate_lhs = 0.0;
      double gate_ref = simplified ? norm : d;
      switch (params.variant) {
        case ConditionVariant::T31:
          gate_lhs = fx;
          break;
        case ConditionVariant::T32:
        case ConditionVariant::T33:
          gate_lhs = pow0(fx, q);
          break;
        case ConditionVariant::C314:
          gate_lhs = kappa * pow0(fx, q);
          gate_ref = simplified ? norm : d;
          break;
        case ConditionVariant::T37:
          // At lambda == 0 the distance is not computed; keep 0 * f(d) out of
          // the sum so an unused NaN cannot poison the gate.
          gate_lhs = (lambda > 0.0 ? lambda * fx * pow0(d, 1.0 - 1.0 / q) : 0.0) +
                     (1.0 - lambda) * pow0(fx, q);
          break;
        case ConditionVariant::P316:
          gate_lhs = fx;
          gate_ref = (params.beta / tau) * norm;  // gate f < beta * ||x - x̄||
          break;
      }
      if (!(gate_lhs < tau * gate_ref)) return;

      const double sd = subdiff_distance(*f, x);
      double lhs = 0.0;
      switch (params.variant) {
        case ConditionVariant::T31:
          lhs = sd;
          break;
        case ConditionVariant::T32:
          lhs = q * pow0(fx, q - 1.0) * sd;
          break;
        case ConditionVariant::T33:
        case ConditionVariant::P316:
          lhs = pow0(d, q - 1.0) * pow0(sd, q);
          break;
        case ConditionVariant::C314:
          lhs = kappa * pow0(d, q - 1.0) * pow0(sd, q);
          break;
        case ConditionVariant::T37:
          lhs = ((lambda > 0.0 ? lambda * pow0(d, 1.0 - 1.0 / q) : 0.0) +
                 q * (1.0 - lambda) * pow0(fx, q - 1.0)) *
                sd;
          break;
      }
      o.lhs = lhs;
      o.rhs = tau;
      o.state = lhs + kCheckSlack * (1.0 + std::abs(tau)) >= tau
                    ? PointState::Holds
                    : PointState::Violated;
    } catch (...) {
      o.state = PointState::Skipped;
    }
  });

  ConditionReport report = aggregate(ball.pts, outcome);
  report.box_limited = ball.box_limited;
  return report;
}

ConditionReport certify_error_bound(const HandlePtr& f, const Vec& xbar,
                                    double q, double tau, double delta,
                                    LiminfQuery plan, const ExecConfig& exec,
                                    const DistanceFn& distance) {
  plan.center = xbar;
  validate_plan(f, plan);
  if (!(q > 0.0)) throw Error(ErrorCode::Precondition, "q must be > 0");
  if (!(tau > 0.0)) throw Error(ErrorCode::Precondition, "tau must be > 0");
  if (!(delta > 0.0)) throw Error(ErrorCode::Precondition, "delta must be > 0");
  require_center_in_set(*f, xbar, plan.positivity_floor);

  DistanceBackend dist(f, xbar, plan.box_radius, distance);
  BallSamples ball = sample_ball(*f, plan, delta);
  const int m = static_cast<int>(ball.pts.size());
  std::vector<PointOutcome> outcome(static_cast<size_t>(m));

  for_each_index(m, exec, [&](int i) {
    const auto idx = static_cast<size_t>(i);
    PointOutcome& o = outcome[idx];
    try {
      const Vec& x = ball.pts[idx];
      const double fx = safe_eval(*f, x);
      if (!(fx > plan.positivity_floor) || !(fx < kInf)) return;  // f_+ = 0: trivial
      o.fx = fx;
      o.lhs = tau * dist(x);
      o.rhs = pow0(fx, q);
      o.state = o.lhs <= o.rhs + kCheckSlack * (1.0 + std::abs(o.rhs))
                    ? PointState::Holds
                    : PointState::Violated;
    } catch (...) {
      o.state = PointState::Skipped;
    }
  });

  ConditionReport report = aggregate(ball.pts, outcome);
  report.box_limited = ball.box_limited;
  return report;
}

// ===== scalar companions ====================================================

AlphaFactor alpha_factor_argmax(double q) {
  if (!(q > 0.0) || !(q <= 1.0))
    throw Error(ErrorCode::Precondition, "alpha factor needs q in (0, 1]");
  AlphaFactor out;
  out.alpha_star = q;
  out.value = pow0(q, q) * pow0(1.0 - q, 1.0 - q);

  // Sanity sweep on the 1e-6 grid: the map alpha -> alpha^q (1-alpha)^{1-q}
  // is strictly increasing below q and strictly decreasing above, so the grid
  // argmax must land within one step of q and the grid max just below the
  // closed form (the margin widens as q -> 1 where the peak sharpens).
  const double step = 1e-6;
  double best = -kInf, best_alpha = 0.0;
  for (int i = 1; i < 1000000; ++i) {
    const double a = i * step;
    const double v = pow0(a, q) * pow0(1.0 - a, 1.0 - q);
    if (v > best) {
      best = v;
      best_alpha = a;
    }
  }
  const double value_tol =
      4.0 * 2.5e-13 / (q * std::max(1.0 - q, 2.5e-7)) + 1e-12;
  if (best > out.value + 1e-12 || out.value - best > value_tol ||
      std::abs(best_alpha - q) > 1.5 * step)
    throw Error(ErrorCode::Internal, "alpha-factor sweep disagrees with the closed form");
  return out;
}

double solve_tau_alpha(double q, double lambda, double alpha, double tau) {
  if (!(q > 0.0) || !(q <= 1.0))
    throw Error(ErrorCode::Precondition, "solve_tau_alpha needs q in (0, 1]");
  if (!(lambda >= 0.0) || !(lambda <= 1.0))
    throw Error(ErrorCode::Precondition, "lambda must lie in [0, 1]");
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw Error(ErrorCode::Precondition, "alpha must lie in (0, 1)");
  if (!(tau > 0.0)) throw Error(ErrorCode::Precondition, "tau must be > 0");

  // lambda = 0 or q = 1 collapse the left side to the identity map.
  if (lambda == 0.0 || q == 1.0) return alpha * tau;

  const double target = alpha * tau;
  const double scale = pow0(1.0 - alpha, 1.0 - 1.0 / q);
  auto phi = [&](double t) {
    return lambda * std::pow(t, 1.0 / q) * scale + (1.0 - lambda) * t;
  };
  double lo = 0.0;
  double hi = std::max(target, 1.0);
  for (int i = 0; i < 200 && phi(hi) < target; ++i) hi *= 2.0;
  for (int i = 0; i < 300 && hi - lo > 1e-18 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

OrderingReport check_ordering_inequality(const HandlePtr& f, const Vec& xbar,
                                         double q, const LiminfQuery& query,
                                         const ExecConfig& exec,
                                         const DistanceFn& distance) {
  OrderingReport report;
  report.er_under = estimate_er_under(f, xbar, q, query, exec);
  report.er_under_prime =
      estimate_er_under_prime(f, xbar, q, query, exec, distance);
  report.lhs = pow0(1.0 - q, 1.0 - q) * report.er_under.value;
  report.rhs = report.er_under_prime.value;
  report.tolerance = 2.0 * std::max(report.er_under.trace.tail_spread(),
                                    report.er_under_prime.trace.tail_spread()) +
                     1e-9;
  report.holds = report.lhs <= report.rhs + report.tolerance;
  return report;
}

POrderView p_order_view(double p, double tau) {
  if (!(p >= 0.0)) throw Error(ErrorCode::Precondition, "p must be >= 0");
  if (!(tau > 0.0)) throw Error(ErrorCode::Precondition, "tau must be > 0");
  POrderView out;
  out.q = 1.0 / (p + 1.0);
  out.tau_eq = std::pow(tau, out.q);
  return out;
}

}  // namespace hb
