#pragma once

// ===== error-bound moduli ====================================================
//
// Shell-sampled liminf estimation of the error-bound modulus and its two
// subdifferential lower estimates, plus pointwise verification of the
// sufficient conditions that relate them:
//
//   Er         f(x)^q / d(x, [f<=0])                  (the modulus itself)
//   ErUnder    q * d(0, df(x)) / f(x)^{1-q}           (value-filtered liminf)
//   ErUnderPrime
//              q^q (1-q)^{1-q} d(0, df(x))^q / d(x, [f<=0])^{1-q}
//
// A liminf is not computable from finitely many samples; the estimators
// report the minimum over the tail of a geometrically shrinking shell
// schedule together with the full per-shell trace, so the number is
// monotone-refinable and auditable rather than a black box.
//
// All sampling is deterministic: 1-D shells are symmetric grids, n-D shells
// draw each point from its own counter-based RNG substream keyed by
// (seed, shell, sample), and reductions run in index order — results are
// bit-identical for any worker count.

#include <cstdint>
#include <functional>
#include <vector>

#include "hb/function.hpp"
#include "hb/geometry.hpp"
#include "hb/parallel.hpp"
#include "hb/types.hpp"

namespace hb {

// ===== shell sampling plan ==================================================

/// Sampling plan shared by the liminf estimators and the condition checkers.
/// Shell k (k = 0..shells) is the annulus with radii (gamma*r_k, r_k],
/// r_k = r0 * gamma^k.
struct LiminfQuery {
  Vec center;              // the reference point x̄
  double r0 = 0.5;         // outermost shell radius
  double gamma = 0.5;      // geometric decay, in (0, 1)
  int shells = 20;         // last shell index; r_k strictly decreases to 0
  int samples_per_shell = 0;  // 0 -> 64 in 1-D (grid), 512 otherwise (random)
  double positivity_floor = 1e-14;  // admit x only when f(x) > floor
  /// Explicit value ceilings eta_k (size shells + 1) for the "f(x) -> 0+"
  /// filter; empty selects the adaptive rule: eta_0 = +inf, afterwards the
  /// largest admitted value of the most recent nonempty shell, falling back
  /// to sqrt(r_k) * (largest value seen so far) after an empty shell.
  std::vector<double> value_ceiling_schedule;
  std::uint64_t seed = 20240719;
  int tail = 5;            // liminf extraction = min over the last `tail` shells
  double box_radius = 8.0;  // search box half-width for distance backends
  /// In 2-D, append deterministically located piece-tie points on each shell
  /// (max-of-smooth functions only): the minimizing points of subdifferential
  /// distance sit on piece boundaries that random sampling almost surely
  /// misses.
  bool tie_enrichment = true;
  bool record_samples = true;  // keep per-sample rows in the trace
};

struct ShellRow {
  double radius = 0.0;       // r_k
  double inner = 0.0;        // gamma * r_k
  double min_value = kInf;   // +inf when no sample was admitted
  Vec argmin;                // empty when no sample was admitted
  int admitted = 0;
  double f_min = kInf;       // value range over admitted samples
  double f_max = -kInf;
  double ceiling = kInf;     // eta_k actually applied (+inf when filter off)
};

struct SampleRow {
  int shell = 0;
  Vec x;
  double fx = 0.0;
  double dist = 0.0;     // d(x, [f<=0]); NaN when the quantity does not use it
  double subdist = 0.0;  // d(0, df(x)); NaN when the quantity does not use it
  double ratio = kInf;
};

struct LiminfTrace {
  std::vector<ShellRow> shells;
  std::vector<SampleRow> samples;  // admitted samples in deterministic order
  int tail = 5;
  double extracted_value = kInf;  // min over tail shells with admitted samples

  /// Spread (max - min) of the finite tail shell minima; serves as the
  /// sampling tolerance when two estimates are compared.
  double tail_spread() const;
};

enum class ModulusKind { Er, ErUnder, ErUnderPrime, Clm };

struct ModulusEstimate {
  ModulusKind kind = ModulusKind::Er;
  double q = 1.0;
  double value = kInf;  // always equals trace.extracted_value
  LiminfTrace trace;
};

/// Optional exact-distance override d(x, [f<=0]) (e.g. projection onto a
/// polyhedral solution set); when absent the geometry backend is used.
using DistanceFn = std::function<double(const Vec&)>;

// ===== liminf engine ========================================================

/// Per-sample quantity evaluated by the shell engine.  `dist`/`subdist` are
/// only computed (and finite/NaN accordingly) when the flags request them.
struct ShellQuantity {
  bool needs_dist = false;
  bool needs_subdist = false;
  std::function<double(const Vec& x, double fx, double dist, double subdist)>
      ratio;
};

/// Run the shell schedule and collect the per-shell minima of `quantity`.
/// `value_filter` switches the ceiling schedule on (the "f(x) -> 0+" liminf).
/// Requires f(center) <= positivity_floor, else throws CenterNotInSet.
LiminfTrace run_liminf(const HandlePtr& f, const LiminfQuery& query,
                       const ShellQuantity& quantity, bool value_filter,
                       const ExecConfig& exec = {},
                       const DistanceFn& distance = {});

// ===== modulus estimators ===================================================

/// Modulus of a q-order error bound: liminf of f(x)^q / d(x, [f<=0]) over
/// x -> center with f(x) > 0.  q > 0.
ModulusEstimate estimate_er(const HandlePtr& f, const Vec& xbar, double q,
                            LiminfQuery query, const ExecConfig& exec = {},
                            const DistanceFn& distance = {});

/// Subdifferential lower estimate: q * liminf of d(0, df(x)) / f(x)^{1-q}
/// over x -> center with f(x) -> 0+.  q > 0 (values above 1 are meaningful
/// and exercised; the companion estimate below requires q <= 1).
ModulusEstimate estimate_er_under(const HandlePtr& f, const Vec& xbar,
                                  double q, LiminfQuery query,
                                  const ExecConfig& exec = {});

/// Distance-weighted lower estimate:
/// q^q (1-q)^{1-q} * liminf of d(0, df(x))^q / d(x, [f<=0])^{1-q}, q in (0,1],
/// with the 0^0 = 1 convention.
ModulusEstimate estimate_er_under_prime(const HandlePtr& f, const Vec& xbar,
                                        double q, LiminfQuery query,
                                        const ExecConfig& exec = {},
                                        const DistanceFn& distance = {});

// ===== sufficient-condition checks ==========================================

/// The family of pointwise sufficient conditions for a q-order error bound.
/// Each variant checks its subdifferential inequality at every sampled point
/// of B_delta(center) ∩ [f > 0] that passes the variant's gate:
///
///   T31   d(0,df(x)) >= tau                 gate  f(x) < tau*G
///   T32   q f^{q-1} d(0,df(x)) >= tau       gate  f^q   < tau*G      (q > 0)
///   T33   d^{q-1} d(0,df(x))^q >= tau       gate  f^q   < tau*G      (q <= 1)
///   C314  kappa d^{q-1} d(0,df(x))^q >= tau gate  kappa*f^q < tau*||x-x̄||
///   T37   (lambda d^{1-1/q} + q(1-lambda) f^{q-1}) d(0,df(x)) >= tau
///         gate  lambda f d^{1-1/q} + (1-lambda) f^q < tau*G
///   P316  d^{q-1} d(0,df(x))^q >= tau       gate  f < beta*||x-x̄||
///
/// where d = d(x,[f<=0]), kappa = q^q(1-q)^{1-q}, and G is the gate reference:
/// d(x,[f<=0]) for GateMode::Distance, ||x - x̄|| for GateMode::Simplified.
/// C314's published form uses the norm gate; its Distance mode is an
/// extrapolation kept for symmetry.  P316 always gates on the norm with the
/// separate slope beta.
enum class ConditionVariant { T31, T32, T33, C314, T37, P316 };

enum class GateMode { Distance, Simplified };

struct ConditionParams {
  ConditionVariant variant = ConditionVariant::T31;
  double q = 1.0;
  double tau = 1.0;
  double delta = kInf;  // ball radius; +inf probes the sampling box only
  GateMode gate_mode = GateMode::Distance;
  double lambda = 0.0;    // T37 mixing weight, in [0, 1]
  double beta = 0.0;      // P316 gate slope, > 0
  double value_cap = kInf;  // optional extra gate f(x) < value_cap
};

struct PointCheck {
  Vec x;
  double fx = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct ConditionReport {
  bool holds_on_samples = true;  // up to a 1e-9 relative slack
  bool vacuous = false;          // no sample passed the gate
  bool box_limited = false;      // delta = +inf truncated to the sampling box
  long sample_count = 0;         // sampled points with f > positivity floor
  long gated_count = 0;
  long violation_count = 0;
  std::vector<PointCheck> violating_points;  // first few, deterministic order
};

/// Check `params.variant` on samples of B_delta(xbar) ∩ [f > 0] drawn from
/// `plan` (its r0 is replaced by delta, or by plan.box_radius when
/// delta = +inf).  Vacuously true (and flagged) when nothing passes the gate.
ConditionReport check_condition(const HandlePtr& f, const Vec& xbar,
                                const ConditionParams& params, LiminfQuery plan,
                                const ExecConfig& exec = {},
                                const DistanceFn& distance = {});

/// Directly verify the error bound tau * d(x,[f<=0]) <= [f(x)]_+^q on samples
/// of B_delta(xbar); lists the violations.  Used to confirm the conclusions
/// the sufficient conditions promise, including their alpha-shrunk balls.
ConditionReport certify_error_bound(const HandlePtr& f, const Vec& xbar,
                                    double q, double tau, double delta,
                                    LiminfQuery plan,
                                    const ExecConfig& exec = {},
                                    const DistanceFn& distance = {});

// ===== scalar companions ====================================================

struct AlphaFactor {
  double alpha_star = 0.0;
  double value = 0.0;
};

/// Maximum of alpha^q (1-alpha)^{1-q} over alpha in (0,1): attained at
/// alpha = q with value q^q(1-q)^{1-q} (0^0 = 1).  The closed form is
/// verified internally against a 1e-6 grid sweep on every call.
AlphaFactor alpha_factor_argmax(double q);

/// Unique root t of  lambda t^{1/q} / (1-alpha)^{1/q-1} + (1-lambda) t
///                   = alpha * tau
/// (the map is continuous and strictly increasing on [0, inf)), found by
/// monotone bisection to residual <= 1e-12.
double solve_tau_alpha(double q, double lambda, double alpha, double tau);

struct OrderingReport {
  ModulusEstimate er_under;
  ModulusEstimate er_under_prime;
  double lhs = 0.0;        // (1-q)^{1-q} * ErUnder estimate
  double rhs = 0.0;        // ErUnderPrime estimate
  double tolerance = 0.0;  // 2 x the larger tail spread (+ epsilon)
  bool holds = true;
};

/// Estimate both lower estimates with the same plan and test the ordering
/// (1-q)^{1-q} * ErUnder <= ErUnderPrime up to the sampling tolerance.
OrderingReport check_ordering_inequality(const HandlePtr& f, const Vec& xbar,
                                         double q, const LiminfQuery& query,
                                         const ExecConfig& exec = {},
                                         const DistanceFn& distance = {});

struct POrderView {
  double q = 1.0;
  double tau_eq = 0.0;
};

/// Re-parameterize a (p+1)-order bound tau * d <= f_+ as the q-order bound
/// tau_eq * d <= f_+^q via q = 1/(p+1), tau_eq = tau^{1/(p+1)}.
POrderView p_order_view(double p, double tau);

}  // namespace hb
