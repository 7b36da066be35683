#pragma once

// ===== calmness of solution mappings =========================================
//
// Hölder (q-order) calmness analysis for the three solution mappings of a
// convex program P(c, b):
//
//   FullS        (c, b) -> argmin set S(c, b)
//   PartialS_c   b -> S(c̄, b), the linear term held at the base value
//   LevelL       (alpha, b) -> {x : f(x) + <c̄,x> <= alpha, g_t(x) <= b_t}
//
// The calmness modulus is estimated by sampling perturbation shells in the
// parameter norm max(‖Δc‖₂, ‖Δb‖∞), solving each perturbed instance, and
// recording the per-shell minimum of norm^q / d(x, S(c̄,b̄)) over admitted
// solution points.  Points with d = 0 satisfy the calmness inequality
// trivially and are excluded; if nothing is ever admitted the report says so
// (VACUOUS) rather than inventing a verdict.
//
// Alongside the sampled estimates, the module builds the two explicit
// adversarial right-hand-side constructions that drive the theory:
//
//   build_perturbation_P32   a multiplier-weighted ramp that keeps a probe
//                            point feasible, keeps the certificate's support
//                            indices active, and moves the right-hand side by
//                            at most (N+1) times the sup-function value;
//   build_perturbation_T602  the subset-pinned variant whose right-hand-side
//                            displacement is at most (1 + 1/r) f_D, giving
//                            the computable upper bound on the calmness
//                            modulus of the partial mapping.
//
// All sampling follows the deterministic substream discipline of the moduli
// module: every perturbation draws from its own counter-based stream keyed by
// (seed, shell, probe), solver fan-out runs in parallel, and reductions walk
// slots in index order, so results are bit-identical for any worker count.

#include <optional>
#include <utility>
#include <vector>

#include "hb/moduli.hpp"
#include "hb/parallel.hpp"
#include "hb/sip.hpp"
#include "hb/types.hpp"

namespace hb {

// ===== sampled calmness estimates ===========================================

enum class MapKind { FullS, PartialS_c, LevelL };

/// Verdict of the sampled tail against the decision threshold theta:
/// every tail-shell minimum >= theta -> Calm, every one < theta -> NotCalm,
/// a mix -> Inconclusive (reported, never silently resolved), no admitted
/// sample anywhere in the tail -> Vacuous.
enum class CalmVerdict { Calm, NotCalm, Inconclusive, Vacuous };

/// One sampled parameter point.  `c` and `b` are the perturbed values, not
/// offsets; for LevelL, `b` carries the constraint right-hand sides followed
/// by the level alpha as its last entry.  `norm` is the parameter distance
/// max(‖c − c̄‖₂, ‖b − b̄‖∞) to the stored base program.
struct Perturbation {
  Vec c;
  Vec b;
  double norm = 0.0;
};

/// Per-shell adversarial record: the admitted solution point achieving the
/// shell's minimal ratio.  `recertified` confirms the point was re-checked
/// against its perturbed instance (feasibility and optimal value for the
/// argmin mappings, membership for the level-set mapping).
struct AdversarialPath {
  Perturbation perturbation;
  Vec x;
  double ratio = kInf;
  bool recertified = false;
};

struct CalmnessReport {
  MapKind kind = MapKind::FullS;
  double q = 1.0;
  double theta = 1e-3;  // calm-vs-not decision threshold on the tail
  CalmVerdict verdict = CalmVerdict::Vacuous;
  ModulusEstimate estimate;  // kind = Clm; trace rows use fx = parameter norm
  std::vector<AdversarialPath> adversarial_paths;  // one per nonempty shell
  long solver_failures = 0;    // per-sample solver errors (dropped, counted)
  long infeasible_samples = 0; // perturbed instances with empty feasible set
  long admitted = 0;
};

/// Estimate the q-order calmness modulus of the chosen mapping at the base
/// parameter of P, centered at the optimal point xbar.  The query's fields
/// are reinterpreted for parameter shells: r0/gamma/shells give the shell
/// schedule of perturbation norms, samples_per_shell counts the random draws
/// added on top of the deterministic axis/corner probes (0 -> 16),
/// positivity_floor is the admission floor on d(x, S(c̄,b̄)), box_radius
/// bounds ‖x − xbar‖ for admitted points, and tail/seed keep their meaning.
/// Throws CenterNotOptimal when xbar is not optimal for the base program.
CalmnessReport estimate_clm(const SIProgram& P, const Vec& xbar, double q,
                            MapKind kind, const LiminfQuery& query,
                            const ExecConfig& exec = {}, double theta = 1e-3);

// ===== explicit adversarial right-hand sides ================================

/// Result of the multiplier-weighted ramp construction at a probe point x_r.
/// The three diagnostics restate the construction's guarantees so callers can
/// assert them: feasibility_margin = min_t (b_r[t] − g_t(x_r)) (>= 0 up to
/// roundoff), containment_gap = max over the certificate support of
/// |b_r[t] − g_t(x_r)| (exactly 0: those entries are copied, not computed),
/// and bound_gap = max_t |b_r[t] − b̄_t| − (N+1)·f̄(x_r) (<= 0 up to roundoff).
struct PerturbationP32 {
  Vec b_r;
  double N = 1.0;
  double fbar = 0.0;       // sup-function value at the probe point
  std::vector<int> T0;     // support indices of the certificate at the optimum
  double feasibility_margin = 0.0;
  double containment_gap = 0.0;
  double bound_gap = 0.0;
};

/// Build the right-hand side b_r for a probe point x_r with f̄(x_r) > 0.
/// The weight is the exact indicator ramp on the finite index grid: 0 where
/// g_t(x_r) − b̄_t >= −N·f̄(x_r), 1 where <= −(N+1)·f̄(x_r), linear in the
/// constraint value between; entries with weight 0 copy g_t(x_r) exactly.
/// N is derived from the optimum's KKT multipliers: with the support split
/// by the sign of g_t(x_r) − b̄_t, N = max over the negative side of
/// (1 + sum of positive-side gammas) / gamma_t (1 when that side is empty).
/// Throws NoCertificate when the base optimum has no KKT certificate, and
/// Precondition when f̄(x_r) <= 0.
PerturbationP32 build_perturbation_P32(const SIProgram& P, const Vec& x_r);

/// Result of the subset-pinned ramp at x_r: same diagnostics as above with
/// the containment taken over D, plus norm_gap = ‖b_r − b̄‖∞ − (1+1/r)·f_D(x_r)
/// (<= 0 up to roundoff).
struct PerturbationT602 {
  Vec b_r;
  double f_D = 0.0;
  double feasibility_margin = 0.0;
  double containment_gap = 0.0;
  double norm_gap = 0.0;
};

/// Build the right-hand side pinned on the index subset D (weight 0 there,
/// weight 1 where g_t(x_r) − b̄_t <= −(1 + 1/r)·f_D(x_r), value-linear ramp
/// between).  Requires f_D(x_r) > 0, r >= 1, and D a verified absorbing
/// subset at the base optimum.  Throws DisjointnessViolation if an entry of
/// D numerically lands in the weight-1 region — the two regions are provably
/// disjoint, so this only signals a contradiction in the inputs.
PerturbationT602 build_perturbation_T602(const SIProgram& P, const Vec& x_r,
                                         const std::vector<int>& D, int r);

// ===== calmness upper bound =================================================

struct UpperBoundT602 {
  double bound = kInf;
  std::vector<int> witness_D;  // subset attaining the minimum
  std::vector<std::pair<std::vector<int>, ModulusEstimate>> per_subset;
};

/// For each absorbing subset D at the optimum, run the shell liminf of
/// f_D(x)^{q−1} · d(0, ∂f_D(x)) over x -> xbar with f_D(x) > 0 and return the
/// minimum over subsets — an upper bound for the calmness modulus of the
/// partial mapping.  Requires the solver to verify S(c̄,b̄) = {xbar} and the
/// strict-feasibility condition; enumeration budget errors propagate.
UpperBoundT602 upper_bound_T602(const SIProgram& P, const Vec& xbar, double q,
                                const LiminfQuery& query,
                                const ExecConfig& exec = {});

// ===== equivalence chain ====================================================

/// Sampled verdicts for the four statements tied to the base program:
///   (iv)  q-order error bound of the sup function at xbar,
///   (iii) calmness of the level-set mapping,
///   (i)   calmness of the full argmin mapping,
///   (ii)  calmness of the partial mapping.
/// The observed verdicts must satisfy (iii) == (iv), (iv) => (i), and
/// (i) => (ii); affine programs must additionally agree on all four.
/// Vacuous verdicts count as trivially calm; any Inconclusive verdict sets
/// `inconclusive` and excuses the affected implications.
struct EquivalenceChainReport {
  double q = 1.0;
  ModulusEstimate er_fbar;  // statement (iv)
  CalmnessReport level;     // statement (iii)
  CalmnessReport full;      // statement (i)
  CalmnessReport partial;   // statement (ii)
  CalmVerdict v_iv = CalmVerdict::Vacuous;
  CalmVerdict v_iii = CalmVerdict::Vacuous;
  CalmVerdict v_i = CalmVerdict::Vacuous;
  CalmVerdict v_ii = CalmVerdict::Vacuous;
  bool inconclusive = false;
  bool implications_hold = true;
  bool linear_case = false;
  bool linear_agreement = true;
};

EquivalenceChainReport check_equivalence_chain(const SIProgram& P,
                                               const Vec& xbar, double q,
                                               const LiminfQuery& query,
                                               const ExecConfig& exec = {},
                                               double theta = 1e-3);

// ===== single-valuedness probe ==============================================

/// Under the exhaustive nondegeneracy condition the full and partial moduli
/// coincide; this probe estimates both and compares them within the combined
/// trace tolerance (sum of tail spreads + 1e-4).  When the condition fails
/// the probe is skipped and says so.
struct EncEqualityProbe {
  bool skipped_no_enc = false;
  EncReport enc;
  CalmnessReport full;
  CalmnessReport partial;
  double difference = 0.0;
  double tolerance = 0.0;
  bool agree = false;
};

EncEqualityProbe clm_enc_equality_probe(const SIProgram& P, const Vec& xbar,
                                        double q, const LiminfQuery& query,
                                        const ExecConfig& exec = {},
                                        double theta = 1e-3);

}  // namespace hb
