#pragma once

// ===== discretized convex semi-infinite programs ============================
//
// Problem model:  minimize f(x) + <c,x>  subject to  g_t(x) <= b_t  over a
// finite index grid standing for a discretized compact index set.  On top of
// the model sit the canonical objects of its perturbation analysis:
//
//   * the supremum function max{ f + <c,.> - opt value ; g_t - b_t } whose
//     zero set is exactly the argmin set,
//   * KKT multiplier certificates, decided by a phase-1 feasibility solve
//     over -(subdiff f(x) + c) and the conic hull of active constraint
//     gradients, returned Caratheodory-reduced (support size <= n),
//   * the uniqueness check that no active index subset of size < n already
//     absorbs -(subdiff f(x) + c) (which forces the argmin mapping to be
//     locally single-valued and Lipschitz),
//   * the family of absorbing index subsets of size <= n and their two-sided
//     supremum functions f_D (constraints in D penalized in both directions),
//   * internal solvers: dense simplex when everything is affine, penalty
//     subgradient descent with Newton polish and KKT certification otherwise.
//
// The grid is finite by design: every check here is decidable, and the
// continuity hypotheses of the underlying theory reduce to exact per-index
// assignments.  Reports built on these results carry a DISCRETIZED banner;
// no claim is made about the continuum problem.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hb/function.hpp"
#include "hb/parallel.hpp"
#include "hb/types.hpp"

namespace hb {

// ===== problem data =========================================================

/// Finite stand-in for a compact index set in a metric space.  Index
/// coordinates live in their own space (unrelated to the decision dimension);
/// the metric between indices is Euclidean on the stored coordinates.
struct IndexGrid {
  std::vector<Vec> points;  // pairwise distinct
  std::string provenance;   // which compact set this grid discretizes

  int size() const { return static_cast<int>(points.size()); }
  double distance(int i, int j) const;
};

struct SIProgram {
  int n = 1;              // decision dimension
  HandlePtr objective_f;  // convex
  Vec c;
  IndexGrid grid;
  std::vector<SmoothPiece> constraints;  // g_t per grid index, convex in x
  Vec b;                                 // one level per grid index

  /// Throws Precondition on size/dimension mismatches, non-convex pieces, or
  /// duplicate grid points.
  void validate() const;
  /// Objective and every constraint affine: the simplex path applies.
  bool is_affine() const;
};

/// Parameter-space norm max{ ||dc||_2, ||db||_inf }.
double param_norm(const Vec& dc, const Vec& db);

// ===== certificates =========================================================

struct KKTSupport {
  int t = -1;          // grid index
  double gamma = 0.0;  // > 0
  Vec u_t;             // gradient of g_t at the certified point
};

/// Witness of -(c + u) lying in the conic hull of active constraint
/// gradients, with u in the objective subdifferential.
struct KKTCertificate {
  Vec u;
  std::vector<KKTSupport> support;  // size <= n (Caratheodory-reduced)
  double residual = kInf;           // || c + u + sum gamma_t u_t ||

  double gamma_sum() const;
};

struct KKTSubsetEntry {
  std::vector<int> indices;  // D, ascending
  KKTCertificate certificate;
};

struct KKTSubsetFamily {
  std::vector<KKTSubsetEntry> subsets;  // lexicographic, sizes ascending

  bool contains(const std::vector<int>& D) const;
};

struct EncReport {
  bool slater = false;
  bool enc_holds = false;
  /// When enc_holds is false under Slater: the first (lexicographically
  /// smallest) absorbing subset of size < n.
  std::optional<std::vector<int>> violating_D;
  long long subsets_tested = 0;
};

// ===== solution sets ========================================================

struct InfeasibilityWitness {
  Vec x;                   // least-violation point found
  double violation = 0.0;  // min over x of max_t (g_t(x) - b_t), positive
};

struct SolutionSet {
  bool feasible = true;
  /// Affine path: distinct vertices spanning the optimal face (a single point
  /// unless vertex enumeration was requested).  Convex path: one certified
  /// minimizer.
  std::vector<Vec> points;
  std::vector<Vec> rays;  // recession directions of the optimal face
  double objective = kInf;
  std::optional<KKTCertificate> certificate;  // present whenever Slater holds
  std::optional<InfeasibilityWitness> infeasibility;

  const Vec& point() const;  // first point; throws EmptySet when infeasible
};

// ===== operations ===========================================================

bool feasible(const SIProgram& P, const Vec& x, double tol = 1e-9);

/// { t : b_t - g_t(x) <= eps_act }, absolute tolerance.
std::vector<int> active_indices(const SIProgram& P, const Vec& x,
                                double eps_act = 1e-9);

/// Maximizes the uniform margin s over g_t(x) + s <= b_t; a point is returned
/// iff the optimal margin exceeds 1e-9.
std::optional<Vec> slater_point(const SIProgram& P);

/// max{ f + <c,.> - (f(xbar) + <c,xbar>) ; g_t - b_t }.  Requires xbar to
/// solve the program (KKT-checked under Slater, objective-value agreement
/// with solve() otherwise); throws CenterNotOptimal.  The objective must fold
/// into max-of-smooth form (smooth or max-family).
HandlePtr sup_function(const SIProgram& P, const Vec& xbar);

/// Subdifferential of sup_function(P, xbar) at x: hull of the gradients of
/// the pieces active within eps_act; the objective piece contributes
/// subdiff f(x) + c.
FinGenConvexSet sup_subdifferential(const SIProgram& P, const Vec& xbar,
                                    const Vec& x, double eps_act = 1e-9);

/// Decides -(subdiff f(x) + c) meeting cone{ grad g_t(x) : t active } by a
/// phase-1 feasibility solve; returns a Caratheodory-reduced certificate on
/// success, nullopt otherwise.  Throws NoSlater when the program has no
/// strictly feasible point (the KKT characterization needs one).
std::optional<KKTCertificate> kkt_check(const SIProgram& P, const Vec& x,
                                        double eps_act = 1e-9);

/// Slater holds and no active subset D with |D| < n absorbs -(subdiff f + c).
/// Throws ActiveSetTooLarge when the subset count exceeds the budget.
EncReport enc_check(const SIProgram& P, const Vec& xbar,
                    long long budget = 1000000);

/// All D inside the active set at xbar with |D| <= n whose constraint
/// gradient cone absorbs -(u + c) for some u in subdiff f(xbar).
KKTSubsetFamily kkt_subsets(const SIProgram& P, const Vec& xbar,
                            long long budget = 1000000);

/// max{ g_t - b_t, t in T ; b_t - g_t, t in D }: the two-sided supremum
/// function of the subset D.  D must belong to the absorbing family
/// (membership re-verified; throws Precondition).
HandlePtr f_D(const SIProgram& P, const Vec& xbar, const std::vector<int>& D);

/// Affine case: primal simplex (Bland), optionally enumerating the optimal
/// face's vertices (<= basis_budget bases).  Convex case: penalty subgradient
/// descent, Newton polish on the active set, then kkt_check at tolerance
/// 1e-6 (throws NoCertificate when certification fails).  Infeasible
/// programs return feasible == false with a least-violation witness;
/// unbounded programs throw SolverFailure.
SolutionSet solve(const SIProgram& P, bool enumerate_vertices = false,
                  int basis_budget = 10000);

// ===== multiplier boundedness probe =========================================

struct NeighborhoodSpec {
  double radius_c = 0.1;
  double radius_b = 0.1;
};

struct MultiplierProbe {
  double max_gamma_sum = 0.0;
  int samples_used = 0;
  int solver_failures = 0;
};

/// Samples (c,b) in the given radii around (c_bar, b_bar), solves each
/// perturbed program, and records the certificate multiplier sums; the max
/// is an empirical uniform multiplier bound.  Requires Slater.
MultiplierProbe multiplier_bound_probe(const SIProgram& P,
                                       const NeighborhoodSpec& spec,
                                       int sample_count, std::uint64_t seed,
                                       const ExecConfig& exec = {});

}  // namespace hb
