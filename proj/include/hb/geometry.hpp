#pragma once

// ===== distances =============================================================
//
// Two geometric kernels sit under every estimator in the library:
//
//  * min_norm_point: distance from the origin to a finitely generated convex
//    set (conv(generators) + cone(rays)), via an active-set algorithm with a
//    verifiable optimality certificate.  This is how d(0, subdifferential)
//    and distances to polyhedral solution sets are computed.
//
//  * SublevelDistance: distance from a query point to a sublevel set
//    [f <= level].  In one dimension the set is profiled exactly as a union
//    of closed intervals (cached per handle).  In higher dimensions a
//    certified projected-descent scheme brackets the distance between a
//    witness upper bound and a cutting-plane lower bound.
//
// A brute-force grid oracle (dimensions <= 3) is provided for cross-checks.

#include <memory>
#include <utility>
#include <vector>

#include "hb/function.hpp"
#include "hb/types.hpp"

namespace hb {

struct MinNormResult {
  double norm = kInf;  // +inf for the empty set (inf over the empty set)
  Vec point;           // attaining point (when the set is nonempty)
  double gap = 0.0;    // worst certificate violation at exit
  bool certified = false;
};

/// Nearest point to the origin in conv(generators) + cone(rays).
MinNormResult min_norm_point(const FinGenConvexSet& S, double tol = 1e-9);

enum class DistStatus {
  Exact,          // 1-D profile hit; true distance up to bisection precision
  Certified,      // upper and lower bounds agree within tolerance
  Oracle,         // brute-force grid value
  EmptyOnBox,     // no sublevel point detected within the working box
  NoConvergence,  // `distance` is a valid upper bound; gap not closed
};

struct DistResult {
  double distance = kInf;    // best upper bound (exact when status says so)
  double lower_bound = 0.0;  // certified lower bound on the true distance
  Vec witness;               // sublevel point realizing `distance`
  DistStatus status = DistStatus::NoConvergence;
};

/// Distance oracle for [f <= level], tied to one function handle.
class SublevelDistance {
 public:
  /// `box_center`/`box_radius` bound the search region (queries are expected
  /// well inside).  `inside_hint`: a known point with f(hint) <= level; it
  /// anchors the certified descent in dimension >= 2 and is optional.
  SublevelDistance(HandlePtr f, double level, Vec box_center,
                   double box_radius = 8.0, Vec inside_hint = Vec());

  DistResult at(const Vec& x, double tol = 1e-9) const;

  /// 1-D only: the profiled sublevel intervals (for inspection/tests).
  const std::vector<std::pair<double, double>>& intervals() const;

 private:
  void build_profile() const;
  DistResult at_1d(double x) const;
  DistResult at_nd(const Vec& x, double tol) const;

  HandlePtr f_;
  double level_ = 0.0;
  Vec center_;
  double radius_ = 8.0;
  Vec hint_;
  mutable bool profile_built_ = false;
  mutable std::vector<std::pair<double, double>> intervals_;
};

/// Brute-force distance to [f <= level] over a uniform grid on [lo, hi].
/// Throws DimensionTooLarge above three dimensions.
DistResult sublevel_distance_grid(const FunctionHandle& f, const Vec& x,
                                  double level, const Vec& lo, const Vec& hi,
                                  int pts_per_dim);

}  // namespace hb
