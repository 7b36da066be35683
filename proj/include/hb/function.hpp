#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hb/types.hpp"

namespace hb {

// ===== closed-form smooth pieces ============================================

/// One monomial-style term c * prod_i x_i^{e_i}.  Real exponents are allowed
/// on a coordinate only where that coordinate stays >= 0 (e.g. sqrt terms);
/// integer exponents work on the whole axis.
struct Term {
  double coeff = 0.0;
  Vec exponents;  // one entry per variable

  double eval(const Vec& x) const;
  void add_gradient(const Vec& x, double scale, Vec& grad) const;
};

/// Smooth convex-or-not building block with closed-form value and gradient.
struct SmoothPiece {
  std::vector<Term> terms;
  double constant = 0.0;
  bool convex = false;

  double eval(const Vec& x) const;
  Vec gradient(const Vec& x) const;

  bool is_affine() const;
  /// For affine pieces: returns (a, beta) with p(x) = <a,x> + beta.
  std::pair<Vec, double> affine_parts(int dim) const;

  SmoothPiece plus_affine(const Vec& a, double beta) const;
  SmoothPiece negated() const;

  static SmoothPiece constant_piece(int dim, double value, bool convex = true);
  static SmoothPiece affine(const Vec& a, double beta);
  /// c * (x_var)^expo as a univariate power term in an n-dim space.
  static SmoothPiece power1d(int dim, int var, double coeff, double expo,
                             bool convex);
};

// ===== scalar chain maps ====================================================

/// Nondecreasing scalar reparameterization psi with its derivative; the chain
/// rule for subdifferentials applies where psi'(f(x)) > 0.
struct ChainMap {
  std::function<double(double)> psi;
  std::function<double(double)> psi_prime;
  double monotone_from = -kInf;
  std::string name;

  static ChainMap power(double q);  // t -> t^q on t >= 0
  static ChainMap scale(double c);  // t -> c*t
};

// ===== finitely generated convex sets =======================================

/// conv(generators) + cone(rays); the library's universal representation for
/// subdifferentials.  An empty set is distinguished from failure.
struct FinGenConvexSet {
  bool is_empty = true;
  int dim = 0;
  std::vector<Vec> generators;
  std::vector<Vec> rays;

  static FinGenConvexSet empty(int dim);
  static FinGenConvexSet singleton(const Vec& p);
  static FinGenConvexSet interval(double lo, double hi);  // 1-D, bounds may be +-inf

  FinGenConvexSet scaled(double c) const;       // c > 0
  FinGenConvexSet translated(const Vec& v) const;
  /// Membership decided by an internal linear feasibility solve.
  bool contains(const Vec& p, double tol = 1e-9) const;
};

FinGenConvexSet hull_union(const std::vector<FinGenConvexSet>& sets);

// ===== function handles =====================================================

struct FunctionHandle;
using HandlePtr = std::shared_ptr<const FunctionHandle>;

struct SmoothForm {
  SmoothPiece piece;
};

struct MaxForm {
  std::vector<SmoothPiece> pieces;
};

/// 1-D piecewise form: pieces.size() == breakpoints.size() + 1, piece i
/// covering (bp[i-1], bp[i]] (first piece (-inf, bp[0]], last (bp.back(), inf)).
/// Evaluation at a breakpoint is the lsc closure (min of the one-sided limits
/// and the assigned value).
struct Piecewise1DForm {
  std::vector<double> breakpoints;
  std::vector<SmoothPiece> pieces;
};

struct PowerForm {
  HandlePtr inner;
  double exponent = 1.0;  // > 0
};

struct PlusForm {
  HandlePtr inner;
};

struct FunctionHandle {
  std::variant<SmoothForm, MaxForm, Piecewise1DForm, PowerForm, PlusForm> form;
  int dim = 1;
  std::string name;

  static FunctionHandle smooth(SmoothPiece p, int dim, std::string name = "");
  static FunctionHandle max_family(std::vector<SmoothPiece> pieces, int dim,
                                   std::string name = "");
  static FunctionHandle piecewise1d(std::vector<double> breakpoints,
                                    std::vector<SmoothPiece> pieces,
                                    std::string name = "");
  static FunctionHandle power_wrap(FunctionHandle inner, double exponent);
  static FunctionHandle plus_part(FunctionHandle inner);

  bool all_pieces_convex() const;
};

// ===== operations ===========================================================

double eval(const FunctionHandle& f, const Vec& x);

/// Exact subdifferential at x.  Smooth: gradient singleton.  MaxFamily: hull
/// of the gradients of the pieces active within eps_act (relative to the max
/// value).  Piecewise1D: one-sided-derivative interval at breakpoints (may be
/// a half-line, all of R, or empty).  PowerWrap/PlusPart: chain rules.
FinGenConvexSet subdifferential(const FunctionHandle& f, const Vec& x,
                                double eps_act = 1e-9);

/// psi'(f(x)) * subdifferential(f, x); throws NonpositiveDerivative when
/// psi'(f(x)) <= 0 and Precondition when f(x) < psi's monotone threshold.
FinGenConvexSet chain_subdifferential(const FunctionHandle& f,
                                      const ChainMap& psi, const Vec& x,
                                      double eps_act = 1e-9);

/// Indices of MaxForm pieces active within eps_act (relative tolerance).
std::vector<int> active_pieces(const MaxForm& mf, const Vec& x,
                               double eps_act = 1e-9);

}  // namespace hb
