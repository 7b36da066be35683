#include "hb/function.hpp"

#include <algorithm>
#include <cmath>

#include "hb/linprog.hpp"

namespace hb {

namespace {

bool is_integer(double e) { return std::abs(e - std::round(e)) < 1e-12; }

// x^e with domain checking: non-integer exponents require x >= 0.
double checked_pow(double x, double e, const char* what) {
  if (e == 0.0) return 1.0;
  if (x < 0.0 && !is_integer(e)) {
    throw Error(ErrorCode::UndefinedAtPoint,
                std::string(what) + ": fractional power of a negative value");
  }
  return std::pow(x, e);
}

}  // namespace

// ===== Term / SmoothPiece ===================================================

double Term::eval(const Vec& x) const {
  double v = coeff;
  for (int i = 0; i < exponents.size() && v != 0.0; ++i) {
    if (exponents[i] == 0.0) continue;
    v *= checked_pow(x[i], exponents[i], "Term::eval");
  }
  return v;
}

void Term::add_gradient(const Vec& x, double scale, Vec& grad) const {
  for (int j = 0; j < exponents.size(); ++j) {
    const double ej = exponents[j];
    if (ej == 0.0) continue;
    double g = coeff * ej * checked_pow(x[j], ej - 1.0, "Term::gradient");
    for (int i = 0; i < exponents.size(); ++i) {
      if (i == j || exponents[i] == 0.0) continue;
      g *= checked_pow(x[i], exponents[i], "Term::gradient");
    }
    grad[j] += scale * g;
  }
}

double SmoothPiece::eval(const Vec& x) const {
  double v = constant;
  for (const Term& t : terms) v += t.eval(x);
  return v;
}

Vec SmoothPiece::gradient(const Vec& x) const {
  Vec g = Vec::Zero(x.size());
  for (const Term& t : terms) t.add_gradient(x, 1.0, g);
  return g;
}

bool SmoothPiece::is_affine() const {
  for (const Term& t : terms) {
    double total = 0.0;
    int nonzero = 0;
    for (int i = 0; i < t.exponents.size(); ++i) {
      if (t.exponents[i] != 0.0) {
        ++nonzero;
        if (!is_integer(t.exponents[i])) return false;
        total += t.exponents[i];
      }
    }
    if (nonzero > 1 || total > 1.0 + 1e-12) return false;
  }
  return true;
}

std::pair<Vec, double> SmoothPiece::affine_parts(int dim) const {
  Vec a = Vec::Zero(dim);
  double beta = constant;
  for (const Term& t : terms) {
    bool linear = false;
    for (int i = 0; i < t.exponents.size(); ++i) {
      if (std::abs(t.exponents[i] - 1.0) < 1e-12) {
        a[i] += t.coeff;
        linear = true;
        break;
      }
    }
    if (!linear) beta += t.coeff;  // constant term written as exponents == 0
  }
  return {a, beta};
}

SmoothPiece SmoothPiece::plus_affine(const Vec& a, double beta) const {
  SmoothPiece out = *this;
  out.constant += beta;
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    Term t;
    t.coeff = a[i];
    t.exponents = Vec::Zero(a.size());
    t.exponents[i] = 1.0;
    out.terms.push_back(t);
  }
  return out;
}

SmoothPiece SmoothPiece::negated() const {
  SmoothPiece out = *this;
  out.constant = -out.constant;
  for (Term& t : out.terms) t.coeff = -t.coeff;
  out.convex = out.terms.empty() || is_affine();
  return out;
}

SmoothPiece SmoothPiece::constant_piece(int dim, double value, bool conv) {
  SmoothPiece p;
  p.constant = value;
  p.convex = conv;
  (void)dim;
  return p;
}

SmoothPiece SmoothPiece::affine(const Vec& a, double beta) {
  SmoothPiece p;
  p.convex = true;
  p.constant = beta;
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    Term t;
    t.coeff = a[i];
    t.exponents = Vec::Zero(a.size());
    t.exponents[i] = 1.0;
    p.terms.push_back(t);
  }
  return p;
}

SmoothPiece SmoothPiece::power1d(int dim, int var, double coeff, double expo,
                                 bool conv) {
  SmoothPiece p;
  p.convex = conv;
  Term t;
  t.coeff = coeff;
  t.exponents = Vec::Zero(dim);
  t.exponents[var] = expo;
  p.terms.push_back(t);
  return p;
}

// ===== ChainMap =============================================================

ChainMap ChainMap::power(double q) {
  if (q <= 0.0) throw Error(ErrorCode::Precondition, "ChainMap::power: q <= 0");
  ChainMap m;
  m.psi = [q](double t) { return pow0(t, q); };
  m.psi_prime = [q](double t) { return q * pow0(t, q - 1.0); };
  m.monotone_from = 0.0;
  m.name = "power";
  return m;
}

ChainMap ChainMap::scale(double c) {
  ChainMap m;
  m.psi = [c](double t) { return c * t; };
  m.psi_prime = [c](double) { return c; };
  m.monotone_from = -kInf;
  m.name = "scale";
  return m;
}

// ===== FinGenConvexSet ======================================================

FinGenConvexSet FinGenConvexSet::empty(int dim) {
  FinGenConvexSet s;
  s.is_empty = true;
  s.dim = dim;
  return s;
}

FinGenConvexSet FinGenConvexSet::singleton(const Vec& p) {
  FinGenConvexSet s;
  s.is_empty = false;
  s.dim = static_cast<int>(p.size());
  s.generators.push_back(p);
  return s;
}

FinGenConvexSet FinGenConvexSet::interval(double lo, double hi) {
  FinGenConvexSet s;
  s.dim = 1;
  if (lo > hi) {
    s.is_empty = true;
    return s;
  }
  s.is_empty = false;
  if (std::isinf(lo) && std::isinf(hi)) {
    s.generators.push_back(vec1(0.0));
    s.rays.push_back(vec1(1.0));
    s.rays.push_back(vec1(-1.0));
  } else if (std::isinf(lo)) {
    s.generators.push_back(vec1(hi));
    s.rays.push_back(vec1(-1.0));
  } else if (std::isinf(hi)) {
    s.generators.push_back(vec1(lo));
    s.rays.push_back(vec1(1.0));
  } else {
    s.generators.push_back(vec1(lo));
    if (hi != lo) s.generators.push_back(vec1(hi));
  }
  return s;
}

FinGenConvexSet FinGenConvexSet::scaled(double c) const {
  if (c <= 0.0)
    throw Error(ErrorCode::Precondition, "FinGenConvexSet::scaled: c <= 0");
  FinGenConvexSet s = *this;
  for (Vec& g : s.generators) g *= c;
  // rays are scale-invariant as a cone, kept as-is
  return s;
}

FinGenConvexSet FinGenConvexSet::translated(const Vec& v) const {
  FinGenConvexSet s = *this;
  for (Vec& g : s.generators) g += v;
  return s;
}

bool FinGenConvexSet::contains(const Vec& p, double tol) const {
  if (is_empty) return false;
  const int n = dim;
  const int k = static_cast<int>(generators.size());
  const int m = static_cast<int>(rays.size());
  // Feasibility of sum(l_i g_i) + sum(u_j r_j) = p, sum l = 1, l,u >= 0.
  Mat A(n + 1, k + m);
  Vec b(n + 1);
  for (int i = 0; i < k; ++i) {
    A.block(0, i, n, 1) = generators[i];
    A(n, i) = 1.0;
  }
  for (int j = 0; j < m; ++j) {
    A.block(0, k + j, n, 1) = rays[j];
    A(n, k + j) = 0.0;
  }
  b.head(n) = p;
  b[n] = 1.0;
  return linear_feasible(A, b, tol * (1.0 + p.lpNorm<Eigen::Infinity>()),
                         nullptr);
}

FinGenConvexSet hull_union(const std::vector<FinGenConvexSet>& sets) {
  FinGenConvexSet out;
  bool any = false;
  for (const FinGenConvexSet& s : sets) {
    if (s.is_empty) continue;
    if (!any) {
      out.dim = s.dim;
      out.is_empty = false;
      any = true;
    }
    out.generators.insert(out.generators.end(), s.generators.begin(),
                          s.generators.end());
    out.rays.insert(out.rays.end(), s.rays.begin(), s.rays.end());
  }
  if (!any && !sets.empty()) return FinGenConvexSet::empty(sets.front().dim);
  return out;
}

// ===== FunctionHandle construction ==========================================

FunctionHandle FunctionHandle::smooth(SmoothPiece p, int dim,
                                      std::string name) {
  FunctionHandle f;
  f.form = SmoothForm{std::move(p)};
  f.dim = dim;
  f.name = std::move(name);
  return f;
}

FunctionHandle FunctionHandle::max_family(std::vector<SmoothPiece> pieces,
                                          int dim, std::string name) {
  if (pieces.empty())
    throw Error(ErrorCode::Precondition, "max_family: no pieces");
  FunctionHandle f;
  f.form = MaxForm{std::move(pieces)};
  f.dim = dim;
  f.name = std::move(name);
  return f;
}

FunctionHandle FunctionHandle::piecewise1d(std::vector<double> breakpoints,
                                           std::vector<SmoothPiece> pieces,
                                           std::string name) {
  if (pieces.size() != breakpoints.size() + 1)
    throw Error(ErrorCode::Parse,
                "piecewise1d: need breakpoints.size()+1 pieces");
  if (!std::is_sorted(breakpoints.begin(), breakpoints.end()))
    throw Error(ErrorCode::Parse, "piecewise1d: breakpoints must be sorted");
  FunctionHandle f;
  f.form = Piecewise1DForm{std::move(breakpoints), std::move(pieces)};
  f.dim = 1;
  f.name = std::move(name);
  return f;
}

FunctionHandle FunctionHandle::power_wrap(FunctionHandle inner,
                                          double exponent) {
  if (exponent <= 0.0)
    throw Error(ErrorCode::Precondition, "power_wrap: exponent <= 0");
  FunctionHandle f;
  f.dim = inner.dim;
  f.name = inner.name;
  f.form = PowerForm{std::make_shared<FunctionHandle>(std::move(inner)),
                     exponent};
  return f;
}

FunctionHandle FunctionHandle::plus_part(FunctionHandle inner) {
  FunctionHandle f;
  f.dim = inner.dim;
  f.name = inner.name;
  f.form = PlusForm{std::make_shared<FunctionHandle>(std::move(inner))};
  return f;
}

bool FunctionHandle::all_pieces_convex() const {
  if (const auto* s = std::get_if<SmoothForm>(&form)) return s->piece.convex;
  if (const auto* m = std::get_if<MaxForm>(&form)) {
    for (const SmoothPiece& p : m->pieces)
      if (!p.convex) return false;
    return true;
  }
  if (const auto* pw = std::get_if<PowerForm>(&form))
    return pw->inner->all_pieces_convex();
  if (const auto* pp = std::get_if<PlusForm>(&form))
    return pp->inner->all_pieces_convex();
  return false;  // Piecewise1D carries no global convexity promise
}

// ===== evaluation ===========================================================

namespace {

// Index of the piece whose interval contains x (breakpoint ownership: the
// piece closing at bp owns it).
int piece_index(const Piecewise1DForm& pw, double x) {
  const auto& bp = pw.breakpoints;
  const auto it = std::lower_bound(bp.begin(), bp.end(), x);
  return static_cast<int>(it - bp.begin());
}

double eval_piecewise(const Piecewise1DForm& pw, double x) {
  const auto& bp = pw.breakpoints;
  const int i = piece_index(pw, x);
  const Vec xv = vec1(x);
  double v = pw.pieces[i].eval(xv);
  // lsc closure at a breakpoint: the one-sided limits can undercut the
  // assigned value only from the right piece (the left piece owns bp).
  if (i < static_cast<int>(bp.size()) && x == bp[i]) {
    v = std::min(v, pw.pieces[i + 1].eval(xv));
  }
  return v;
}

}  // namespace

double eval(const FunctionHandle& f, const Vec& x) {
  if (x.size() != f.dim)
    throw Error(ErrorCode::Precondition, "eval: dimension mismatch");
  if (const auto* s = std::get_if<SmoothForm>(&f.form)) return s->piece.eval(x);
  if (const auto* m = std::get_if<MaxForm>(&f.form)) {
    double v = -kInf;
    for (const SmoothPiece& p : m->pieces) v = std::max(v, p.eval(x));
    return v;
  }
  if (const auto* pw = std::get_if<Piecewise1DForm>(&f.form))
    return eval_piecewise(*pw, x[0]);
  if (const auto* pf = std::get_if<PowerForm>(&f.form)) {
    const double v = eval(*pf->inner, x);
    if (v < 0.0)
      throw Error(ErrorCode::Precondition,
                  "power wrap applied to a negative inner value");
    return pow0(v, pf->exponent);
  }
  const auto& pp = std::get<PlusForm>(f.form);
  return std::max(eval(*pp.inner, x), 0.0);
}

// ===== subdifferentials =====================================================

std::vector<int> active_pieces(const MaxForm& mf, const Vec& x,
                               double eps_act) {
  double fmax = -kInf;
  std::vector<double> vals(mf.pieces.size());
  for (size_t i = 0; i < mf.pieces.size(); ++i) {
    vals[i] = mf.pieces[i].eval(x);
    fmax = std::max(fmax, vals[i]);
  }
  const double band = eps_act * std::max(1.0, std::abs(fmax));
  std::vector<int> act;
  for (size_t i = 0; i < mf.pieces.size(); ++i)
    if (fmax - vals[i] <= band) act.push_back(static_cast<int>(i));
  return act;
}

namespace {

FinGenConvexSet subdiff_max(const MaxForm& mf, const Vec& x, double eps_act) {
  FinGenConvexSet s;
  s.dim = static_cast<int>(x.size());
  s.is_empty = false;
  for (int i : active_pieces(mf, x, eps_act))
    s.generators.push_back(mf.pieces[i].gradient(x));
  return s;
}

// One-sided-derivative interval rule at breakpoints; see the format notes.
FinGenConvexSet subdiff_piecewise(const Piecewise1DForm& pw, double x) {
  const auto& bp = pw.breakpoints;
  const Vec xv = vec1(x);
  const int i = piece_index(pw, x);
  const bool at_bp = (i < static_cast<int>(bp.size()) && x == bp[i]);
  if (!at_bp) {
    const double d = pw.pieces[i].gradient(xv)[0];
    if (std::isinf(d)) {
      // one-sided blowup inside an open interval cannot happen for the
      // supported closed forms except at interval ends; treat as undefined
      throw Error(ErrorCode::UndefinedAtPoint,
                  "piecewise subdifferential: unbounded derivative");
    }
    return FinGenConvexSet::singleton(vec1(d));
  }
  const double v = eval_piecewise(pw, x);
  const double left_limit = pw.pieces[i].eval(xv);
  const double right_limit = pw.pieces[i + 1].eval(xv);
  const double tie = 1e-12 * std::max(1.0, std::abs(v));
  double lo = -kInf, hi = kInf;
  if (left_limit <= v + tie) {
    const double d = pw.pieces[i].gradient(xv)[0];
    if (!std::isinf(d)) lo = d;         // d == -inf leaves lo = -inf
    else if (d > 0) lo = kInf;          // +inf left slope: no subgradient can
                                        // satisfy the left inequality
  }
  if (right_limit <= v + tie) {
    const double d = pw.pieces[i + 1].gradient(xv)[0];
    if (!std::isinf(d)) hi = d;         // d == +inf leaves hi = +inf
    else if (d < 0) hi = -kInf;
  }
  if (lo > hi || lo == kInf || hi == -kInf) return FinGenConvexSet::empty(1);
  return FinGenConvexSet::interval(lo, hi);
}

}  // namespace

FinGenConvexSet subdifferential(const FunctionHandle& f, const Vec& x,
                                double eps_act) {
  if (x.size() != f.dim)
    throw Error(ErrorCode::Precondition, "subdifferential: dimension mismatch");
  if (const auto* s = std::get_if<SmoothForm>(&f.form))
    return FinGenConvexSet::singleton(s->piece.gradient(x));
  if (const auto* m = std::get_if<MaxForm>(&f.form))
    return subdiff_max(*m, x, eps_act);
  if (const auto* pw = std::get_if<Piecewise1DForm>(&f.form))
    return subdiff_piecewise(*pw, x[0]);
  if (const auto* pf = std::get_if<PowerForm>(&f.form)) {
    const double v = eval(*pf->inner, x);
    const double q = pf->exponent;
    if (v <= 0.0 && q != 1.0)
      throw Error(ErrorCode::Precondition,
                  "power-wrap subdifferential needs a positive inner value");
    const double factor = q * pow0(v, q - 1.0);
    return subdifferential(*pf->inner, x, eps_act).scaled(factor);
  }
  const auto& pp = std::get<PlusForm>(f.form);
  const double v = eval(*pp.inner, x);
  const double band = eps_act * std::max(1.0, std::abs(v));
  if (v > band) return subdifferential(*pp.inner, x, eps_act);
  if (v < -band) return FinGenConvexSet::singleton(Vec::Zero(f.dim));
  // on the boundary: hull of the inner subdifferential and 0 (convex rule)
  FinGenConvexSet inner = subdifferential(*pp.inner, x, eps_act);
  FinGenConvexSet zero = FinGenConvexSet::singleton(Vec::Zero(f.dim));
  return hull_union({inner, zero});
}

FinGenConvexSet chain_subdifferential(const FunctionHandle& f,
                                      const ChainMap& psi, const Vec& x,
                                      double eps_act) {
  const double v = eval(f, x);
  if (v < psi.monotone_from)
    throw Error(ErrorCode::Precondition,
                "chain_subdifferential: value below the monotone threshold");
  const double c = psi.psi_prime(v);
  if (!(c > 0.0) || std::isinf(c))
    throw Error(ErrorCode::NonpositiveDerivative,
                "chain_subdifferential: psi'(f(x)) not positive and finite");
  return subdifferential(f, x, eps_act).scaled(c);
}

}  // namespace hb
