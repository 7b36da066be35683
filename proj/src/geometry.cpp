#include "hb/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <variant>
#include <vector>

#include "hb/linprog.hpp"

namespace hb {

// ===== min-norm point =======================================================

namespace {

bool index_active(const std::vector<int>& v, int j) {
  return std::find(v.begin(), v.end(), j) != v.end();
}

}  // namespace

MinNormResult min_norm_point(const FinGenConvexSet& S, double tol) {
  MinNormResult out;
  if (S.is_empty || S.generators.empty()) {
    out.norm = kInf;  // inf over the empty set
    out.certified = true;
    return out;
  }
  const auto& G = S.generators;
  const auto& R = S.rays;
  const int ng = static_cast<int>(G.size());
  const int nr = static_cast<int>(R.size());

  double scale = 1.0;
  for (const Vec& g : G) scale = std::max(scale, g.norm());
  for (const Vec& r : R) scale = std::max(scale, r.norm());
  const double eps = tol * scale * scale;  // inner-product units

  // Active set: convex weights lam over ag, conic weights mu over ar.
  std::vector<int> ag, ar;
  std::vector<double> lam, mu;
  {
    int j0 = 0;
    for (int i = 1; i < ng; ++i)
      if (G[i].squaredNorm() < G[j0].squaredNorm() - 1e-18) j0 = i;
    ag.push_back(j0);
    lam.push_back(1.0);
  }
  Vec p = G[ag[0]];

  const auto rebuild = [&]() {
    p = Vec::Zero(S.dim);
    for (size_t a = 0; a < ag.size(); ++a) p += lam[a] * G[ag[a]];
    for (size_t b = 0; b < ar.size(); ++b) p += mu[b] * R[ar[b]];
  };

  const auto violations = [&](int* gj, int* rj) -> std::pair<double, double> {
    const double p2 = p.squaredNorm();
    double gbest = kInf, rbest = kInf;
    for (int i = 0; i < ng; ++i) {
      const double v = p.dot(G[i]);
      if (v < gbest - 1e-18) {
        gbest = v;
        if (gj) *gj = i;
      }
    }
    for (int j = 0; j < nr; ++j) {
      const double v = p.dot(R[j]);
      if (v < rbest - 1e-18) {
        rbest = v;
        if (rj) *rj = j;
      }
    }
    return {p2 - gbest, nr > 0 ? -rbest : -kInf};
  };

  const int max_major = 60 + 6 * (ng + nr);
  for (int major = 0; major < max_major; ++major) {
    int gj = -1, rj = -1;
    const auto [vg, vr] = violations(&gj, &rj);
    if (vg <= eps && vr <= eps) break;

    // Add the worse violator; fall back to the other if it is already active.
    bool added = false;
    const bool ray_first = vr > vg;
    for (int attempt = 0; attempt < 2 && !added; ++attempt) {
      const bool use_ray = (attempt == 0) ? ray_first : !ray_first;
      if (use_ray) {
        if (vr > eps && rj >= 0 && !index_active(ar, rj)) {
          ar.push_back(rj);
          mu.push_back(0.0);
          added = true;
        }
      } else {
        if (vg > eps && gj >= 0 && !index_active(ag, gj)) {
          ag.push_back(gj);
          lam.push_back(0.0);
          added = true;
        }
      }
    }
    if (!added) break;  // numerical stall; certificate below stays honest

    // Affine subproblem on the active set with minor cycles.
    const int cap = static_cast<int>(ag.size() + ar.size()) + 2;
    for (int minor = 0; minor < cap; ++minor) {
      const int k = static_cast<int>(ag.size());
      const int m = static_cast<int>(ar.size());
      Mat M = Mat::Zero(k + m + 1, k + m + 1);
      Vec rhs = Vec::Zero(k + m + 1);
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) M(a, b) = G[ag[a]].dot(G[ag[b]]);
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < m; ++b)
          M(a, k + b) = M(k + b, a) = G[ag[a]].dot(R[ar[b]]);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) M(k + a, k + b) = R[ar[a]].dot(R[ar[b]]);
      for (int a = 0; a < k; ++a) M(k + m, a) = M(a, k + m) = 1.0;
      rhs(k + m) = 1.0;
      const Vec sol = M.completeOrthogonalDecomposition().solve(rhs);

      bool feasible = true;
      for (int a = 0; a < k && feasible; ++a) feasible = sol(a) >= -1e-12;
      for (int b = 0; b < m && feasible; ++b) feasible = sol(k + b) >= -1e-12;
      if (feasible) {
        double sum = 0.0;
        for (int a = 0; a < k; ++a) sum += (lam[a] = std::max(0.0, sol(a)));
        for (int b = 0; b < m; ++b) mu[b] = std::max(0.0, sol(k + b));
        if (sum > 1e-14)
          for (double& l : lam) l /= sum;
        break;
      }

      // Step toward the affine solution until the first weight vanishes.
      double theta = 1.0;
      int dg = -1, dr = -1;
      for (int a = 0; a < k; ++a)
        if (sol(a) < -1e-12 && lam[a] > 0.0) {
          const double t = lam[a] / (lam[a] - sol(a));
          if (t < theta) {
            theta = t;
            dg = a;
            dr = -1;
          }
        }
      for (int b = 0; b < m; ++b)
        if (sol(k + b) < -1e-12 && mu[b] > 0.0) {
          const double t = mu[b] / (mu[b] - sol(k + b));
          if (t < theta) {
            theta = t;
            dr = b;
            dg = -1;
          }
        }
      for (int a = 0; a < k; ++a) lam[a] += theta * (sol(a) - lam[a]);
      for (int b = 0; b < m; ++b) mu[b] += theta * (sol(k + b) - mu[b]);
      if (dg >= 0 && k > 1) {
        ag.erase(ag.begin() + dg);
        lam.erase(lam.begin() + dg);
      } else if (dr >= 0) {
        ar.erase(ar.begin() + dr);
        mu.erase(mu.begin() + dr);
      } else {
        for (double& l : lam) l = std::max(0.0, l);
        for (double& w : mu) w = std::max(0.0, w);
        double sum = 0.0;
        for (double l : lam) sum += l;
        if (sum > 1e-14)
          for (double& l : lam) l /= sum;
        break;
      }
    }
    rebuild();
  }

  const auto [vg, vr] = violations(nullptr, nullptr);
  out.point = p;
  out.norm = p.norm();
  if (out.norm < 1e-14 * scale) {
    out.norm = 0.0;
  }
  out.gap = std::max({vg, nr > 0 ? vr : 0.0, 0.0});
  out.certified = vg <= eps && vr <= eps;
  return out;
}

// ===== sublevel distances ===================================================

namespace {

// Golden-section minimization; returns (argmin, value).
std::pair<double, double> golden_min(const std::function<double(double)>& g,
                                     double lo, double hi) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = g(c), fd = g(d);
  for (int i = 0;
       i < 200 && (b - a) > 1e-14 * (1.0 + std::abs(a) + std::abs(b)); ++i) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = g(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = g(d);
    }
  }
  double best_t = c, best_v = fc;
  if (fd < best_v) {
    best_t = d;
    best_v = fd;
  }
  const double m = 0.5 * (a + b), fm = g(m);
  if (fm < best_v) {
    best_t = m;
    best_v = fm;
  }
  return {best_t, best_v};
}

}  // namespace

SublevelDistance::SublevelDistance(HandlePtr f, double level, Vec box_center,
                                   double box_radius, Vec inside_hint)
    : f_(std::move(f)),
      level_(level),
      center_(std::move(box_center)),
      radius_(box_radius),
      hint_(std::move(inside_hint)) {}

const std::vector<std::pair<double, double>>& SublevelDistance::intervals()
    const {
  if (!profile_built_ && f_->dim == 1) build_profile();
  return intervals_;
}

void SublevelDistance::build_profile() const {
  profile_built_ = true;
  intervals_.clear();
  const double a = center_(0) - radius_;
  const double b = center_(0) + radius_;
  // Resolution floor: a minimum that comes this close to the level counts as
  // touching it (an exact-zero minimum is rarely hit in floating point).
  const double touch = 1e-11 * (1.0 + std::abs(level_));

  const auto value = [&](double t) -> double {
    try {
      return eval(*f_, vec1(t));
    } catch (const Error&) {
      return kInf;  // outside the function's domain: not in the sublevel set
    }
  };
  // f(t_in) <= level < f(t_out): tighten the bracket, return the inside end.
  const auto boundary = [&](double t_in, double t_out) -> double {
    for (int i = 0;
         i < 90 && std::abs(t_out - t_in) > 1e-16 * (1.0 + std::abs(t_in));
         ++i) {
      const double m = 0.5 * (t_in + t_out);
      (value(m) <= level_ ? t_in : t_out) = m;
    }
    return t_in;
  };

  std::vector<double> knots = {a, b};
  if (const auto* pw = std::get_if<Piecewise1DForm>(&f_->form))
    for (double t : pw->breakpoints)
      if (t > a && t < b) knots.push_back(t);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  std::vector<std::pair<double, double>> raw;
  // Lsc dips can hide at knots; evaluate them exactly.
  for (double k : knots)
    if (value(k) <= level_) raw.push_back({k, k});

  const int M = 96;
  for (size_t ki = 0; ki + 1 < knots.size(); ++ki) {
    const double k0 = knots[ki], k1 = knots[ki + 1];
    const double h = (k1 - k0) / (M + 1);
    if (!(h > 0.0)) continue;
    std::vector<double> ts(M), vs(M);
    for (int i = 0; i < M; ++i) {
      ts[i] = k0 + (i + 1) * h;
      vs[i] = value(ts[i]);
    }
    // Runs of samples at or below the level become intervals.
    int i = 0;
    while (i < M) {
      if (!(vs[i] <= level_)) {
        ++i;
        continue;
      }
      int j = i;
      while (j + 1 < M && vs[j + 1] <= level_) ++j;
      double lo =
          (i == 0) ? (value(k0) <= level_ ? k0 : boundary(ts[0], k0))
                   : boundary(ts[i], ts[i - 1]);
      double hi =
          (j == M - 1) ? (value(k1) <= level_ ? k1 : boundary(ts[j], k1))
                       : boundary(ts[j], ts[j + 1]);
      raw.push_back({lo, hi});
      i = j + 1;
    }
    // Zero-measure touches between samples: minimize positive valleys.
    const auto probe_min = [&](double lo, double hi) {
      const auto [t_star, v_star] = golden_min(value, lo, hi);
      if (!(v_star <= level_ + touch)) return;
      // A touch this close to an in-set segment endpoint is the endpoint
      // itself (recorded exactly elsewhere); a t_star copy carrying golden-
      // section roundoff would bleed the interval past the true boundary.
      const double snap = 1e-9 * (1.0 + std::abs(t_star));
      if ((std::abs(t_star - lo) <= snap && value(lo) <= level_) ||
          (std::abs(t_star - hi) <= snap && value(hi) <= level_))
        return;
      const double l = value(lo) <= level_ ? lo : boundary(t_star, lo);
      const double r = value(hi) <= level_ ? hi : boundary(t_star, hi);
      raw.push_back({l, r});
    };
    for (int q = 1; q + 1 < M; ++q)
      if (vs[q] > level_ && vs[q] <= vs[q - 1] && vs[q] < vs[q + 1])
        probe_min(ts[q - 1], ts[q + 1]);
    if (M >= 2 && vs[0] > level_ && vs[0] < vs[1]) probe_min(k0, ts[1]);
    if (M >= 2 && vs[M - 1] > level_ && vs[M - 1] < vs[M - 2])
      probe_min(ts[M - 2], k1);
  }

  std::sort(raw.begin(), raw.end());
  for (const auto& iv : raw) {
    if (!intervals_.empty() && iv.first <= intervals_.back().second + 1e-12)
      intervals_.back().second = std::max(intervals_.back().second, iv.second);
    else
      intervals_.push_back(iv);
  }
}

DistResult SublevelDistance::at_1d(double x) const {
  if (!profile_built_) build_profile();
  DistResult out;
  const double margin = std::max(0.0, radius_ - std::abs(x - center_(0)));
  if (intervals_.empty()) {
    out.distance = kInf;
    out.lower_bound = margin;
    out.status = DistStatus::EmptyOnBox;
    return out;
  }
  double best = kInf, bw = 0.0;
  for (const auto& [lo, hi] : intervals_) {
    const double w = std::clamp(x, lo, hi);
    const double d = std::abs(x - w);
    if (d < best) {
      best = d;
      bw = w;
    }
  }
  out.distance = best;
  out.witness = vec1(bw);
  if (best <= margin + 1e-12) {
    out.status = DistStatus::Exact;
    out.lower_bound = best;
  } else {
    out.status = DistStatus::NoConvergence;  // something outside the box
    out.lower_bound = margin;                // could still be closer
  }
  return out;
}

DistResult SublevelDistance::at_nd(const Vec& x, double tol) const {
  const auto value = [&](const Vec& y) -> double {
    try {
      return eval(*f_, y);
    } catch (const Error&) {
      return kInf;
    }
  };

  DistResult out;
  const double fx = value(x);
  if (fx <= level_) {
    out.distance = 0.0;
    out.lower_bound = 0.0;
    out.witness = x;
    out.status = DistStatus::Exact;
    return out;
  }
  // A descent sequence can approach the set without attaining the level
  // exactly (corner minima); points this close count as inside.
  const double touch = 1e-11 * (1.0 + std::abs(level_));

  // Anchor inside the sublevel set: the hint, or a target-level descent.
  Vec z0;
  bool anchored = false;
  if (hint_.size() == x.size() && value(hint_) <= level_ + touch) {
    z0 = hint_;
    anchored = true;
  } else {
    Vec y = x;
    double fy = fx;
    for (int it = 0; it < 600 && std::isfinite(fy); ++it) {
      if (fy <= level_ + touch) {
        anchored = true;
        z0 = y;
        break;
      }
      FinGenConvexSet sd;
      try {
        // Tight activity tolerance: near-active pieces entering the hull
        // bend the step direction and the descent cycles above the target.
        sd = subdifferential(*f_, y, 1e-13);
      } catch (const Error&) {
        break;
      }
      const auto mn = min_norm_point(sd);
      if (!std::isfinite(mn.norm) || mn.norm <= 1e-14) break;
      y -= ((fy - level_) / (mn.norm * mn.norm)) * mn.point;
      fy = value(y);
    }
  }
  if (!anchored) {
    out.status = DistStatus::EmptyOnBox;
    return out;
  }

  // Pull a point back to the boundary along [inside, outside].
  const auto pullback = [&](const Vec& outside) -> std::pair<Vec, Vec> {
    Vec lo = z0, hi = outside;
    if (value(outside) <= level_ + touch) return {outside, outside};
    for (int i = 0; i < 120; ++i) {
      const Vec m = 0.5 * (lo + hi);
      if (value(m) <= level_ + touch)
        lo = m;
      else
        hi = m;
      if ((hi - lo).norm() <= 1e-15 * (1.0 + lo.norm())) break;
    }
    return {lo, hi};
  };

  auto [win, wout] = pullback(x);
  double U = (x - win).norm();
  Vec best_w = win;

  const bool convex = f_->all_pieces_convex();
  struct Plane {
    Vec s;
    double off;
  };
  std::vector<Plane> planes;
  const auto add_plane = [&](const Vec& w) {
    if (!convex || planes.size() >= 24) return;
    const double fw = value(w);
    if (!std::isfinite(fw)) return;
    FinGenConvexSet sd;
    try {
      sd = subdifferential(*f_, w);
    } catch (const Error&) {
      return;
    }
    const auto mn = min_norm_point(sd);
    if (!mn.certified || !std::isfinite(mn.norm) || mn.norm <= 1e-13) return;
    // f(y) >= f(w) + <s, y-w>, so y in [f <= level] obeys
    // <s, y> <= <s, w> - (f(w) - level).
    planes.push_back({mn.point, mn.point.dot(w) - (fw - level_)});
    for (size_t i = 0; i + 1 < planes.size(); ++i) {
      const auto& e = planes[i];
      const auto& n = planes.back();
      if ((e.s / e.s.norm() - n.s / n.s.norm()).norm() < 1e-10 &&
          std::abs(e.off / e.s.norm() - n.off / n.s.norm()) < 1e-10) {
        planes.pop_back();
        return;
      }
    }
  };
  add_plane(x);      // far plane: crisp piece activity
  add_plane(wout);   // boundary plane: tight for curved sets
  double L = 0.0;

  // Lower bound: exact distance to the outer polyhedron of the cuts when the
  // vertex walk certifies; otherwise the deepest single cut.
  const auto poly_lower = [&]() -> double {
    double lb = 0.0;
    for (const auto& pl : planes)
      lb = std::max(lb, (pl.s.dot(x) - pl.off) / pl.s.norm());
    if (planes.size() >= 2) {
      IneqLp lp;
      lp.G.resize(planes.size(), x.size());
      lp.h.resize(planes.size());
      for (size_t i = 0; i < planes.size(); ++i) {
        lp.G.row(i) = planes[i].s.transpose();
        lp.h(i) = planes[i].off;
      }
      lp.c = Vec::Zero(x.size());
      const auto r = lp_solve_ineq(lp, true, 4000);
      if (r.status == LpStatus::Optimal && !r.optimal_vertices.empty()) {
        FinGenConvexSet P;
        P.is_empty = false;
        P.dim = static_cast<int>(x.size());
        P.generators = r.optimal_vertices;
        P.rays = r.optimal_rays;
        const auto mn = min_norm_point(P.translated(-x));
        if (mn.certified && std::isfinite(mn.norm)) {
          lb = std::max(lb, mn.norm);
          // The nearest polyhedron point doubles as a witness candidate.
          const Vec y_star = mn.point + x;
          if (value(y_star) <= level_) {
            const double cand = (x - y_star).norm();
            if (cand < U) {
              U = cand;
              best_w = y_star;
            }
          }
        }
      }
    }
    return lb;
  };

  for (int round = 0; round < 24; ++round) {
    L = std::max(L, poly_lower());
    if (!convex) break;
    if (U - L <= tol * (1.0 + U)) {
      out.distance = U;
      out.lower_bound = L;
      out.witness = best_w;
      out.status = DistStatus::Certified;
      return out;
    }
    if (planes.empty()) break;
    const auto& pl = planes[round % planes.size()];
    const double push = (pl.s.dot(x) - pl.off) / pl.s.squaredNorm();
    if (push <= 0.0) continue;
    const Vec x_proj = x - push * pl.s;
    const auto [win2, wout2] = pullback(x_proj);
    const double U2 = (x - win2).norm();
    if (U2 < U - 1e-15) {
      U = U2;
      best_w = win2;
    }
    const size_t before = planes.size();
    add_plane(x_proj);
    add_plane(wout2);
    if (planes.size() == before && U2 >= U - 1e-15 && round > 4) break;
  }

  out.distance = U;
  out.lower_bound = L;
  out.witness = best_w;
  out.status =
      (U - L <= tol * (1.0 + U)) ? DistStatus::Certified : DistStatus::NoConvergence;
  return out;
}

DistResult SublevelDistance::at(const Vec& x, double tol) const {
  if (f_->dim == 1) return at_1d(x(0));
  return at_nd(x, tol);
}

DistResult sublevel_distance_grid(const FunctionHandle& f, const Vec& x,
                                  double level, const Vec& lo, const Vec& hi,
                                  int pts_per_dim) {
  const int n = static_cast<int>(x.size());
  if (n > 3)
    throw Error(ErrorCode::DimensionTooLarge,
                "grid distance oracle supports at most 3 dimensions");
  DistResult out;
  out.status = DistStatus::EmptyOnBox;
  std::vector<int> idx(n, 0);
  Vec p(n);
  while (true) {
    for (int d = 0; d < n; ++d) {
      const double t = pts_per_dim > 1
                           ? static_cast<double>(idx[d]) / (pts_per_dim - 1)
                           : 0.5;
      p(d) = lo(d) + t * (hi(d) - lo(d));
    }
    double v;
    try {
      v = eval(f, p);
    } catch (const Error&) {
      v = kInf;
    }
    if (v <= level) {
      const double d = (x - p).norm();
      if (d < out.distance) {
        out.distance = d;
        out.witness = p;
        out.status = DistStatus::Oracle;
      }
    }
    int d = 0;
    while (d < n && ++idx[d] == pts_per_dim) idx[d++] = 0;
    if (d == n) break;
  }
  return out;
}

}  // namespace hb
