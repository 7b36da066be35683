#include <cmath>
#include <vector>

#include "doctest.h"
#include "hb/function.hpp"
#include "hb/geometry.hpp"
#include "hb/rng.hpp"
#include "hb/types.hpp"

using namespace hb;

namespace {

FinGenConvexSet make_set(int dim, std::vector<Vec> gens, std::vector<Vec> rays) {
  FinGenConvexSet s;
  s.is_empty = false;
  s.dim = dim;
  s.generators = std::move(gens);
  s.rays = std::move(rays);
  return s;
}

FunctionHandle corner2d() {
  // max(a+b, -a, -b): sublevel set at 0 is exactly the origin.
  return FunctionHandle::max_family(
      {SmoothPiece::affine(vec2(1.0, 1.0), 0.0),
       SmoothPiece::affine(vec2(-1.0, 0.0), 0.0),
       SmoothPiece::affine(vec2(0.0, -1.0), 0.0)},
      2, "corner");
}

}  // namespace

TEST_CASE("min-norm: segment against a dense parameter sweep") {
  const auto r = min_norm_point(make_set(2, {vec2(3.0, 0.0), vec2(0.0, 4.0)}, {}));
  REQUIRE(r.certified);
  // independent oracle: minimize over convex weights on a fine grid
  double oracle = kInf;
  const int N = 1000000;
  for (int i = 0; i <= N; ++i) {
    const double lam = static_cast<double>(i) / N;
    const double nx = 3.0 * lam, ny = 4.0 * (1.0 - lam);
    oracle = std::min(oracle, std::hypot(nx, ny));
  }
  CHECK(r.norm == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(r.norm == doctest::Approx(12.0 / 5.0));
  CHECK(r.point(0) == doctest::Approx(48.0 / 25.0));
  CHECK(r.point(1) == doctest::Approx(36.0 / 25.0));
}

TEST_CASE("min-norm: hull containing the origin") {
  const auto r = min_norm_point(
      make_set(2, {vec2(1.0, 1.0), vec2(-1.0, 0.0), vec2(0.0, -1.0)}, {}));
  CHECK(r.certified);
  CHECK(r.norm == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("min-norm: singleton and intervals") {
  CHECK(min_norm_point(FinGenConvexSet::singleton(vec2(3.0, 4.0))).norm ==
        doctest::Approx(5.0));
  CHECK(min_norm_point(FinGenConvexSet::interval(2.0, 5.0)).norm ==
        doctest::Approx(2.0));
  CHECK(min_norm_point(FinGenConvexSet::interval(-1.0, 3.0)).norm ==
        doctest::Approx(0.0));
  CHECK(min_norm_point(FinGenConvexSet::interval(0.0, kInf)).norm ==
        doctest::Approx(0.0));
  CHECK(min_norm_point(FinGenConvexSet::interval(-kInf, kInf)).norm ==
        doctest::Approx(0.0));
  CHECK(min_norm_point(FinGenConvexSet::interval(-kInf, -2.0)).norm ==
        doctest::Approx(2.0));
}

TEST_CASE("min-norm: rays pull the point along the cone") {
  const auto pulled =
      min_norm_point(make_set(2, {vec2(0.0, 2.0)}, {vec2(1.0, -1.0)}));
  REQUIRE(pulled.certified);
  CHECK(pulled.norm == doctest::Approx(std::sqrt(2.0)));
  CHECK(pulled.point(0) == doctest::Approx(1.0));
  CHECK(pulled.point(1) == doctest::Approx(1.0));

  const auto idle =
      min_norm_point(make_set(2, {vec2(2.0, 0.0)}, {vec2(0.0, 1.0)}));
  REQUIRE(idle.certified);
  CHECK(idle.norm == doctest::Approx(2.0));
}

TEST_CASE("min-norm: empty set gives +inf") {
  const auto r = min_norm_point(FinGenConvexSet::empty(2));
  CHECK(!std::isfinite(r.norm));
  CHECK(r.certified);
}

TEST_CASE("min-norm: random sets are certified and feasible") {
  for (int trial = 0; trial < 40; ++trial) {
    auto rng = Substream::keyed(20240601, 7, trial);
    const int dim = 2 + static_cast<int>(rng.next_u64() % 2);  // 2 or 3
    const int ng = 2 + static_cast<int>(rng.next_u64() % 4);
    const int nr = static_cast<int>(rng.next_u64() % 3);
    std::vector<Vec> gens, rays;
    for (int i = 0; i < ng; ++i) {
      Vec g(dim);
      for (int d = 0; d < dim; ++d) g(d) = 4.0 * rng.next_symmetric();
      gens.push_back(g);
    }
    for (int j = 0; j < nr; ++j) rays.push_back(rng.unit_vector(dim));
    const auto S = make_set(dim, gens, rays);
    const auto r = min_norm_point(S);
    REQUIRE(std::isfinite(r.norm));
    CHECK(r.certified);
    CHECK(S.contains(r.point, 1e-7));
    // no sampled member of the set may beat the reported norm
    for (int s = 0; s < 400; ++s) {
      Vec w(ng);
      double tot = 0.0;
      for (int i = 0; i < ng; ++i) tot += (w(i) = -std::log(1.0 - rng.next_unit()));
      Vec p = Vec::Zero(dim);
      for (int i = 0; i < ng; ++i) p += (w(i) / tot) * gens[i];
      for (int j = 0; j < nr; ++j) p += 3.0 * rng.next_unit() * rays[j];
      CHECK(p.norm() >= r.norm - 1e-7);
    }
  }
}

TEST_CASE("1-D sublevel profile: smooth interval") {
  const auto f = [] {
    SmoothPiece p = SmoothPiece::power1d(1, 0, 1.0, 2.0, true);
    p.constant = -1.0;  // x^2 - 1
    return std::make_shared<FunctionHandle>(FunctionHandle::smooth(p, 1, ""));
  }();
  SublevelDistance sd(f, 0.0, vec1(0.0));
  REQUIRE(sd.intervals().size() == 1);
  CHECK(sd.intervals()[0].first == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(sd.intervals()[0].second == doctest::Approx(1.0).epsilon(1e-9));

  const auto far = sd.at(vec1(3.0));
  CHECK(far.status == DistStatus::Exact);
  CHECK(far.distance == doctest::Approx(2.0));
  CHECK(far.witness(0) == doctest::Approx(1.0));
  CHECK(sd.at(vec1(0.5)).distance == doctest::Approx(0.0));
}

TEST_CASE("1-D sublevel profile: zero-measure touch of a smooth function") {
  const auto f = std::make_shared<FunctionHandle>(FunctionHandle::smooth(
      SmoothPiece::power1d(1, 0, 1.0, 2.0, true), 1, "square"));
  SublevelDistance sd(f, 0.0, vec1(0.0));
  const auto r = sd.at(vec1(0.3));
  CHECK(r.status == DistStatus::Exact);
  CHECK(r.distance == doctest::Approx(0.3).epsilon(1e-7));
}

TEST_CASE("1-D sublevel profile: kink touch at a knot") {
  // |x| as a piecewise handle: the set is the single knot point.
  const auto f = std::make_shared<FunctionHandle>(FunctionHandle::piecewise1d(
      {0.0},
      {SmoothPiece::affine(vec1(-1.0), 0.0), SmoothPiece::affine(vec1(1.0), 0.0)},
      "abspw"));
  SublevelDistance sd(f, 0.0, vec1(0.0));
  CHECK(sd.at(vec1(0.25)).distance == doctest::Approx(0.25));
  CHECK(sd.at(vec1(-0.4)).distance == doctest::Approx(0.4));
}

TEST_CASE("1-D sublevel profile: jump boundary and half-line set") {
  const auto f = std::make_shared<FunctionHandle>(FunctionHandle::piecewise1d(
      {0.0},
      {SmoothPiece::constant_piece(1, 0.0), SmoothPiece::affine(vec1(1.0), 1.0)},
      "jump"));
  SublevelDistance sd(f, 0.0, vec1(0.0));
  const auto r = sd.at(vec1(2.0));
  CHECK(r.status == DistStatus::Exact);
  CHECK(r.distance == doctest::Approx(2.0));
  CHECK(r.witness(0) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("1-D sublevel profile: empty on the box") {
  const auto f = [] {
    SmoothPiece p = SmoothPiece::power1d(1, 0, 1.0, 2.0, true);
    p.constant = 1.0;  // x^2 + 1 > 0
    return std::make_shared<FunctionHandle>(FunctionHandle::smooth(p, 1, ""));
  }();
  SublevelDistance sd(f, 0.0, vec1(0.0));
  const auto r = sd.at(vec1(0.5));
  CHECK(r.status == DistStatus::EmptyOnBox);
  CHECK(!std::isfinite(r.distance));
}

TEST_CASE("n-D distance: halfspace is certified") {
  const auto f = std::make_shared<FunctionHandle>(FunctionHandle::smooth(
      SmoothPiece::affine(vec2(1.0, 1.0), 0.0), 2, "half"));
  SublevelDistance sd(f, 0.0, vec2(0.0, 0.0));
  const auto r = sd.at(vec2(1.0, 1.0));
  CHECK(r.status == DistStatus::Certified);
  CHECK(r.distance == doctest::Approx(std::sqrt(2.0)));
  CHECK(r.lower_bound == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("n-D distance: corner point set") {
  const auto f = std::make_shared<FunctionHandle>(corner2d());
  SublevelDistance sd(f, 0.0, vec2(0.0, 0.0), 8.0, vec2(0.0, 0.0));
  CHECK(sd.at(vec2(1.0, 1.0)).distance == doctest::Approx(std::sqrt(2.0)));
  CHECK(sd.at(vec2(1.0, 0.0)).distance == doctest::Approx(1.0));
  CHECK(sd.at(vec2(-0.3, -0.4)).distance == doctest::Approx(0.5));
  CHECK(sd.at(vec2(0.0, 0.0)).distance == doctest::Approx(0.0));
}

TEST_CASE("n-D distance: anchor found without a hint") {
  const auto f = std::make_shared<FunctionHandle>(corner2d());
  SublevelDistance sd(f, 0.0, vec2(0.0, 0.0));  // no inside hint
  CHECK(sd.at(vec2(0.6, 0.8)).distance == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("n-D distance: undetectable set reported as such") {
  SmoothPiece p;  // a^2 + b^2 + 1
  p.terms = {Term{1.0, vec2(2.0, 0.0)}, Term{1.0, vec2(0.0, 2.0)}};
  p.constant = 1.0;
  p.convex = true;
  const auto f = std::make_shared<FunctionHandle>(
      FunctionHandle::smooth(p, 2, "bump"));
  SublevelDistance sd(f, 0.0, vec2(0.0, 0.0));
  CHECK(sd.at(vec2(0.5, 0.5)).status == DistStatus::EmptyOnBox);
}

TEST_CASE("grid oracle agrees with the certified solver") {
  const auto fh = corner2d();
  const auto f = std::make_shared<FunctionHandle>(fh);
  SublevelDistance sd(f, 0.0, vec2(0.0, 0.0), 8.0, vec2(0.0, 0.0));
  const Vec lo = vec2(-2.0, -2.0), hi = vec2(2.0, 2.0);
  const int pts = 201;  // step 0.02, grid hits the origin exactly
  const double slack = 0.02 * std::sqrt(2.0) + 1e-9;
  for (const Vec& q : {vec2(1.0, 0.3), vec2(-0.7, -0.2), vec2(0.4, 1.2)}) {
    const auto a = sd.at(q);
    const auto g = sublevel_distance_grid(fh, q, 0.0, lo, hi, pts);
    REQUIRE(g.status == DistStatus::Oracle);
    CHECK(std::abs(a.distance - g.distance) <= slack);
  }
}

TEST_CASE("grid oracle refuses high dimensions") {
  SmoothPiece p;
  p.terms = {Term{1.0, Vec::Ones(4)}};
  const auto f = FunctionHandle::smooth(p, 4, "4d");
  CHECK_THROWS_AS((void)sublevel_distance_grid(f, Vec::Zero(4), 0.0,
                                               -Vec::Ones(4), Vec::Ones(4), 5),
                  Error);
}
