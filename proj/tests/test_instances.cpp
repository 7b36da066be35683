#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include "doctest.h"
#include "hb/instance.hpp"
#include "hb/rng.hpp"
#include "hb/sip.hpp"

using namespace hb;

namespace {

SmoothPiece mono1(double coeff, double expo, double constant = 0.0) {
  SmoothPiece p;
  if (coeff != 0.0) {
    Term t;
    t.coeff = coeff;
    t.exponents = vec1(expo);
    p.terms.push_back(t);
  }
  p.constant = constant;
  return p;
}

// the staircase as the tests build it in memory; the shipped file must match
HandlePtr staircase(int n_last) {
  auto tread = [](double n) { return (n - 1.0) / (n * n); };
  std::vector<double> bps{0.0};
  std::vector<SmoothPiece> pieces;
  pieces.push_back(SmoothPiece{});
  pieces.push_back(mono1(1.0, 2.0, tread(n_last)));
  for (int n = n_last - 1; n >= 3; --n) {
    bps.push_back(1.0 / n);
    pieces.push_back(mono1(1.0, 2.0, tread(n)));
  }
  bps.push_back(0.5);
  pieces.push_back(mono1(1.0, 2.0, 0.25));
  return std::make_shared<FunctionHandle>(FunctionHandle::piecewise1d(
      std::move(bps), std::move(pieces), "staircase"));
}

std::string write_temp(const std::string& name, const std::string& body) {
  const std::string path = "/tmp/" + name;
  std::ofstream out(path);
  out << body;
  return path;
}

}  // namespace

TEST_CASE("shipped instances load with the documented shapes") {
  std::set<std::uint64_t> hashes;
  for (const std::string& name : shipped_instance_names()) {
    const Instance inst = load_shipped(name);
    CHECK(inst.name == name);
    CHECK(inst.hash != 0);
    hashes.insert(inst.hash);
    if (inst.kind == "function") {
      REQUIRE(inst.f);
      CHECK(inst.f->dim == inst.center.size());
    } else {
      REQUIRE(inst.kind == "sip");
      REQUIRE(inst.program.has_value());
      CHECK(inst.program->n == inst.center.size());
    }
    // loading the same bytes twice gives the same hash
    CHECK(load_shipped(name).hash == inst.hash);
  }
  // the two parabola files share a function but not bytes
  CHECK(hashes.size() == shipped_instance_names().size());
}

TEST_CASE("loaded functions reproduce their closed forms") {
  const Instance e36 = load_shipped("example-3.6");
  CHECK(eval(*e36.f, vec1(-0.5)) == 0.0);
  CHECK(eval(*e36.f, vec1(0.5)) == 0.25);
  CHECK(eval(*e36.f, vec1(2.0)) == 4.0);

  const Instance esqrt = load_shipped("example-sqrt");
  CHECK(eval(*esqrt.f, vec1(0.25)) == 0.5);
  CHECK(eval(*esqrt.f, vec1(-1.0)) == 0.0);

  const Instance eabs = load_shipped("example-abs");
  CHECK(eval(*eabs.f, vec1(-0.3)) == 0.3);
  CHECK(eval(*eabs.f, vec1(0.3)) == 0.3);

  const Instance e316 = load_shipped("example-3.16");
  CHECK(eval(*e316.f, vec1(0.5)) == eval(*e36.f, vec1(0.5)));
}

TEST_CASE("the staircase file is byte-faithful to the reference build") {
  const Instance inst = load_shipped("example-3.20");
  const HandlePtr ref = staircase(4097);
  Substream rng = Substream::keyed(3, 0, 0);
  for (int i = 0; i < 400; ++i) {
    const double x = -0.2 + 1.4 * rng.next_unit();
    CHECK(eval(*inst.f, vec1(x)) == eval(*ref, vec1(x)));
  }
  // a point interior to a deep tread: derivative exactly 2x on both sides
  const Vec x = vec1(1.0 / 900.0 + 1e-5);
  const FinGenConvexSet sd = subdifferential(*inst.f, x);
  REQUIRE(sd.generators.size() == 1);
  CHECK(sd.generators[0](0) == 2.0 * x(0));
}

TEST_CASE("program instances solve to their stored centers") {
  const Instance remark = load_shipped("sip-remark");
  const SolutionSet srem = solve(*remark.program);
  REQUIRE(srem.feasible);
  CHECK(std::abs(srem.point()(0) - remark.center(0)) <= 1e-9);

  const Instance quad = load_shipped("lp-quadrant");
  const SolutionSet squad = solve(*quad.program, true);
  REQUIRE(squad.feasible);
  REQUIRE(squad.points.size() == 1);
  CHECK((squad.points[0] - quad.center).norm() <= 1e-12);

  // the sup function of the remark program folds objective and constraint
  const HandlePtr fbar = instance_function(remark);
  CHECK(eval(*fbar, vec1(-0.5)) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(eval(*fbar, vec1(0.5)) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("parse failures carry diagnostics") {
  const auto expect_parse_error = [](const std::string& path,
                                     const std::string& needle) {
    try {
      load_instance(path);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Parse);
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  expect_parse_error(write_temp("hb_bad_syntax.json", "{ not json"),
                     "hb_bad_syntax");
  expect_parse_error(
      write_temp("hb_bad_schema.json",
                 R"({"schema":"other/9","kind":"function","center":[0]})"),
      "unsupported schema");
  expect_parse_error(
      write_temp(
          "hb_bad_center.json",
          R"({"schema":"hb-instance/1","kind":"function","center":[0,0],
              "function":{"form":"smooth","dim":1,"piece":{"constant":1}}})"),
      "center dimension");
  expect_parse_error(
      write_temp("hb_bad_kind.json",
                 R"({"schema":"hb-instance/1","kind":"blob","center":[0]})"),
      "unknown kind");
  expect_parse_error(write_temp("hb_missing.json", "{}"), "missing field");
  expect_parse_error("/tmp/hb_definitely_not_there.json", "cannot open");
}
