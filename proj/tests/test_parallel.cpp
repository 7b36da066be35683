// Determinism of the parallel fan-out: every execution policy and worker
// count must produce bit-identical traces, because samples land in
// preassigned slots and the reduction runs in index order afterwards.

#include <cstring>
#include <vector>

#include "doctest.h"
#include "hb/calmness.hpp"
#include "hb/instance.hpp"
#include "hb/moduli.hpp"
#include "hb/parallel.hpp"

using namespace hb;

namespace {

const std::vector<ExecConfig> kConfigs = {
    {ExecPolicy::Serial, 0},
    {ExecPolicy::Parallel, 1},
    {ExecPolicy::Parallel, 2},
    {ExecPolicy::Parallel, 8},
};

bool same_bits(double a, double b) {
  return std::memcmp(&a, &b, sizeof a) == 0;
}

void require_identical(const LiminfTrace& a, const LiminfTrace& b) {
  REQUIRE(a.samples.size() == b.samples.size());
  REQUIRE(a.shells.size() == b.shells.size());
  CHECK(same_bits(a.extracted_value, b.extracted_value));
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(same_bits(a.samples[i].fx, b.samples[i].fx));
    CHECK(same_bits(a.samples[i].ratio, b.samples[i].ratio));
    CHECK(a.samples[i].x == b.samples[i].x);
  }
  for (std::size_t i = 0; i < a.shells.size(); ++i)
    CHECK(same_bits(a.shells[i].min_value, b.shells[i].min_value));
}

}  // namespace

TEST_CASE("index fan-out fills every slot exactly once under any policy") {
  const int n = 257;
  for (const ExecConfig& cfg : kConfigs) {
    std::vector<long> slot(n, -1);
    for_each_index(n, cfg, [&](int i) { slot[i] = 3L * i + 1; });
    for (int i = 0; i < n; ++i) REQUIRE(slot[i] == 3L * i + 1);
  }
}

TEST_CASE("two-dimensional shell sampling is bit-identical across policies") {
  const Instance inst = load_shipped("lp-quadrant");
  const HandlePtr f = instance_function(inst);
  LiminfQuery query;
  query.center = inst.center;
  query.shells = 10;
  query.samples_per_shell = 64;

  const ModulusEstimate ref =
      estimate_er_under(f, inst.center, 0.5, query, kConfigs.front());
  for (std::size_t k = 1; k < kConfigs.size(); ++k) {
    const ModulusEstimate got =
        estimate_er_under(f, inst.center, 0.5, query, kConfigs[k]);
    CHECK(same_bits(ref.value, got.value));
    require_identical(ref.trace, got.trace);
  }
}

TEST_CASE("calmness sampling with an inner solver is bit-identical too") {
  const Instance inst = load_shipped("sip-remark");
  LiminfQuery query;
  query.center = inst.center;
  query.shells = 8;
  query.samples_per_shell = 4;

  const CalmnessReport ref =
      estimate_clm(*inst.program, inst.center, 1.0, MapKind::PartialS_c,
                   query, kConfigs.front());
  for (std::size_t k = 1; k < kConfigs.size(); ++k) {
    const CalmnessReport got =
        estimate_clm(*inst.program, inst.center, 1.0, MapKind::PartialS_c,
                     query, kConfigs[k]);
    CHECK(ref.verdict == got.verdict);
    CHECK(same_bits(ref.estimate.value, got.estimate.value));
    require_identical(ref.estimate.trace, got.estimate.trace);
  }
}
