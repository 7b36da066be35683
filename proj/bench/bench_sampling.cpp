// Wall-clock comparison of the OpenMP fan-out against the serial reference
// on the two sampling kernels (shell estimates and calmness probing), with a
// bitwise equality check of the traces.  Build target: hb_bench.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "hb/calmness.hpp"
#include "hb/instance.hpp"
#include "hb/moduli.hpp"
#include "hb/parallel.hpp"

using namespace hb;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

bool traces_match(const LiminfTrace& a, const LiminfTrace& b) {
  if (a.samples.size() != b.samples.size()) return false;
  if (std::memcmp(&a.extracted_value, &b.extracted_value, sizeof(double)))
    return false;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    if (std::memcmp(&a.samples[i].fx, &b.samples[i].fx, sizeof(double)))
      return false;
    if (std::memcmp(&a.samples[i].ratio, &b.samples[i].ratio,
                    sizeof(double)))
      return false;
  }
  return true;
}

struct Lane {
  std::string label;
  ExecConfig cfg;
};

const std::vector<Lane> kLanes = {
    {"serial reference", {ExecPolicy::Serial, 0}},
    {"parallel (1 worker)", {ExecPolicy::Parallel, 1}},
    {"parallel (2 workers)", {ExecPolicy::Parallel, 2}},
    {"parallel (default)", {ExecPolicy::Parallel, 0}},
};

}  // namespace

int main() {
  const Instance quadrant = load_shipped("lp-quadrant");
  const HandlePtr f = instance_function(quadrant);
  LiminfQuery shells;
  shells.center = quadrant.center;
  shells.shells = 10;
  shells.samples_per_shell = 4096;

  std::printf("shell-sampling kernel: %d shells x %d samples, 2-d\n",
              shells.shells, shells.samples_per_shell);
  LiminfTrace reference;
  for (const Lane& lane : kLanes) {
    const auto t0 = Clock::now();
    const ModulusEstimate est =
        estimate_er_under(f, quadrant.center, 0.5, shells, lane.cfg);
    const double ms = ms_since(t0);
    const bool first = lane.label == kLanes.front().label;
    if (first) reference = est.trace;
    std::printf("  %-22s %9.2f ms   estimate %.12g   identical: %s\n",
                lane.label.c_str(), ms, est.value,
                first ? "(reference)"
                      : (traces_match(reference, est.trace) ? "yes" : "NO"));
  }

  const Instance remark = load_shipped("sip-remark");
  LiminfQuery probes;
  probes.center = remark.center;
  probes.shells = 12;
  probes.samples_per_shell = 48;

  std::printf("\ncalmness kernel: %d shells x %d perturbations, inner solves\n",
              probes.shells, probes.samples_per_shell);
  LiminfTrace clm_reference;
  for (const Lane& lane : kLanes) {
    const auto t0 = Clock::now();
    const CalmnessReport rep =
        estimate_clm(*remark.program, remark.center, 1.0,
                     MapKind::PartialS_c, probes, lane.cfg);
    const double ms = ms_since(t0);
    const bool first = lane.label == kLanes.front().label;
    if (first) clm_reference = rep.estimate.trace;
    std::printf("  %-22s %9.2f ms   estimate %.12g   identical: %s\n",
                lane.label.c_str(), ms, rep.estimate.value,
                first ? "(reference)"
                      : (traces_match(clm_reference, rep.estimate.trace)
                             ? "yes"
                             : "NO"));
  }
  return 0;
}
