#pragma once

// ===== reproduction suite ====================================================
//
// The consolidated battery of quantitative checks the toolkit is expected to
// reproduce on its shipped instance library: closed-form modulus values,
// exact per-sample invariants, calmness verdicts, ramp postconditions, and
// cross-checks of the geometric oracles against brute force.  Each row
// carries the measured numbers so a failing run is diagnosable from the
// report alone; every tolerance is pinned here, not configurable.

#include <string>
#include <vector>

#include "hb/parallel.hpp"

namespace hb {

struct AcceptanceRow {
  std::string id;     // stable row key: c1 .. c12
  std::string title;  // what the row checks, in plain words
  std::vector<std::string> tags;  // filter keys (instance names, topics)
  bool pass = false;
  std::string detail;  // measured values, one line
};

struct AcceptanceSummary {
  std::vector<AcceptanceRow> rows;

  bool all_pass() const;
};

/// Run the suite.  `only` filters rows whose id equals it or whose tag list
/// contains it as a substring; empty runs everything.  Rows that throw are
/// reported as failures with the error message, never skipped silently.
AcceptanceSummary run_acceptance(const std::string& only = {},
                                 const ExecConfig& exec = {});

}  // namespace hb
