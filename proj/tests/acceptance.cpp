// Standalone acceptance runner: one line per criterion, exit 1 on any FAIL.

#include <cstdio>
#include <string>

#include "hb/repro.hpp"

int main(int argc, char** argv) {
  const std::string only = argc > 1 ? argv[1] : "";
  const hb::AcceptanceSummary summary = hb::run_acceptance(only);
  if (summary.rows.empty()) {
    std::printf("no acceptance rows match '%s'\n", only.c_str());
    return 1;
  }
  for (const hb::AcceptanceRow& row : summary.rows)
    std::printf("[%s] %-4s %s | %s\n", row.pass ? "PASS" : "FAIL",
                row.id.c_str(), row.title.c_str(), row.detail.c_str());
  const bool ok = summary.all_pass();
  std::printf("%zu rows, %s\n", summary.rows.size(),
              ok ? "all pass" : "FAILURES PRESENT");
  return ok ? 0 : 1;
}
