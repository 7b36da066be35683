#pragma once

// ===== report emission =======================================================
//
// Plain structured-text tables plus comma-separated trace files — no plotting
// dependency, just plot-ready columns (radius vs ratio).  Every number goes
// through one formatter so that reruns with the same configuration and seed
// produce byte-identical files; the only nondeterministic line is the
// timestamp header, and it can be suppressed.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "hb/calmness.hpp"
#include "hb/moduli.hpp"

namespace hb {

/// Shortest-round-trip style formatting: %.12g with named non-finites
/// ("inf", "-inf", "nan") so CSV consumers and file diffs agree exactly.
std::string format_double(double v);

/// 16-digit zero-padded lowercase hex (used for instance file hashes).
std::string hash_hex(std::uint64_t h);

std::string to_string(ModulusKind k);
std::string to_string(MapKind k);
std::string to_string(CalmVerdict v);
std::string to_string(ConditionVariant v);
std::string to_string(GateMode m);

/// Header block shared by all report files, emitted as '#' comment lines.
struct ReportMeta {
  std::string command;
  std::string instance_name;
  std::uint64_t instance_hash = 0;
  std::uint64_t seed = 0;
  std::string schedule;  // r0/gamma/shells/samples/tail summary
  bool timestamp = true; // false => byte-identical reruns
};

void write_meta(std::ostream& os, const ReportMeta& meta);

/// Per-shell table: shell,radius,inner,admitted,min_value,ceiling,f_min,f_max
void write_shell_csv(std::ostream& os, const LiminfTrace& trace);

/// Plot-ready per-sample columns: shell, radius(=|x - center| proxy via
/// shell), coordinates, fx, dist, subdist, ratio.
void write_sample_csv(std::ostream& os, const LiminfTrace& trace);

/// Fixed-width plain-text table; column widths fit the widest cell.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header);
  void add_row(std::vector<std::string> cells);
  void print(std::ostream& os) const;

 private:
  std::vector<std::vector<std::string>> rows_;
};

/// Output directory resolution: explicit value > HB_OUT_DIR > "reports".
std::string resolve_out_dir(const std::string& cli_value);

/// mkdir -p; throws Error(Internal) when the directory cannot be created.
void ensure_dir(const std::string& path);

std::string path_join(const std::string& dir, const std::string& file);

}  // namespace hb
