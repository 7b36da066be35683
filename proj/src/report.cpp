#include "hb/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <utility>

namespace hb {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string to_string(ModulusKind k) {
  switch (k) {
    case ModulusKind::Er: return "Er";
    case ModulusKind::ErUnder: return "ErUnder";
    case ModulusKind::ErUnderPrime: return "ErUnderPrime";
    case ModulusKind::Clm: return "Clm";
  }
  return "?";
}

std::string to_string(MapKind k) {
  switch (k) {
    case MapKind::FullS: return "full";
    case MapKind::PartialS_c: return "partial";
    case MapKind::LevelL: return "level";
  }
  return "?";
}

std::string to_string(CalmVerdict v) {
  switch (v) {
    case CalmVerdict::Calm: return "CALM";
    case CalmVerdict::NotCalm: return "NOT-CALM";
    case CalmVerdict::Inconclusive: return "INCONCLUSIVE";
    case CalmVerdict::Vacuous: return "VACUOUS";
  }
  return "?";
}

std::string to_string(ConditionVariant v) {
  switch (v) {
    case ConditionVariant::T31: return "t31";
    case ConditionVariant::T32: return "t32";
    case ConditionVariant::T33: return "t33";
    case ConditionVariant::C314: return "c314";
    case ConditionVariant::T37: return "t37";
    case ConditionVariant::P316: return "p316";
  }
  return "?";
}

std::string to_string(GateMode m) {
  return m == GateMode::Distance ? "distance" : "simplified";
}

void write_meta(std::ostream& os, const ReportMeta& meta) {
  os << "# command: " << meta.command << "\n";
  if (!meta.instance_name.empty()) {
    os << "# instance: " << meta.instance_name << "\n";
    os << "# instance-hash: " << hash_hex(meta.instance_hash) << "\n";
  }
  os << "# seed: " << meta.seed << "\n";
  if (!meta.schedule.empty()) os << "# schedule: " << meta.schedule << "\n";
  if (meta.timestamp) {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::tm tm_utc;
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    os << "# generated: " << buf << "\n";
  }
}

void write_shell_csv(std::ostream& os, const LiminfTrace& trace) {
  os << "shell,radius,inner,admitted,min_value,ceiling,f_min,f_max\n";
  for (std::size_t k = 0; k < trace.shells.size(); ++k) {
    const ShellRow& r = trace.shells[k];
    os << k << ',' << format_double(r.radius) << ',' << format_double(r.inner)
       << ',' << r.admitted << ',' << format_double(r.min_value) << ','
       << format_double(r.ceiling) << ',' << format_double(r.f_min) << ','
       << format_double(r.f_max) << "\n";
  }
}

void write_sample_csv(std::ostream& os, const LiminfTrace& trace) {
  int dim = 0;
  for (const SampleRow& s : trace.samples) {
    dim = static_cast<int>(s.x.size());
    break;
  }
  os << "shell,radius";
  for (int d = 0; d < dim; ++d) os << ",x" << d;
  os << ",fx,dist,subdist,ratio\n";
  for (const SampleRow& s : trace.samples) {
    const double radius =
        s.shell >= 0 && s.shell < static_cast<int>(trace.shells.size())
            ? trace.shells[static_cast<std::size_t>(s.shell)].radius
            : 0.0;
    os << s.shell << ',' << format_double(radius);
    for (int d = 0; d < s.x.size(); ++d) os << ',' << format_double(s.x(d));
    os << ',' << format_double(s.fx) << ',' << format_double(s.dist) << ','
       << format_double(s.subdist) << ',' << format_double(s.ratio) << "\n";
  }
}

TextTable::TextTable(std::vector<std::string> header) {
  rows_.push_back(std::move(header));
}

void TextTable::add_row(std::vector<std::string> cells) {
  rows_.push_back(std::move(cells));
}

void TextTable::print(std::ostream& os) const {
  std::vector<std::size_t> width;
  for (const auto& row : rows_) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c)
      width[c] = std::max(width[c], row[c].size());
  }
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    for (std::size_t c = 0; c < rows_[r].size(); ++c) {
      os << rows_[r][c];
      if (c + 1 < rows_[r].size())
        os << std::string(width[c] - rows_[r][c].size() + 2, ' ');
    }
    os << "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < width.size(); ++c)
        total += width[c] + (c + 1 < width.size() ? 2 : 0);
      os << std::string(total, '-') << "\n";
    }
  }
}

std::string resolve_out_dir(const std::string& cli_value) {
  if (!cli_value.empty()) return cli_value;
  if (const char* env = std::getenv("HB_OUT_DIR"); env && *env) return env;
  return "reports";
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec)
    throw Error(ErrorCode::Internal,
                "cannot create output directory '" + path + "': " +
                    ec.message());
}

std::string path_join(const std::string& dir, const std::string& file) {
  if (dir.empty()) return file;
  if (dir.back() == '/') return dir + file;
  return dir + "/" + file;
}

}  // namespace hb
