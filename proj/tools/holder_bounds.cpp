// ===== holder-bounds =========================================================
//
// Command-line surface of the library: four commands over one instance file.
//
//   modulus    shell-sampled modulus estimates and the ordering inequality
//   verify     pointwise sufficient conditions and a direct bound audit
//   sip        program analysis: certificates, calmness, subset upper bound
//   reproduce  the consolidated reproduction suite over the shipped library
//
// Reports are plain text tables plus CSV traces.  With a fixed configuration
// and seed the emitted files are byte-identical across runs and worker
// counts; the only varying line is the timestamp header, which
// --no-timestamp suppresses.
//
// Exit codes: 0 ok, 1 reproduction failure, 2 parse error, 3 precondition
// failure, 4 a claimed condition is violated on samples.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hb/calmness.hpp"
#include "hb/geometry.hpp"
#include "hb/instance.hpp"
#include "hb/moduli.hpp"
#include "hb/report.hpp"
#include "hb/repro.hpp"
#include "hb/sip.hpp"

namespace {

using namespace hb;

struct CommonOpts {
  std::string instance;
  std::vector<double> q;
  std::uint64_t seed = 0;
  std::string out;
  int workers = 0;
  bool serial = false;
  bool no_timestamp = false;
  double r0 = 0.5;
  double gamma = 0.5;
  int shells = 20;
  int samples = 0;
  int tail = 5;
  double box_radius = 8.0;
  double floor = 1e-14;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_instance) {
  if (with_instance)
    cmd->add_option("--instance", o.instance,
                    "instance file path, or the name of a shipped instance")
        ->required();
  cmd->add_option("--q", o.q, "order(s) q of the bound under study");
  cmd->add_option("--seed", o.seed, "sampling seed (default 0)");
  cmd->add_option("--out", o.out,
                  "report directory (default: $HB_OUT_DIR or ./reports)");
  cmd->add_option("--workers", o.workers,
                  "cap the sampling fan-out (0 = library default)");
  cmd->add_flag("--serial", o.serial,
                "run the serial reference path instead of the parallel one");
  cmd->add_flag("--no-timestamp", o.no_timestamp,
                "omit the timestamp header for byte-identical reruns");
  cmd->add_option("--r0", o.r0, "outermost shell radius");
  cmd->add_option("--gamma", o.gamma, "shell decay factor in (0,1)");
  cmd->add_option("--shells", o.shells, "last shell index");
  cmd->add_option("--samples", o.samples,
                  "samples per shell (0 = schedule default)");
  cmd->add_option("--tail", o.tail, "tail shells used for the extraction");
  cmd->add_option("--box-radius", o.box_radius,
                  "search box half-width for distances");
  cmd->add_option("--floor", o.floor,
                  "positivity floor below which f(x) counts as zero");
}

ExecConfig exec_of(const CommonOpts& o) {
  return ExecConfig{o.serial ? ExecPolicy::Serial : ExecPolicy::Parallel,
                    o.workers};
}

LiminfQuery query_of(const CommonOpts& o, const Vec& center) {
  LiminfQuery q;
  q.center = center;
  q.r0 = o.r0;
  q.gamma = o.gamma;
  q.shells = o.shells;
  q.samples_per_shell = o.samples;
  q.tail = o.tail;
  q.seed = o.seed;
  q.box_radius = o.box_radius;
  q.positivity_floor = o.floor;
  return q;
}

std::string schedule_of(const CommonOpts& o) {
  return "r0=" + format_double(o.r0) + " gamma=" + format_double(o.gamma) +
         " shells=" + std::to_string(o.shells) +
         " samples=" + std::to_string(o.samples) +
         " tail=" + std::to_string(o.tail) +
         " box=" + format_double(o.box_radius);
}

ReportMeta meta_of(const CommonOpts& o, const std::string& command,
                   const Instance* inst) {
  ReportMeta m;
  m.command = command;
  if (inst) {
    m.instance_name = inst->name;
    m.instance_hash = inst->hash;
  }
  m.seed = o.seed;
  m.schedule = schedule_of(o);
  m.timestamp = !o.no_timestamp;
  return m;
}

/// A bare name (no path separator, no extension) refers to the shipped
/// instance library.
Instance load_from_flag(const std::string& value) {
  if (value.find('/') == std::string::npos &&
      value.find(".json") == std::string::npos)
    return load_shipped(value);
  return load_instance(value);
}

/// Exact distance to the solved base solution set; used for program
/// instances, whose sup-function sublevel set can degenerate to one point.
DistanceFn solution_distance_fn(const SIProgram& P) {
  const SolutionSet s = solve(P, P.is_affine());
  FinGenConvexSet S;
  S.is_empty = s.points.empty();
  S.dim = P.n;
  S.generators = s.points;
  S.rays = s.rays;
  return [S](const Vec& x) {
    if (S.is_empty) return kInf;
    return min_norm_point(S.translated(-x)).norm;
  };
}

void emit(const std::string& out_dir, const std::string& file,
          const std::string& content) {
  ensure_dir(out_dir);
  std::ofstream os(path_join(out_dir, file));
  if (!os)
    throw Error(ErrorCode::Internal,
                "cannot write report file " + path_join(out_dir, file));
  os << content;
}

void emit_trace(const std::string& out_dir, const std::string& stem,
                const ReportMeta& meta, const LiminfTrace& trace) {
  std::ostringstream shells;
  write_meta(shells, meta);
  write_shell_csv(shells, trace);
  emit(out_dir, stem + "-shells.csv", shells.str());
  std::ostringstream samples;
  write_meta(samples, meta);
  write_sample_csv(samples, trace);
  emit(out_dir, stem + "-samples.csv", samples.str());
}

std::string point_str(const Vec& x) {
  std::string s = "(";
  for (int d = 0; d < x.size(); ++d)
    s += (d ? ", " : "") + format_double(x(d));
  return s + ")";
}

// ===== modulus ===============================================================

int cmd_modulus(const CommonOpts& o) {
  const Instance inst = load_from_flag(o.instance);
  const HandlePtr f = instance_function(inst);
  DistanceFn dist;
  if (inst.program) dist = solution_distance_fn(*inst.program);
  const ExecConfig exec = exec_of(o);
  const std::string out_dir = resolve_out_dir(o.out);
  const ReportMeta meta = meta_of(o, "modulus", &inst);

  std::ostringstream rep;
  write_meta(rep, meta);
  TextTable table({"q", "Er", "ErUnder", "ErUnderPrime", "ordering",
                   "tolerance"});
  const std::vector<double> qs = o.q.empty() ? std::vector<double>{0.5} : o.q;
  for (double q : qs) {
    const auto er = estimate_er(f, inst.center, q, query_of(o, inst.center),
                                exec, dist);
    const auto eu =
        estimate_er_under(f, inst.center, q, query_of(o, inst.center), exec);
    const std::string qid = "q" + format_double(q);
    emit_trace(out_dir, "modulus-" + qid + "-er", meta, er.trace);
    emit_trace(out_dir, "modulus-" + qid + "-under", meta, eu.trace);
    std::string prime = "-", ordering = "-", tolerance = "-";
    if (q <= 1.0) {
      const auto ord = check_ordering_inequality(
          f, inst.center, q, query_of(o, inst.center), exec, dist);
      emit_trace(out_dir, "modulus-" + qid + "-underprime", meta,
                 ord.er_under_prime.trace);
      prime = format_double(ord.er_under_prime.value);
      ordering = ord.holds ? "holds" : "VIOLATED";
      tolerance = format_double(ord.tolerance);
    }
    table.add_row({format_double(q), format_double(er.value),
                   format_double(eu.value), prime, ordering, tolerance});
  }
  table.print(rep);
  emit(out_dir, "modulus-summary.txt", rep.str());
  std::cout << rep.str();
  return 0;
}

// ===== verify ================================================================

int cmd_verify(const CommonOpts& o, const std::string& variant,
               const std::string& gate, double tau, double lambda, double beta,
               double delta, double value_cap) {
  static const std::map<std::string, ConditionVariant> variants = {
      {"t31", ConditionVariant::T31},   {"t32", ConditionVariant::T32},
      {"t33", ConditionVariant::T33},   {"c314", ConditionVariant::C314},
      {"t37", ConditionVariant::T37},   {"p316", ConditionVariant::P316}};
  const Instance inst = load_from_flag(o.instance);
  const HandlePtr f = instance_function(inst);
  DistanceFn dist;
  if (inst.program) dist = solution_distance_fn(*inst.program);
  const ExecConfig exec = exec_of(o);

  ConditionParams params;
  params.variant = variants.at(variant);
  params.q = o.q.empty() ? 1.0 : o.q.front();
  params.tau = tau;
  params.delta = delta;
  params.gate_mode =
      gate == "simplified" ? GateMode::Simplified : GateMode::Distance;
  params.lambda = lambda;
  params.beta = beta;
  params.value_cap = value_cap;

  const auto cond = check_condition(f, inst.center, params,
                                    query_of(o, inst.center), exec, dist);
  const double audit_delta = std::isfinite(delta) ? delta : o.r0;
  const auto audit =
      certify_error_bound(f, inst.center, params.q, tau, audit_delta,
                          query_of(o, inst.center), exec, dist);

  const ReportMeta meta = meta_of(o, "verify", &inst);
  std::ostringstream rep;
  write_meta(rep, meta);
  rep << "variant: " << variant << "  gate: " << to_string(params.gate_mode)
      << "  q: " << format_double(params.q)
      << "  tau: " << format_double(tau);
  if (params.variant == ConditionVariant::T37)
    rep << "  lambda: " << format_double(lambda);
  if (params.variant == ConditionVariant::P316)
    rep << "  beta: " << format_double(beta);
  rep << "  delta: " << format_double(delta) << "\n\n";

  // The sufficient condition is useful in three distinct ways, and the
  // verdict keeps them apart: FAIL — the claimed inequality is violated at
  // listed samples; PASS — it holds wherever the gate admits samples (a gate
  // that admits nothing is fine as long as the audited conclusion holds);
  // VACUOUS — the gate admits nothing AND the conclusion fails, i.e. the
  // condition says nothing about a bound that is actually false.
  std::string verdict, note;
  if (!cond.holds_on_samples) {
    verdict = "FAIL";
    note = "condition violated at " + std::to_string(cond.violation_count) +
           " of " + std::to_string(cond.gated_count) + " gated samples";
  } else if (!cond.vacuous) {
    verdict = "PASS";
    note = "condition holds at all " + std::to_string(cond.gated_count) +
           " gated samples";
  } else if (audit.holds_on_samples) {
    verdict = "PASS";
    note = "hypothesis vacuous (gate admits nothing); the claimed bound "
           "itself holds at all audited samples";
  } else {
    verdict = "VACUOUS";
    note = "gate admits nothing, and the claimed bound is violated at " +
           std::to_string(audit.violation_count) + " of " +
           std::to_string(audit.sample_count) + " audited samples";
  }
  rep << "verdict: " << verdict << "  (" << note << ")\n\n";

  rep << "hypothesis check\n";
  rep << "  samples with f > 0: " << cond.sample_count << "\n";
  rep << "  gated samples:      " << cond.gated_count << "\n";
  rep << "  violations:         " << cond.violation_count << "\n";
  rep << "  status:             "
      << (cond.vacuous ? "VACUOUS"
                       : (cond.holds_on_samples ? "PASS" : "FAIL"))
      << (cond.box_limited ? "  (ball truncated to the sampling box)" : "")
      << "\n";
  if (!cond.violating_points.empty()) {
    rep << "  violating points (first " << cond.violating_points.size()
        << "):\n";
    TextTable viol({"x", "f(x)", "lhs", "rhs"});
    for (const PointCheck& p : cond.violating_points)
      viol.add_row({point_str(p.x), format_double(p.fx),
                    format_double(p.lhs), format_double(p.rhs)});
    std::ostringstream vt;
    viol.print(vt);
    std::istringstream lines(vt.str());
    std::string line;
    while (std::getline(lines, line)) rep << "    " << line << "\n";
  }

  rep << "\nconclusion audit (tau * d <= f_+^q on the delta-ball)\n";
  rep << "  samples:    " << audit.sample_count << "\n";
  rep << "  violations: " << audit.violation_count << "\n";
  rep << "  status:     "
      << (audit.vacuous ? "VACUOUS"
                        : (audit.holds_on_samples ? "holds" : "VIOLATED"))
      << "\n";

  const std::string out_dir = resolve_out_dir(o.out);
  emit(out_dir, "verify-summary.txt", rep.str());
  std::cout << rep.str();
  return !cond.vacuous && !cond.holds_on_samples ? 4 : 0;
}

// ===== sip ===================================================================

int cmd_sip(const CommonOpts& o, bool analyze, bool clm, bool upper_bound,
            const std::string& map_name, double theta, int sweep_index) {
  const Instance inst = load_from_flag(o.instance);
  if (!inst.program)
    throw Error(ErrorCode::Precondition,
                "sip requires a program instance; '" + inst.name +
                    "' has kind '" + inst.kind + "'");
  const SIProgram& P = *inst.program;
  const ExecConfig exec = exec_of(o);
  const std::string out_dir = resolve_out_dir(o.out);
  const ReportMeta meta = meta_of(o, "sip", &inst);
  if (!analyze && !clm && !upper_bound) analyze = true;

  std::ostringstream rep;
  write_meta(rep, meta);

  if (analyze) {
    const SolutionSet s = solve(P, P.is_affine());
    rep << "base solve\n";
    rep << "  optimal point: " << point_str(s.point()) << "\n";
    rep << "  objective:     " << format_double(s.objective) << "\n";
    if (s.certificate) {
      rep << "  certificate support:";
      for (const KKTSupport& sup : s.certificate->support)
        rep << " (t=" << sup.t << ", gamma=" << format_double(sup.gamma)
            << ")";
      rep << "\n";
    }
    const auto slater = slater_point(P);
    rep << "  strict feasibility: " << (slater ? "yes" : "no");
    if (slater) rep << "  (witness " << point_str(*slater) << ")";
    rep << "\n";
    const EncReport enc = enc_check(P, s.point());
    rep << "  nondegeneracy: " << (enc.enc_holds ? "holds" : "fails");
    if (enc.violating_D) {
      rep << "  (violating subset {";
      for (std::size_t i = 0; i < enc.violating_D->size(); ++i)
        rep << (i ? "," : "") << (*enc.violating_D)[i];
      rep << "})";
    }
    rep << "  [" << enc.subsets_tested << " subsets tested]\n\n";

    if (sweep_index < 0 || sweep_index >= P.grid.size())
      throw Error(ErrorCode::Precondition,
                  "sweep index out of range for the instance grid");
    rep << "right-hand-side sweep on constraint index " << sweep_index
        << "\n";
    TextTable sweep({"delta", "b", "x*", "objective"});
    for (int k = -9; k <= 9; ++k) {
      const double delta = 0.1 * k;
      SIProgram Q = P;
      Q.b(sweep_index) = P.b(sweep_index) + delta;
      std::string xs = "infeasible", obj = "-";
      try {
        const SolutionSet sq = solve(Q);
        if (sq.feasible) {
          xs = point_str(sq.point());
          obj = format_double(sq.objective);
        }
      } catch (const Error& e) {
        xs = std::string("solver error: ") + e.what();
      }
      sweep.add_row({format_double(delta), format_double(Q.b(sweep_index)),
                     xs, obj});
    }
    sweep.print(rep);
    rep << "\n";
  }

  if (clm) {
    static const std::map<std::string, MapKind> maps = {
        {"full", MapKind::FullS},
        {"partial", MapKind::PartialS_c},
        {"level", MapKind::LevelL}};
    const MapKind kind = maps.at(map_name);
    rep << "calmness estimates (theta = " << format_double(theta) << ")\n";
    TextTable table({"map", "q", "verdict", "estimate", "admitted",
                     "solver-failures", "infeasible"});
    const std::vector<double> qs =
        o.q.empty() ? std::vector<double>{1.0} : o.q;
    for (double q : qs) {
      const CalmnessReport r = estimate_clm(P, inst.center, q, kind,
                                            query_of(o, inst.center), exec,
                                            theta);
      table.add_row({to_string(kind), format_double(q), to_string(r.verdict),
                     format_double(r.estimate.value),
                     std::to_string(r.admitted),
                     std::to_string(r.solver_failures),
                     std::to_string(r.infeasible_samples)});
      emit_trace(out_dir,
                 "sip-clm-" + to_string(kind) + "-q" + format_double(q), meta,
                 r.estimate.trace);
    }
    table.print(rep);
    rep << "\n";
  }

  if (upper_bound) {
    const double q = o.q.empty() ? 1.0 : o.q.front();
    const UpperBoundT602 ub =
        upper_bound_T602(P, inst.center, q, query_of(o, inst.center), exec);
    rep << "subset upper bound (q = " << format_double(q) << ")\n";
    TextTable table({"subset D", "estimate", "tail spread"});
    for (const auto& entry : ub.per_subset) {
      std::string ds = "{";
      for (std::size_t i = 0; i < entry.first.size(); ++i)
        ds += (i ? "," : "") + std::to_string(entry.first[i]);
      ds += "}";
      table.add_row({ds, format_double(entry.second.value),
                     format_double(entry.second.trace.tail_spread())});
    }
    table.print(rep);
    std::string ws = "{";
    for (std::size_t i = 0; i < ub.witness_D.size(); ++i)
      ws += (i ? "," : "") + std::to_string(ub.witness_D[i]);
    ws += "}";
    rep << "bound: " << format_double(ub.bound) << "  witness: " << ws
        << "\n";
  }

  emit(out_dir, "sip-summary.txt", rep.str());
  std::cout << rep.str();
  return 0;
}

// ===== reproduce =============================================================

int cmd_reproduce(const CommonOpts& o, const std::string& only) {
  // Validate the shipped library first so a corrupted file is a parse error,
  // not a row failure.
  for (const std::string& name : shipped_instance_names())
    (void)load_shipped(name);

  const AcceptanceSummary summary = run_acceptance(only, exec_of(o));
  ReportMeta meta = meta_of(o, "reproduce", nullptr);
  std::ostringstream rep;
  write_meta(rep, meta);
  if (summary.rows.empty()) {
    rep << "no rows match '" << only << "'\n";
    std::cout << rep.str();
    emit(resolve_out_dir(o.out), "reproduce.txt", rep.str());
    return 1;
  }
  TextTable table({"status", "id", "check", "measured"});
  for (const AcceptanceRow& row : summary.rows)
    table.add_row({row.pass ? "PASS" : "FAIL", row.id, row.title, row.detail});
  table.print(rep);
  rep << summary.rows.size() << " rows, "
      << (summary.all_pass() ? "all pass" : "FAILURES PRESENT") << "\n";
  emit(resolve_out_dir(o.out), "reproduce.txt", rep.str());
  std::cout << rep.str();
  return summary.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shell-sampled error-bound moduli and calmness analysis"};
  app.require_subcommand(1);

  CommonOpts mod_opts;
  CLI::App* mod = app.add_subcommand(
      "modulus", "modulus estimates and the ordering inequality");
  add_common(mod, mod_opts, true);

  CommonOpts ver_opts;
  std::string variant;
  std::string gate = "distance";
  double tau = 1.0, lambda = 0.0, beta = 0.0, delta = kInf, value_cap = kInf;
  CLI::App* ver = app.add_subcommand(
      "verify", "pointwise sufficient conditions with a direct bound audit");
  add_common(ver, ver_opts, true);
  ver->add_option("--variant", variant, "condition to check")
      ->required()
      ->check(CLI::IsMember({"t31", "t32", "t33", "c314", "t37", "p316"}));
  ver->add_option("--gate", gate, "gate reference: distance or norm")
      ->check(CLI::IsMember({"distance", "simplified"}));
  ver->add_option("--tau", tau, "claimed modulus");
  ver->add_option("--lambda", lambda, "mixing weight of the t37 variant");
  ver->add_option("--beta", beta, "gate slope of the p316 variant");
  ver->add_option("--delta", delta, "ball radius of the claim");
  ver->add_option("--value-cap", value_cap, "extra gate f(x) < cap");

  CommonOpts sip_opts;
  bool analyze = false, clm = false, upper = false;
  std::string map_name = "partial";
  double theta = 1e-3;
  int sweep_index = 0;
  CLI::App* sip = app.add_subcommand(
      "sip", "program analysis: certificates, calmness, subset upper bound");
  add_common(sip, sip_opts, true);
  sip->add_flag("--analyze", analyze,
                "certificates, nondegeneracy, right-hand-side sweep");
  sip->add_flag("--clm", clm, "sampled calmness estimates");
  sip->add_flag("--upper-bound", upper, "subset upper bound on the modulus");
  sip->add_option("--map", map_name, "mapping for --clm")
      ->check(CLI::IsMember({"full", "partial", "level"}));
  sip->add_option("--theta", theta, "calm-vs-not decision threshold");
  sip->add_option("--sweep-index", sweep_index,
                  "constraint index swept by --analyze");

  CommonOpts rep_opts;
  std::string only;
  CLI::App* rep = app.add_subcommand(
      "reproduce", "run the consolidated reproduction suite");
  add_common(rep, rep_opts, false);
  rep->add_option("--only", only, "filter rows by id or tag substring");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (mod->parsed()) return cmd_modulus(mod_opts);
    if (ver->parsed())
      return cmd_verify(ver_opts, variant, gate, tau, lambda, beta, delta,
                        value_cap);
    if (sip->parsed())
      return cmd_sip(sip_opts, analyze, clm, upper, map_name, theta,
                     sweep_index);
    if (rep->parsed()) return cmd_reproduce(rep_opts, only);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::Parse ? 2 : 3;
  }
  return 0;
}
