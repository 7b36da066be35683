#include "hb/instance.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace hb {

namespace {

using nlohmann::json;

constexpr const char* kSchema = "hb-instance/1";

[[noreturn]] void fail(const std::string& what) {
  throw Error(ErrorCode::Parse, what);
}

const json& field(const json& j, const char* key, const char* where) {
  const auto it = j.find(key);
  if (it == j.end())
    fail(std::string("missing field '") + key + "' in " + where);
  return *it;
}

double number(const json& j, const char* where) {
  if (!j.is_number()) fail(std::string(where) + " must be a number");
  return j.get<double>();
}

std::string text(const json& j, const char* where) {
  if (!j.is_string()) fail(std::string(where) + " must be a string");
  return j.get<std::string>();
}

Vec parse_vec(const json& j, const char* where) {
  if (!j.is_array()) fail(std::string(where) + " must be an array of numbers");
  Vec v(static_cast<int>(j.size()));
  int i = 0;
  for (const json& e : j) v(i++) = number(e, where);
  return v;
}

Term parse_term(const json& j) {
  if (!j.is_object()) fail("term entries must be objects");
  Term t;
  t.coeff = number(field(j, "coeff", "term"), "term coeff");
  t.exponents = parse_vec(field(j, "exponents", "term"), "term exponents");
  return t;
}

SmoothPiece parse_piece(const json& j) {
  if (!j.is_object()) fail("piece entries must be objects");
  SmoothPiece p;
  if (j.contains("constant")) p.constant = number(j["constant"], "constant");
  if (j.contains("convex")) {
    if (!j["convex"].is_boolean()) fail("piece 'convex' must be a boolean");
    p.convex = j["convex"].get<bool>();
  }
  if (j.contains("terms")) {
    if (!j["terms"].is_array()) fail("piece 'terms' must be an array");
    for (const json& e : j["terms"]) p.terms.push_back(parse_term(e));
  }
  return p;
}

std::vector<SmoothPiece> parse_pieces(const json& j, const char* where) {
  if (!j.is_array()) fail(std::string(where) + " must be an array of pieces");
  std::vector<SmoothPiece> out;
  out.reserve(j.size());
  for (const json& e : j) out.push_back(parse_piece(e));
  return out;
}

FunctionHandle parse_function(const json& j) {
  if (!j.is_object()) fail("'function' must be an object");
  const std::string form = text(field(j, "form", "function"), "form");
  std::string label;
  if (j.contains("label")) label = text(j["label"], "label");

  if (form == "smooth") {
    const int dim = static_cast<int>(number(field(j, "dim", "function"),
                                            "function dim"));
    return FunctionHandle::smooth(parse_piece(field(j, "piece", "function")),
                                  dim, label);
  }
  if (form == "max") {
    const int dim = static_cast<int>(number(field(j, "dim", "function"),
                                            "function dim"));
    return FunctionHandle::max_family(
        parse_pieces(field(j, "pieces", "function"), "pieces"), dim, label);
  }
  if (form == "piecewise1d") {
    const Vec bp = parse_vec(field(j, "breakpoints", "function"),
                             "breakpoints");
    std::vector<double> breakpoints(bp.data(), bp.data() + bp.size());
    return FunctionHandle::piecewise1d(
        std::move(breakpoints),
        parse_pieces(field(j, "pieces", "function"), "pieces"), label);
  }
  if (form == "power") {
    FunctionHandle inner = parse_function(field(j, "inner", "function"));
    return FunctionHandle::power_wrap(
        std::move(inner), number(field(j, "exponent", "function"),
                                 "exponent"));
  }
  if (form == "plus") {
    FunctionHandle inner = parse_function(field(j, "inner", "function"));
    return FunctionHandle::plus_part(std::move(inner));
  }
  fail("unknown function form '" + form + "'");
}

SIProgram parse_program(const json& j) {
  if (!j.is_object()) fail("'program' must be an object");
  SIProgram P;
  P.n = static_cast<int>(number(field(j, "n", "program"), "program n"));
  P.objective_f = std::make_shared<const FunctionHandle>(
      parse_function(field(j, "objective", "program")));
  P.c = parse_vec(field(j, "c", "program"), "program c");

  const json& grid = field(j, "grid", "program");
  const json& points = field(grid, "points", "grid");
  if (!points.is_array()) fail("grid 'points' must be an array of arrays");
  for (const json& e : points)
    P.grid.points.push_back(parse_vec(e, "grid point"));
  if (grid.contains("provenance"))
    P.grid.provenance = text(grid["provenance"], "grid provenance");

  for (const SmoothPiece& g :
       parse_pieces(field(j, "constraints", "program"), "constraints"))
    P.constraints.push_back(g);
  P.b = parse_vec(field(j, "b", "program"), "program b");
  return P;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (const char ch : bytes) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

Instance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open instance file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();

  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::exception& e) {
    fail(path + ": " + e.what());
  }
  if (!j.is_object()) fail(path + ": top level must be an object");

  const std::string schema = text(field(j, "schema", path.c_str()), "schema");
  if (schema != kSchema)
    fail(path + ": unsupported schema '" + schema + "' (expected " + kSchema +
         ")");

  Instance inst;
  inst.path = path;
  inst.hash = fnv1a(bytes);
  inst.name = j.contains("name") ? text(j["name"], "name") : path;
  inst.kind = text(field(j, "kind", path.c_str()), "kind");
  if (j.contains("notes")) inst.notes = text(j["notes"], "notes");
  inst.center = parse_vec(field(j, "center", path.c_str()), "center");

  if (inst.kind == "function") {
    inst.f = std::make_shared<const FunctionHandle>(
        parse_function(field(j, "function", path.c_str())));
    if (inst.f->dim != inst.center.size())
      fail(path + ": center dimension does not match the function dimension");
  } else if (inst.kind == "sip") {
    inst.program = parse_program(field(j, "program", path.c_str()));
    try {
      inst.program->validate();
    } catch (const Error& e) {
      fail(path + ": invalid program: " + e.what());
    }
    if (inst.program->n != inst.center.size())
      fail(path + ": center dimension does not match the program dimension");
  } else {
    fail(path + ": unknown kind '" + inst.kind +
         "' (expected 'function' or 'sip')");
  }
  return inst;
}

HandlePtr instance_function(const Instance& inst) {
  if (inst.kind == "function") return inst.f;
  return sup_function(*inst.program, inst.center);
}

std::string instance_dir() { return HB_INSTANCE_DIR; }

const std::vector<std::string>& shipped_instance_names() {
  static const std::vector<std::string> names = {
      "example-3.6", "example-sqrt", "example-3.16", "example-3.20",
      "example-abs", "sip-remark",   "lp-quadrant"};
  return names;
}

Instance load_shipped(const std::string& name) {
  return load_instance(instance_dir() + "/" + name + ".json");
}

}  // namespace hb
