#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hb/function.hpp"
#include "hb/sip.hpp"
#include "hb/types.hpp"

namespace hb {

// ===== instance files =======================================================
//
// A named problem loaded from a versioned JSON file (schema "hb-instance/1"):
// either a bare function with a reference point — the input of the modulus
// and condition commands — or a convex semi-infinite program with its optimal
// point for the sip commands.  The file bytes are hashed so reports can name
// exactly what they were computed from.

struct Instance {
  std::string name;
  std::string kind;  // "function" | "sip"
  std::string notes;
  Vec center;
  HandlePtr f;                       // set when kind == "function"
  std::optional<SIProgram> program;  // set when kind == "sip"
  std::uint64_t hash = 0;            // FNV-1a over the raw file bytes
  std::string path;
};

/// Parse an instance file.  Throws Error(Parse) with a diagnostic naming the
/// offending field; the center dimension is validated against the payload.
Instance load_instance(const std::string& path);

/// The function the modulus machinery studies: the stored handle, or for a
/// program the sup function anchored at the stored center.
HandlePtr instance_function(const Instance& inst);

/// Directory holding the shipped instance files (compiled-in default).
std::string instance_dir();

/// Names of the shipped instances, in reproduction order.
const std::vector<std::string>& shipped_instance_names();

/// Load a shipped instance by name from instance_dir().
Instance load_shipped(const std::string& name);

}  // namespace hb
