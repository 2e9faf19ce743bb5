#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "laneforge/isa.hpp"

namespace laneforge {

/// Streaming parser for the assembly-like trace grammar:
///   - one instruction per line, `#` starts a comment
///   - `@scalar <reg>=<value>` sets a forwarded scalar register (hex or dec)
///   - vsetvli updates the tracked vtype; every instruction carries a snapshot
struct TraceParser {
  explicit TraceParser(const MachineConfig& cfg);

  /// Parses one line. Returns the decoded instruction for instruction lines,
  /// nullopt for blanks, comments, and @scalar directives.
  std::optional<VInstr> parse_line(const std::string& line);

  const MachineConfig& config() const { return cfg_; }
  uint64_t scalar(const std::string& canonical_name) const;
  VType vtype() const { return vtype_; }

 private:
  MachineConfig cfg_;
  std::map<std::string, uint64_t> scalars_;
  VType vtype_;
  int line_no_ = 0;
};

/// Parses a whole trace text.
std::vector<VInstr> parse_trace(const std::string& text, const MachineConfig& cfg);

/// One-shot helper for a single instruction line (fresh parser state).
VInstr parse_trace_line(const std::string& line, const MachineConfig& cfg);

/// Canonical scalar register name (x0..x31, f0..f31) for an ABI or raw name.
std::string canonical_scalar_reg(const std::string& name);

}  // namespace laneforge
