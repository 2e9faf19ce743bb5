#pragma once

// Test-only oracles, written independently of the library implementations
// they check.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "laneforge/config.hpp"
#include "laneforge/isa.hpp"

namespace laneforge::testing {

// Plain scalar-loop reference for the supported instruction subset. State is
// a flat byte image per register plus the per-register width tag.
struct RefState {
  std::vector<std::vector<uint8_t>> regs;  // 32 x reg_bytes
  std::array<unsigned, 32> tag;
  std::vector<uint8_t> mem;

  RefState(unsigned reg_bytes, std::size_t mem_bytes)
      : regs(32, std::vector<uint8_t>(reg_bytes, 0)), mem(mem_bytes, 0) {
    tag.fill(64);
  }
};

void ref_exec(const VInstr& in, RefState& st);

// Discrete-event model of an R-stage accumulator pipeline draining R partial
// sums: combine the two oldest partials as soon as both are available, one
// adder issue per cycle, result ready R cycles after issue.
uint64_t drain_pipeline_oracle(unsigned stages);

// Brute-force physical byte index from the layout rules: element i on lane
// i mod L, in-lane elements packed densely into successive 64-bit words.
std::size_t physical_index_oracle(uint64_t mem_byte, unsigned eew, unsigned lanes,
                                  unsigned vlen_per_lane);

// Random supported-subset trace over a bounded memory window. Starts by
// loading every register from randomized memory. Returns trace text.
std::string random_trace(unsigned instructions, const MachineConfig& cfg, uint64_t seed,
                         uint64_t mem_window = 0x8000);

}  // namespace laneforge::testing
