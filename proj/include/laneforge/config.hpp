#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace laneforge {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MemoryFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IllegalInstruction : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedInstruction : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DeadlockError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Slide-unit interconnect flavors, from cheapest to all-to-all.
enum class SlduKind {
  AllToAll,
  SlideP2Combined,
  SlideP2Timemux,
  Slide1Combined,
  Slide1Timemux,
};

std::string to_string(SlduKind k);
SlduKind sldu_kind_from_string(const std::string& s);

/// Machine parameters for one vector core and its host.
struct MachineConfig {
  unsigned lanes = 4;
  unsigned vlen_per_lane = 1024;  // bits
  unsigned banks_per_lane = 8;
  unsigned window_depth = 8;
  unsigned unit_queue_depth = 4;
  unsigned operand_queue_depth = 4;
  bool barber_pole = false;
  bool optimized = false;  // upsized buffers, window 16, faster hazard resolution

  // memory system
  unsigned mem_latency_vec = 7;     // cycles, request to first beat (Ara side)
  unsigned mem_latency_scalar = 5;  // cycles (CVA6 side)
  std::size_t mem_bytes = 1ull << 24;

  // slide unit
  SlduKind sldu_kind = SlduKind::SlideP2Timemux;
  unsigned sldu_startup = 2;  // cycles per micro-op

  // chaining / hazards
  unsigned hazard_penalty = 2;  // extra latency on cross-unit chains (0 in optimized mode)

  unsigned masku_latency = 2;
  unsigned muldiv_depth = 2;
  unsigned fdiv_cycles_per_element = 12;

  unsigned effective_window() const { return optimized ? window_depth * 2 : window_depth; }
  unsigned effective_queue_depth() const { return optimized ? unit_queue_depth * 2 : unit_queue_depth; }
  unsigned effective_hazard_penalty() const { return optimized ? 0 : hazard_penalty; }

  // bytes per cycle
  unsigned mem_bandwidth() const { return 4 * lanes; }
  unsigned compute_bandwidth() const { return 8 * lanes; }
  unsigned vlen_total() const { return vlen_per_lane * lanes; }  // bits
  unsigned reg_bytes() const { return vlen_total() / 8; }

  /// FPU pipeline depth for an op class at a given element width.
  unsigned fpu_depth(unsigned eew) const {
    switch (eew) {
      case 64: return 4;
      case 32: return 3;
      case 16: return 2;
      default: return 2;
    }
  }
  unsigned alu_depth() const { return 1; }

  void validate() const {
    if (lanes != 2 && lanes != 4 && lanes != 8 && lanes != 16 && lanes != 1)
      throw ConfigError("lanes must be in {1,2,4,8,16}");
    if (vlen_per_lane % 64 != 0) throw ConfigError("vlen_per_lane must be a multiple of 64");
    if (banks_per_lane == 0 || (vlen_per_lane / 64) % banks_per_lane != 0)
      throw ConfigError("banks_per_lane must divide the per-lane word count");
  }
};

}  // namespace laneforge
