#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "laneforge/config.hpp"

namespace laneforge {

/// Interconnect description for mux counting. The datapath is one 64-bit
/// slice per lane: 8*L input bytes mapped to 8*L output bytes.
struct InterconnectConfig {
  SlduKind kind = SlduKind::SlideP2Timemux;
  unsigned lanes = 4;

  unsigned total_bytes() const { return 8 * lanes; }
  bool combined() const {
    return kind == SlduKind::AllToAll || kind == SlduKind::SlideP2Combined ||
           kind == SlduKind::Slide1Combined;
  }
  bool power_of_two_slides() const {
    return kind == SlduKind::SlideP2Combined || kind == SlduKind::SlideP2Timemux;
  }
};

/// Set bits of `amount` as descending powers of two; 0 -> {0} (reshuffle).
std::vector<uint64_t> decompose_slide(uint64_t amount);

/// Cycles for one slide instruction of `vl` elements at `eew` bits.
/// Every micro-op pass costs ceil(vl*eew/8 / (8*lanes)) + startup; on
/// time-multiplexed interconnects an accompanying reshuffle adds one pass.
uint64_t slide_cycles(uint64_t amount, uint64_t vl, unsigned eew, const MachineConfig& cfg,
                      bool with_reshuffle = false);

/// Number of micro-op passes the configured interconnect needs.
uint64_t slide_passes(uint64_t amount, const MachineConfig& cfg, bool with_reshuffle = false);

/// Input bytes that can feed `out_byte` in a single cycle, over all supported
/// operations (slide amounts x EEWs, plus reshuffles on combined designs).
std::set<unsigned> reachable_sources(const InterconnectConfig& cfg, unsigned out_byte);

/// Total 2-to-1 multiplexers: sum over outputs of (#sources - 1).
uint64_t mux_count(const InterconnectConfig& cfg);

/// Calibrated area figures [kGE] for the baseline and optimized slide units.
struct SlduArea {
  double new_kge;
  double old_kge;
};
SlduArea area_model(unsigned lanes);

}  // namespace laneforge
