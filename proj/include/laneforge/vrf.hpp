#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "laneforge/config.hpp"
#include "laneforge/isa.hpp"

namespace laneforge {

/// Physical VRF geometry: element-to-lane mapping and bank addressing.
struct LayoutConfig {
  unsigned lanes = 4;
  unsigned vlen_per_lane = 1024;  // bits
  unsigned banks_per_lane = 8;
  unsigned bank_width = 8;  // bytes
  bool barber_pole = false;

  unsigned words_per_reg_per_lane() const { return vlen_per_lane / 64; }
  unsigned reg_bytes() const { return vlen_per_lane / 8 * lanes; }

  static LayoutConfig from(const MachineConfig& m) {
    return LayoutConfig{m.lanes, m.vlen_per_lane, m.banks_per_lane, 8, m.barber_pole};
  }
};

struct ByteLocation {
  unsigned lane = 0;
  unsigned bank = 0;
  unsigned row = 0;     // global row within the bank
  unsigned offset = 0;  // byte offset within the 8-byte bank word

  bool operator==(const ByteLocation&) const = default;
};

/// lane carrying element i.
inline unsigned element_to_lane(uint64_t i, unsigned lanes) { return unsigned(i % lanes); }

/// Physical location of one byte of an element. byte_in_elem defaults to the
/// element's first byte.
ByteLocation byte_location(unsigned reg, uint64_t elem, unsigned eew, const LayoutConfig& cfg,
                           unsigned byte_in_elem = 0);

/// Position of memory-image byte k of a register inside the register's flat
/// physical image (lane-major: lane 0's vlen_per_lane/8 bytes first).
std::size_t physical_byte_index(uint64_t k, unsigned eew, const LayoutConfig& cfg);

/// Memory image -> physical layout for the given EEW (and back).
std::vector<uint8_t> shuffle(const std::vector<uint8_t>& mem_image, unsigned eew,
                             const LayoutConfig& cfg);
std::vector<uint8_t> deshuffle(const std::vector<uint8_t>& physical, unsigned eew,
                               const LayoutConfig& cfg);

/// Relocates each byte from its old-EEW slot to its new-EEW slot; the
/// deshuffled view is unchanged.
std::vector<uint8_t> apply_reshuffle(const std::vector<uint8_t>& physical, unsigned old_eew,
                                     unsigned new_eew, const LayoutConfig& cfg);

/// One injected slide-with-null-stride micro-instruction.
struct Reshuffle {
  unsigned reg = 0;
  unsigned old_eew = 64;
  unsigned new_eew = 64;

  bool operator==(const Reshuffle&) const = default;
};

struct ReshufflePlan {
  std::vector<Reshuffle> injected;  // ordered, all before the instruction
  bool empty() const { return injected.empty(); }
};

/// Whole-register reshuffles needed before `instr` given the current tags.
/// Sources reshuffle on any tag mismatch; the destination only when the write
/// does not cover the whole register. The mask register and mask-unit
/// operands are deshuffled at bit granularity by the MASKU and never planned.
ReshufflePlan plan_reshuffles(const VInstr& instr, const std::array<unsigned, 32>& tags,
                              const MachineConfig& cfg);

/// Registers written by `instr` with per-register element spans, used for tag
/// updates and coverage analysis.
struct RegWrite {
  unsigned reg;
  bool whole;  // write covers every byte of the register
};
std::vector<RegWrite> written_registers(const VInstr& instr, const MachineConfig& cfg);

/// Debug dump: one CSV row (reg,elem,eew,lane,bank,row,offset) per element.
std::string layout_csv(unsigned reg, unsigned eew, uint64_t elems, const LayoutConfig& cfg);

}  // namespace laneforge
