#pragma once

#include <optional>

#include "laneforge/config.hpp"
#include "laneforge/frontend.hpp"
#include "laneforge/isa.hpp"
#include "laneforge/report.hpp"

namespace laneforge {

/// Runs the cycle-level simulation of `prog` on one vector core. The
/// architectural outcome is computed in program order and is independent of
/// the timing configuration; final state can be captured via out params.
CycleReport simulate(const Program& prog, const MachineConfig& cfg, const FrontendConfig& fcfg,
                     SimMemory& mem, VrfState* out_vrf = nullptr);

/// Convenience: fresh memory and VRF.
CycleReport simulate(const Program& prog, const MachineConfig& cfg, const FrontendConfig& fcfg);

/// Round-robin single-cycle bank arbitration over (bank, requester) pairs.
/// Returns one granted requester id per bank; losers are the stall count.
struct BankRequest {
  unsigned bank;
  unsigned cls;   // requester class, rotating priority
  unsigned id;    // tie-break, lower first
};
struct BankGrantResult {
  std::map<unsigned, unsigned> granted;  // bank -> requester id
  uint64_t stalls = 0;
};
BankGrantResult arbitrate_banks(const std::vector<BankRequest>& requests, unsigned banks,
                                uint64_t cycle);

/// Banks a vector operation effectively spreads over without Barber's Pole:
/// min(8, max(1, ceil(vl/L) * eew/64)); with it, all banks once register
/// bases are distributed.
unsigned effective_banks(uint64_t vl, unsigned eew, const MachineConfig& cfg);

/// Memory-side completion model for one transaction.
enum class MemAccessKind { Unit, Strided, Indexed, Segmented };
struct MemSchedule {
  uint64_t first_beat;   // cycles from request to first data beat
  uint64_t beats;        // channel cycles after the first beat
  uint64_t total() const { return first_beat + beats; }
};
MemSchedule memory_transaction(uint64_t bytes, unsigned elem_size, MemAccessKind kind,
                               const MachineConfig& cfg);

/// flop_per_cycle / max_perf, clamped to [0,1]. `max_perf` in OP/cycle.
double ideality(double flop_per_cycle, double max_perf);

}  // namespace laneforge
