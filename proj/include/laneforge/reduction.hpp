#pragma once

#include <cstdint>

#include "laneforge/config.hpp"

namespace laneforge {

/// Three-phase reduction: intra-lane accumulation in the FPU pipeline,
/// inter-lane combining through the slide unit, final SIMD reduction.
struct ReductionSpec {
  uint64_t packets = 0;   // 64-bit operand packets (vl * eew / 64)
  unsigned lanes = 4;
  unsigned pipe_stages = 4;  // R, FPU pipeline depth for this op/EEW
  unsigned eew = 64;
  unsigned unit_latency = 6;  // per inter-lane step: FPU latency + slide-unit constant
};

/// Drain latency once every pipeline register holds a partial sum:
/// R*(1+log2(ceil2(R))) - (ceil2(R)-R) - 1, ceil2 = next power of two.
uint64_t intra_lane_drain_cycles(unsigned stages);

/// Fill (one packet per lane per cycle) plus drain at the effective depth.
uint64_t intra_lane_cycles(const ReductionSpec& spec);

/// (log2(L)+1) steps, each paying the full unit latency.
uint64_t inter_lane_cycles(unsigned lanes, unsigned unit_latency);
unsigned inter_lane_steps(unsigned lanes);

/// log2(64/eew) halving steps of the final SIMD word.
uint64_t simd_cycles(unsigned eew, unsigned fpu_latency);

uint64_t total_reduction_cycles(const ReductionSpec& spec);

/// Unit-occupancy spans for the timing engine.
struct ReductionSchedule {
  uint64_t fill;   // FPU, fed one packet per lane per cycle
  uint64_t drain;  // FPU
  uint64_t inter;  // FPU + SLDU
  uint64_t simd;   // FPU
  uint64_t total() const { return fill + drain + inter + simd; }
};
ReductionSchedule reduction_schedule(const ReductionSpec& spec);

/// Default FPU accumulation depth per (op class, element width).
unsigned reduction_depth(bool fp, unsigned eew);

}  // namespace laneforge
