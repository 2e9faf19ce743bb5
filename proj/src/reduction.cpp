#include "laneforge/reduction.hpp"

#include <algorithm>
#include <bit>

namespace laneforge {

namespace {

unsigned next_pow2(unsigned v) { return unsigned(std::bit_ceil(v)); }

unsigned ilog2(unsigned v) { return unsigned(std::bit_width(v)) - 1; }

}  // namespace

uint64_t intra_lane_drain_cycles(unsigned stages) {
  if (stages == 0) return 0;
  const unsigned c = next_pow2(stages);
  return uint64_t(stages) * (1 + ilog2(c)) - (c - stages) - 1;
}

uint64_t intra_lane_cycles(const ReductionSpec& spec) {
  if (spec.packets == 0) return 0;
  const uint64_t per_lane = (spec.packets + spec.lanes - 1) / spec.lanes;
  const unsigned eff = unsigned(std::min<uint64_t>(spec.pipe_stages, per_lane));
  return per_lane + intra_lane_drain_cycles(eff);
}

unsigned inter_lane_steps(unsigned lanes) { return ilog2(lanes) + 1; }

uint64_t inter_lane_cycles(unsigned lanes, unsigned unit_latency) {
  return uint64_t(inter_lane_steps(lanes)) * unit_latency;
}

uint64_t simd_cycles(unsigned eew, unsigned fpu_latency) {
  if (eew >= 64) return 0;
  return uint64_t(ilog2(64 / eew)) * fpu_latency;
}

ReductionSchedule reduction_schedule(const ReductionSpec& spec) {
  ReductionSchedule s{};
  if (spec.packets == 0) return s;
  const uint64_t per_lane = (spec.packets + spec.lanes - 1) / spec.lanes;
  const unsigned eff = unsigned(std::min<uint64_t>(spec.pipe_stages, per_lane));
  s.fill = per_lane;
  s.drain = intra_lane_drain_cycles(eff);
  s.inter = inter_lane_cycles(spec.lanes, spec.unit_latency);
  s.simd = simd_cycles(spec.eew, spec.pipe_stages);
  return s;
}

uint64_t total_reduction_cycles(const ReductionSpec& spec) {
  return reduction_schedule(spec).total();
}

unsigned reduction_depth(bool fp, unsigned eew) {
  if (!fp) return 1;
  switch (eew) {
    case 64: return 4;
    case 32: return 3;
    default: return 2;
  }
}

}  // namespace laneforge
