#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace laneforge {

/// Per-run timing summary. `cycles` spans first vector dispatch to last
/// retire. `ideality` is flop_per_cycle over the kernel's maximum, in [0,1].
struct CycleReport {
  uint64_t cycles = 0;
  double flops = 0;
  double flop_per_cycle = 0;
  double ideality = 1.0;
  uint64_t bank_stalls = 0;
  uint64_t issue_stalls = 0;
  uint64_t memory_stalls = 0;
  std::map<std::string, uint64_t> unit_busy;
  uint64_t i_miss = 0;
  uint64_t d_miss = 0;
  uint64_t invalidated_lines = 0;
  uint64_t instructions = 0;
  uint64_t reshuffles = 0;
  double dyn_ops = 0;

  std::string to_json() const;
};

}  // namespace laneforge
