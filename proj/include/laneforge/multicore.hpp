#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "laneforge/frontend.hpp"
#include "laneforge/report.hpp"

namespace laneforge {

struct ClusterConfig {
  unsigned cores = 1;
  unsigned lanes_per_core = 4;
  unsigned barrier_cycles = 50;  // per sync, per core checking in
  unsigned syncs = 2;

  unsigned total_fpus() const { return cores * lanes_per_core; }
};

/// Silicon calibration: typical-corner frequency and measured efficiency
/// endpoints per lane count.
struct CalibrationTable {
  double idle_fraction = 0.40;    // power at zero utilization, share of peak
  double scalar_overhead_mw = 0;  // per-core additive constant

  static double tt_frequency_ghz(unsigned lanes);
  static double peak_efficiency_gflops_w(unsigned lanes);
  /// peak GFLOPS / peak efficiency
  static double peak_power_mw(unsigned lanes);
};

struct RowBlock {
  unsigned row0;
  unsigned rows;
};
/// Row-block partition of the output matrix; the vectorizable dimension
/// stays n on every core.
std::vector<RowBlock> partition_matmul(unsigned n, unsigned cores);

struct ClusterResult {
  std::vector<CycleReport> per_core;
  uint64_t total_cycles = 0;
  double flops = 0;
  double flop_per_cycle = 0;
  double gflops = 0;
  double power_mw = 0;
  double gflops_per_watt = 0;
};

/// Simulates `cores` scalar+vector pairs on private memory banks running a
/// row-partitioned matmul (or an element-partitioned dotproduct), then
/// aggregates: total cycles = max over cores + barrier overhead.
ClusterResult simulate_cluster(const ClusterConfig& ccfg, const std::string& kernel, unsigned n,
                               const std::string& dtype, const MachineConfig& base,
                               const FrontendConfig& fcfg, uint64_t seed = 42);

/// flop/cycle * TT frequency.
double real_throughput_gflops(double flop_per_cycle, unsigned lanes);

/// Two-point (idle/peak) linear power interpolation per core, summed, plus
/// the per-core scalar overhead constant.
double cluster_power_mw(const std::vector<double>& core_utilization, unsigned lanes,
                        const CalibrationTable& calib);

}  // namespace laneforge
