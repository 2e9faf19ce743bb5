#include "laneforge/multicore.hpp"

#include <algorithm>

#include "laneforge/kernels.hpp"
#include "laneforge/timing.hpp"

namespace laneforge {

double CalibrationTable::tt_frequency_ghz(unsigned lanes) {
  switch (lanes) {
    case 2:
    case 4:
    case 8: return 1.35;
    case 16: return 1.08;
    default: throw ConfigError("no frequency calibration for " + std::to_string(lanes) + " lanes");
  }
}

double CalibrationTable::peak_efficiency_gflops_w(unsigned lanes) {
  switch (lanes) {
    case 2: return 34.1;
    case 4: return 37.8;
    case 8: return 35.7;
    case 16: return 30.3;
    default: throw ConfigError("no efficiency calibration for " + std::to_string(lanes) + " lanes");
  }
}

double CalibrationTable::peak_power_mw(unsigned lanes) {
  const double peak_gflops = 2.0 * lanes * tt_frequency_ghz(lanes);
  return peak_gflops / peak_efficiency_gflops_w(lanes) * 1000.0;
}

std::vector<RowBlock> partition_matmul(unsigned n, unsigned cores) {
  std::vector<RowBlock> blocks;
  const unsigned active = std::min(n, cores);  // n < cores leaves the rest idle
  unsigned row = 0;
  for (unsigned c = 0; c < active; ++c) {
    const unsigned rows = n / active + (c < n % active ? 1 : 0);
    blocks.push_back({row, rows});
    row += rows;
  }
  return blocks;
}

double real_throughput_gflops(double flop_per_cycle, unsigned lanes) {
  return flop_per_cycle * CalibrationTable::tt_frequency_ghz(lanes);
}

double cluster_power_mw(const std::vector<double>& core_utilization, unsigned lanes,
                        const CalibrationTable& calib) {
  const double peak = CalibrationTable::peak_power_mw(lanes);
  double total = 0;
  for (double u : core_utilization) {
    const double uu = std::clamp(u, 0.0, 1.0);
    total += peak * (calib.idle_fraction + (1.0 - calib.idle_fraction) * uu);
    total += calib.scalar_overhead_mw;
  }
  return total;
}

ClusterResult simulate_cluster(const ClusterConfig& ccfg, const std::string& kernel, unsigned n,
                               const std::string& dtype, const MachineConfig& base,
                               const FrontendConfig& fcfg, uint64_t seed) {
  MachineConfig cfg = base;
  cfg.lanes = ccfg.lanes_per_core;
  cfg.validate();

  ClusterResult res;
  uint64_t max_core_cycles = 0;
  double total_flops = 0;
  std::vector<double> utilization;

  if (kernel == "matmul") {
    auto blocks = partition_matmul(n, ccfg.cores);
    // equal blocks run the same program on the same timing config; simulate
    // the representative once
    const bool uniform = n % std::min(n, ccfg.cores) == 0;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
      const auto& blk = blocks[bi];
      if (uniform && bi > 0) {
        res.per_core.push_back(res.per_core.front());
        total_flops += res.per_core.front().flops;
        utilization.push_back(utilization.front());
        continue;
      }
      SimMemory mem(cfg.mem_bytes);
      auto gk = gen_matmul_block(n, blk.row0, blk.rows, dtype, cfg, mem, seed);
      auto rep = simulate(gk.prog, cfg, fcfg, mem);
      total_flops += gk.flops;
      max_core_cycles = std::max(max_core_cycles, rep.cycles);
      utilization.push_back(rep.cycles ? (gk.flops / double(rep.cycles)) / (2.0 * cfg.lanes) : 0);
      res.per_core.push_back(std::move(rep));
    }
  } else if (kernel == "dotproduct") {
    uint64_t left = n;
    for (unsigned c = 0; c < ccfg.cores && left > 0; ++c) {
      const uint64_t share = (n / ccfg.cores) + (c < n % ccfg.cores ? 1 : 0);
      if (share == 0) continue;
      SimMemory mem(cfg.mem_bytes);
      auto gk = gen_dotproduct(share, dtype, cfg, mem, seed + c);
      auto rep = simulate(gk.prog, cfg, fcfg, mem);
      total_flops += gk.flops;
      max_core_cycles = std::max(max_core_cycles, rep.cycles);
      utilization.push_back(rep.cycles ? (gk.flops / double(rep.cycles)) / (2.0 * cfg.lanes) : 0);
      res.per_core.push_back(std::move(rep));
      left -= share;
    }
  } else {
    throw ConfigError("cluster kernel must be matmul or dotproduct");
  }

  const uint64_t barrier = uint64_t(ccfg.barrier_cycles) * ccfg.cores * ccfg.syncs;
  res.total_cycles = max_core_cycles + barrier;
  res.flops = total_flops;
  res.flop_per_cycle = res.total_cycles ? total_flops / double(res.total_cycles) : 0;
  res.gflops = real_throughput_gflops(res.flop_per_cycle, cfg.lanes);
  CalibrationTable calib;
  // utilization per core over the cluster's span
  std::vector<double> us;
  for (std::size_t i = 0; i < res.per_core.size(); ++i) {
    const double fl = res.per_core[i].flops;
    us.push_back(res.total_cycles ? (fl / double(res.total_cycles)) / (2.0 * cfg.lanes) : 0);
  }
  while (us.size() < ccfg.cores) us.push_back(0);  // idle cores still burn idle power
  res.power_mw = cluster_power_mw(us, cfg.lanes, calib);
  res.gflops_per_watt = res.power_mw > 0 ? res.gflops / (res.power_mw / 1000.0) : 0;
  return res;
}

}  // namespace laneforge
