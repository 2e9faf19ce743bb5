#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "laneforge/frontend.hpp"
#include "laneforge/isa.hpp"

namespace laneforge {

/// Kernel registry entry: problem-size semantics, op count, and the
/// machine's maximum throughput for it in OP/cycle.
struct KernelSpec {
  std::string name;
  double max_perf(unsigned lanes) const;
  static KernelSpec lookup(const std::string& name);
};

struct GeneratedKernel {
  Program prog;
  std::string trace_text;  // vector trace incl. @scalar directives
  uint64_t out_base = 0;
  uint64_t out_bytes = 0;
  double flops = 0;
};

/// C = A*B over n x n matrices; strip-mined with a block of output rows
/// resident and scalar-forwarded multiply-accumulates (3-instruction inner
/// loop body for fp dtypes). Inputs are written into `mem`.
GeneratedKernel gen_matmul(unsigned n, const std::string& dtype, const MachineConfig& cfg,
                           SimMemory& mem, uint64_t seed = 42, unsigned block_rows = 8);

/// Same kernel restricted to output rows [row0, row0+rows): one core's share
/// of a row-partitioned multi-core run.
GeneratedKernel gen_matmul_block(unsigned n, unsigned row0, unsigned rows,
                                 const std::string& dtype, const MachineConfig& cfg,
                                 SimMemory& mem, uint64_t seed = 42, unsigned block_rows = 8);

/// Strip-mined dot product ending in one reduction per chunk; the emitted
/// instruction stream is exactly 7 + 9N items for N strip-mine iterations.
GeneratedKernel gen_dotproduct(uint64_t n, const std::string& dtype, const MachineConfig& cfg,
                               SimMemory& mem, uint64_t seed = 42);

/// 3-channel 7x7 convolution keeping seven output rows resident in the VRF
/// per loaded input row, with slide-based column reuse. Output is
/// (h-6) x (w-6); requires w-6 <= vlmax.
GeneratedKernel gen_conv2d(unsigned h, unsigned w, const std::string& dtype,
                           const MachineConfig& cfg, SimMemory& mem, uint64_t seed = 42);

/// y <- a*x + y, memory bound.
GeneratedKernel gen_axpy(uint64_t n, const std::string& dtype, const MachineConfig& cfg,
                         SimMemory& mem, uint64_t seed = 42);

GeneratedKernel gen_kernel(const std::string& kernel, unsigned n, const std::string& dtype,
                           const MachineConfig& cfg, SimMemory& mem, uint64_t seed = 42);

/// Arm SVE comparison listing for the same dot product: 6 + 7N instructions.
std::vector<std::string> sve_dotproduct_listing(unsigned iterations);

/// Number of strip-mine iterations a dot product of n elements needs.
uint64_t dotproduct_iterations(uint64_t n, const MachineConfig& cfg);

}  // namespace laneforge
