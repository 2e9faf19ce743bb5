#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "laneforge/config.hpp"
#include "laneforge/isa.hpp"

namespace laneforge {

enum class FrontendMode { Cva6, Ideal };

struct CacheConfig {
  unsigned size = 8192;  // bytes
  unsigned sets = 4;     // address indices (per the system footnote)
  unsigned line = 32;    // bytes
  unsigned ways() const { return size / (sets * line); }
};

struct FrontendConfig {
  FrontendMode mode = FrontendMode::Cva6;
  unsigned scalar_issue_cost = 1;
  unsigned vec_dispatch_occupancy = 2;  // frontend cycles per vector instruction
  unsigned vec_dispatch_latency = 1;    // extra cycles before it reaches the unit
  CacheConfig icache{4096, 4, 16};
  CacheConfig dcache{8192, 4, 32};
  bool warm = true;  // pre-warm caches before timing (single-core runs)
};

/// Write-through, no-allocate-on-store, LRU set-associative cache.
class Cache {
 public:
  explicit Cache(const CacheConfig& cfg);

  /// Lookup; allocates on read miss. Returns hit.
  bool access(uint64_t addr, bool is_store);
  /// Invalidates every way at each set index touched by [lo, hi); returns the
  /// number of valid lines dropped. Conservative: indices are invalidated
  /// whether or not the stored addresses were cached.
  uint64_t invalidate_range(uint64_t lo, uint64_t hi);
  void fill(uint64_t addr);  // warm-up fill, no stats

  uint64_t hits = 0, misses = 0;
  const CacheConfig& config() const { return cfg_; }

 private:
  struct Line {
    uint64_t tag = 0;
    bool valid = false;
    uint64_t lru = 0;
  };
  unsigned index_of(uint64_t addr) const { return unsigned((addr / cfg_.line) % cfg_.sets); }
  uint64_t tag_of(uint64_t addr) const { return addr / cfg_.line / cfg_.sets; }
  bool lookup(uint64_t addr, bool update, bool allocate);

  CacheConfig cfg_;
  std::vector<std::vector<Line>> sets_;
  uint64_t tick_ = 0;
};

/// In-flight memory-op counters driving the ordering gates.
struct OrderingCounters {
  int vec_loads = 0;
  int vec_stores = 0;
  int scalar_stores = 0;
};

enum class GateKind { ScalarLoad, ScalarStore, VectorMem };

/// 1) scalar loads only if no vector stores are in flight, 2) scalar stores
/// only if no vector loads or stores are in flight, 3) vector loads/stores
/// only if no scalar stores are pending.
inline bool ordering_allow(GateKind kind, const OrderingCounters& c) {
  switch (kind) {
    case GateKind::ScalarLoad: return c.vec_stores == 0;
    case GateKind::ScalarStore: return c.vec_loads == 0 && c.vec_stores == 0;
    case GateKind::VectorMem: return c.scalar_stores == 0;
  }
  return false;
}

/// One item of the interleaved scalar+vector instruction stream.
struct ProgramItem {
  enum Kind { Scalar, ScalarLoad, ScalarStore, Vector } kind = Scalar;
  uint64_t pc = 0;
  uint64_t addr = 0;          // for scalar memory ops
  std::size_t vindex = 0;     // for Vector: index into Program::vinstrs
};

struct Program {
  std::vector<ProgramItem> items;
  std::vector<VInstr> vinstrs;
  double flops = 0;  // kernel-declared useful operations

  static Program from_trace(std::vector<VInstr> trace);
};

/// Pure arrival-time computation (no engine backpressure, no gates): each
/// vector instruction arrives after the preceding issue costs, cache miss
/// penalties, and the dispatch pipeline cost. Used for issue-rate analysis.
std::vector<uint64_t> dispatch_arrival_times(const Program& prog, const FrontendConfig& fcfg,
                                             const MachineConfig& mcfg);

}  // namespace laneforge
