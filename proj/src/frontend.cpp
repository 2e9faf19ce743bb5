#include "laneforge/frontend.hpp"

namespace laneforge {

Cache::Cache(const CacheConfig& cfg) : cfg_(cfg) {
  sets_.assign(cfg_.sets, std::vector<Line>(cfg_.ways()));
}

bool Cache::lookup(uint64_t addr, bool update, bool allocate) {
  auto& set = sets_[index_of(addr)];
  const uint64_t tag = tag_of(addr);
  for (auto& line : set)
    if (line.valid && line.tag == tag) {
      if (update) line.lru = ++tick_;
      return true;
    }
  if (allocate) {
    Line* victim = &set[0];
    for (auto& line : set)
      if (!line.valid) {
        victim = &line;
        break;
      } else if (line.lru < victim->lru) {
        victim = &line;
      }
    victim->valid = true;
    victim->tag = tag;
    victim->lru = ++tick_;
  }
  return false;
}

bool Cache::access(uint64_t addr, bool is_store) {
  // stores write through; they update a present line but do not allocate
  const bool hit = lookup(addr, true, !is_store);
  if (hit)
    ++hits;
  else
    ++misses;
  return hit;
}

void Cache::fill(uint64_t addr) { lookup(addr, true, true); }

uint64_t Cache::invalidate_range(uint64_t lo, uint64_t hi) {
  if (hi <= lo) return 0;
  uint64_t dropped = 0;
  const uint64_t first = lo / cfg_.line;
  const uint64_t last = (hi - 1) / cfg_.line;
  // one whole set per distinct address index
  const uint64_t nlines = last - first + 1;
  std::vector<bool> touched(cfg_.sets, false);
  for (uint64_t l = first; l <= last && l - first < cfg_.sets; ++l) touched[l % cfg_.sets] = true;
  if (nlines >= cfg_.sets) touched.assign(cfg_.sets, true);
  for (unsigned s = 0; s < cfg_.sets; ++s) {
    if (!touched[s]) continue;
    for (auto& line : sets_[s])
      if (line.valid) {
        line.valid = false;
        ++dropped;
      }
  }
  return dropped;
}

Program Program::from_trace(std::vector<VInstr> trace) {
  Program p;
  p.vinstrs = std::move(trace);
  p.items.reserve(p.vinstrs.size());
  for (std::size_t i = 0; i < p.vinstrs.size(); ++i)
    p.items.push_back({ProgramItem::Vector, 4 * i, 0, i});
  return p;
}

std::vector<uint64_t> dispatch_arrival_times(const Program& prog, const FrontendConfig& fcfg,
                                             const MachineConfig& mcfg) {
  std::vector<uint64_t> arrivals;
  arrivals.reserve(prog.vinstrs.size());
  if (fcfg.mode == FrontendMode::Ideal) {
    uint64_t t = 0;
    for (const auto& item : prog.items)
      if (item.kind == ProgramItem::Vector) arrivals.push_back(t++);
    return arrivals;
  }

  Cache icache(fcfg.icache), dcache(fcfg.dcache);
  if (fcfg.warm) {
    for (const auto& item : prog.items) {
      icache.fill(item.pc);
      if (item.kind == ProgramItem::ScalarLoad) dcache.fill(item.addr);
    }
  }
  const unsigned i_penalty = mcfg.mem_latency_scalar +
                             (fcfg.icache.line + mcfg.mem_bandwidth() - 1) / mcfg.mem_bandwidth();
  const unsigned d_penalty = mcfg.mem_latency_scalar +
                             (fcfg.dcache.line + mcfg.mem_bandwidth() - 1) / mcfg.mem_bandwidth();
  uint64_t t = 0;
  for (const auto& item : prog.items) {
    if (!icache.access(item.pc, false)) t += i_penalty;
    switch (item.kind) {
      case ProgramItem::Scalar:
        t += fcfg.scalar_issue_cost;
        break;
      case ProgramItem::ScalarLoad:
        if (!dcache.access(item.addr, false)) t += d_penalty;
        t += fcfg.scalar_issue_cost;
        break;
      case ProgramItem::ScalarStore:
        dcache.access(item.addr, true);
        t += fcfg.scalar_issue_cost;
        break;
      case ProgramItem::Vector:
        t += fcfg.vec_dispatch_occupancy;
        arrivals.push_back(t + fcfg.vec_dispatch_latency);
        break;
    }
  }
  return arrivals;
}

}  // namespace laneforge
