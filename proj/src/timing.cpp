#include "laneforge/timing.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <sstream>

#include "laneforge/reduction.hpp"
#include "laneforge/sldu.hpp"
#include "laneforge/vrf.hpp"

namespace laneforge {

unsigned effective_banks(uint64_t vl, unsigned eew, const MachineConfig& cfg) {
  if (cfg.barber_pole) return cfg.banks_per_lane;
  const uint64_t per_lane = (vl + cfg.lanes - 1) / cfg.lanes;
  const uint64_t words = (per_lane * eew + 63) / 64;
  return unsigned(std::min<uint64_t>(cfg.banks_per_lane, std::max<uint64_t>(1, words)));
}

MemSchedule memory_transaction(uint64_t bytes, unsigned elem_size, MemAccessKind kind,
                               const MachineConfig& cfg) {
  if (bytes == 0) return {0, 0};
  MemSchedule s{};
  s.first_beat = cfg.mem_latency_vec;
  switch (kind) {
    case MemAccessKind::Unit:
      s.beats = (bytes + cfg.mem_bandwidth() - 1) / cfg.mem_bandwidth();
      break;
    case MemAccessKind::Strided:
    case MemAccessKind::Indexed:
    case MemAccessKind::Segmented:
      s.beats = bytes / elem_size;  // one element per beat, no coalescing
      break;
  }
  return s;
}

double ideality(double flop_per_cycle, double max_perf) {
  if (max_perf <= 0) return 0.0;
  return std::clamp(flop_per_cycle / max_perf, 0.0, 1.0);
}

BankGrantResult arbitrate_banks(const std::vector<BankRequest>& requests, unsigned banks,
                                uint64_t cycle) {
  BankGrantResult res;
  for (unsigned b = 0; b < banks; ++b) {
    const BankRequest* best = nullptr;
    unsigned best_key = 0;
    for (const auto& r : requests) {
      if (r.bank != b) continue;
      // rotating class priority, requester index as tie-break
      unsigned key = ((r.cls + 8 - unsigned(cycle % 8)) % 8) * 4096 + (r.id & 4095);
      if (!best || key < best_key) {
        best = &r;
        best_key = key;
      }
    }
    if (best) res.granted[b] = best->id;
  }
  uint64_t total = 0;
  for (const auto& r : requests)
    if (r.bank < banks) ++total;
  res.stalls = total - res.granted.size();
  return res;
}

namespace {

enum class Unit { Alu, MulDiv, Fpu, Vldu, Vstu, Sldu, Masku, None };

const char* unit_name(Unit u) {
  switch (u) {
    case Unit::Alu: return "alu";
    case Unit::MulDiv: return "muldiv";
    case Unit::Fpu: return "fpu";
    case Unit::Vldu: return "vldu";
    case Unit::Vstu: return "vstu";
    case Unit::Sldu: return "sldu";
    case Unit::Masku: return "masku";
    case Unit::None: return "none";
  }
  return "?";
}

constexpr int kUnits = 7;

struct SrcStream {
  unsigned base_reg = 0;
  uint64_t words = 0;
  uint64_t fetched = 0;
  std::array<int, 8> dep;  // producer mop per register of the span, -1 none
  unsigned span = 1;

  SrcStream() { dep.fill(-1); }
};

// Execution style of a micro-op on its unit.
enum class MopClass { Stream, Permute, Load, Store, Nop };

struct Mop {
  VInstr in;
  bool synthetic_reshuffle = false;
  Unit unit = Unit::None;
  MopClass cls = MopClass::Nop;
  uint64_t slices = 1;
  unsigned exec_interval = 1;
  unsigned pipe_depth = 1;
  std::vector<SrcStream> srcs;

  // writeback
  bool writes = false;
  unsigned wb_base = 0;
  unsigned wb_span = 1;
  uint64_t wb_words = 0;
  uint64_t wb_granted = 0;
  std::deque<uint64_t> wb_ready;  // ready cycles of queued wb words, in order

  // permute class
  uint64_t body_left = 0;
  bool body_started = false;
  uint64_t sldu_block_from = 0, sldu_block_to = 0;  // reduction inter-lane phase

  // memory
  uint64_t mem_bytes = 0, mem_done = 0;
  bool mem_elementwise = false;
  unsigned mem_esize = 8;
  uint64_t mem_request_at = ~uint64_t(0);

  // progress
  uint64_t exec_done = 0;
  uint64_t next_exec = 0;
  uint64_t dispatch_cycle = 0;
  bool dispatched = false;
  bool retired = false;
  bool chainable = false;

  // WAR/WAW snapshots per written register
  std::vector<std::pair<unsigned, std::vector<int>>> prior_readers;  // reg -> reader mops
  std::vector<std::pair<unsigned, int>> prior_writer;                // reg -> mop id
};

struct EngineFrontend {
  const Program* prog = nullptr;
  FrontendConfig cfg;
  MachineConfig mcfg;
  std::optional<Cache> icache, dcache;
  std::size_t next_item = 0;
  uint64_t busy_until = 0;
  std::optional<std::size_t> offer;     // vinstr index ready for dispatch
  uint64_t offer_at = 0;
  uint64_t gate_stalls = 0;

  void init(const Program& p, const FrontendConfig& f, const MachineConfig& m) {
    prog = &p;
    cfg = f;
    mcfg = m;
    if (cfg.mode == FrontendMode::Cva6) {
      icache.emplace(cfg.icache);
      dcache.emplace(cfg.dcache);
      if (cfg.warm) {
        for (const auto& item : p.items) {
          icache->fill(item.pc);
          if (item.kind == ProgramItem::ScalarLoad) dcache->fill(item.addr);
        }
      }
    }
  }

  bool done() const { return next_item >= prog->items.size() && !offer; }

  // Advances the scalar stream one cycle. Returns refill beats to reserve on
  // the memory read channel (0 if none).
  uint64_t step(uint64_t cycle, OrderingCounters& oc,
                std::vector<std::pair<uint64_t, int>>& scalar_store_done) {
    if (offer || next_item >= prog->items.size()) return 0;
    if (cfg.mode == FrontendMode::Ideal) {
      while (next_item < prog->items.size() &&
             prog->items[next_item].kind != ProgramItem::Vector)
        ++next_item;
      if (next_item < prog->items.size()) {
        offer = prog->items[next_item].vindex;
        offer_at = cycle;
        ++next_item;
      }
      return 0;
    }
    if (cycle < busy_until) return 0;
    const auto& item = prog->items[next_item];
    uint64_t refill = 0;

    // ordering gates
    if (item.kind == ProgramItem::ScalarLoad &&
        !ordering_allow(GateKind::ScalarLoad, oc)) {
      ++gate_stalls;
      return 0;
    }
    if (item.kind == ProgramItem::ScalarStore &&
        !ordering_allow(GateKind::ScalarStore, oc)) {
      ++gate_stalls;
      return 0;
    }
    if (item.kind == ProgramItem::Vector) {
      const auto& vi = prog->vinstrs[item.vindex];
      const bool is_mem = vi.kind == OpKind::Load || vi.kind == OpKind::Store;
      if (is_mem && !ordering_allow(GateKind::VectorMem, oc)) {
        ++gate_stalls;
        return 0;
      }
    }

    uint64_t t = cycle;
    if (!icache->access(item.pc, false)) {
      t += mcfg.mem_latency_scalar +
           (cfg.icache.line + mcfg.mem_bandwidth() - 1) / mcfg.mem_bandwidth();
      refill += (cfg.icache.line + mcfg.mem_bandwidth() - 1) / mcfg.mem_bandwidth();
    }
    switch (item.kind) {
      case ProgramItem::Scalar:
        t += cfg.scalar_issue_cost;
        break;
      case ProgramItem::ScalarLoad:
        if (!dcache->access(item.addr, false)) {
          t += mcfg.mem_latency_scalar +
               (cfg.dcache.line + mcfg.mem_bandwidth() - 1) / mcfg.mem_bandwidth();
          refill += (cfg.dcache.line + mcfg.mem_bandwidth() - 1) / mcfg.mem_bandwidth();
        }
        t += cfg.scalar_issue_cost;
        break;
      case ProgramItem::ScalarStore: {
        dcache->access(item.addr, true);  // write-through, no allocate
        t += cfg.scalar_issue_cost;
        ++oc.scalar_stores;
        scalar_store_done.push_back({t + mcfg.mem_latency_scalar, 1});
        break;
      }
      case ProgramItem::Vector: {
        t += cfg.vec_dispatch_occupancy;
        offer = item.vindex;
        offer_at = t + cfg.vec_dispatch_latency;
        break;
      }
    }
    busy_until = t;
    ++next_item;
    return refill;
  }
};

struct Engine {
  const Program& prog;
  MachineConfig cfg;
  FrontendConfig fcfg;
  SimMemory& mem;
  VrfState vrf;
  CycleReport rep;

  std::vector<Mop> mops;
  std::deque<int> pending;                 // decoded, waiting for dispatch
  std::array<std::deque<int>, kUnits> unit_q;
  std::vector<int> active;                 // dispatched, not retired

  unsigned wpreg;  // 64-bit words per register (slice-granular)
  std::vector<std::vector<uint64_t>> word_ready;  // [reg][word] readable cycle
  std::array<int, 32> last_writer;
  std::array<std::vector<int>, 32> readers;

  EngineFrontend fe;
  OrderingCounters oc;
  std::vector<std::pair<uint64_t, int>> scalar_store_done;

  uint64_t cycle = 0;
  uint64_t rchannel_refill_until = 0;
  uint64_t sldu_reserved_from = ~uint64_t(0), sldu_reserved_to = 0;
  int in_flight = 0;
  uint64_t first_dispatch = ~uint64_t(0), last_retire = 0;
  uint64_t last_progress = 0;
  uint64_t dispatched_count = 0;

  Engine(const Program& p, const MachineConfig& c, const FrontendConfig& f, SimMemory& m)
      : prog(p), cfg(c), fcfg(f), mem(m), vrf(c) {
    cfg.validate();
    wpreg = cfg.vlen_per_lane / 64;
    word_ready.assign(32, std::vector<uint64_t>(wpreg, 0));
    last_writer.fill(-1);
    fe.init(prog, fcfg, cfg);
  }

  uint64_t op_words(uint64_t vl, unsigned eew) const {
    return (vl * (eew / 8) + cfg.compute_bandwidth() - 1) / cfg.compute_bandwidth();
  }

  unsigned bank_of(unsigned reg, uint64_t word) const {
    const unsigned start = cfg.barber_pole ? reg % cfg.banks_per_lane : 0;
    return unsigned((word + start) % cfg.banks_per_lane);
  }

  // ---- decode: one instruction -> reshuffles + main mop -------------------

  void add_src(Mop& m, unsigned reg, uint64_t words, unsigned span) {
    if (words == 0) return;
    SrcStream s;
    s.base_reg = reg;
    s.words = words;
    s.span = span;
    m.srcs.push_back(s);
  }

  Mop make_reshuffle(unsigned reg, unsigned new_eew) {
    Mop m;
    m.synthetic_reshuffle = true;
    m.in.mnemonic = "reshuffle";
    m.in.family = "reshuffle";
    m.in.kind = OpKind::Slide;
    m.in.vd = m.in.vs2 = reg;
    m.in.eew_vd = new_eew;
    m.unit = Unit::Sldu;
    m.cls = MopClass::Permute;
    m.slices = wpreg;
    add_src(m, reg, wpreg, 1);
    m.writes = true;
    m.wb_base = reg;
    m.wb_span = 1;
    m.wb_words = wpreg;
    m.body_left = cfg.sldu_startup;  // one pass; the gather stream covers it
    m.chainable = false;
    return m;
  }

  Mop make_mop(const VInstr& in) {
    Mop m;
    m.in = in;
    const uint64_t vl = in.vtype.vl;
    const unsigned lmul = in.vtype.lmul;
    const uint64_t words = op_words(vl, in.eew_vd);

    auto stream_writer = [&](Unit u, unsigned depth) {
      m.unit = u;
      m.cls = MopClass::Stream;
      m.slices = std::max<uint64_t>(1, words);
      m.pipe_depth = depth;
      m.writes = vl > 0;
      m.wb_base = in.vd;
      m.wb_span = lmul;
      m.wb_words = words;
      m.chainable = true;
    };

    switch (in.kind) {
      case OpKind::VSetVl:
        m.unit = Unit::None;
        m.cls = MopClass::Nop;
        break;

      case OpKind::ArithInt:
        stream_writer(in.family == "vmul" ? Unit::MulDiv : Unit::Alu,
                      in.family == "vmul" ? cfg.muldiv_depth : cfg.alu_depth());
        if (in.has_vs2) add_src(m, in.vs2, op_words(vl, in.eew_vs2), lmul);
        if (in.has_vs1) add_src(m, in.vs1, op_words(vl, in.eew_vs1), lmul);
        break;

      case OpKind::ArithFp:
      case OpKind::Fmacc:
        stream_writer(Unit::Fpu, cfg.fpu_depth(in.eew_vd));
        if (in.family == "vfdiv") m.exec_interval = cfg.fdiv_cycles_per_element;
        if (in.has_vs2) add_src(m, in.vs2, op_words(vl, in.eew_vs2), lmul);
        if (in.has_vs1) add_src(m, in.vs1, op_words(vl, in.eew_vs1), lmul);
        if (in.kind == OpKind::Fmacc) add_src(m, in.vd, words, lmul);
        break;

      case OpKind::Load: {
        m.unit = Unit::Vldu;
        m.cls = MopClass::Load;
        m.slices = std::max<uint64_t>(1, words);
        m.writes = vl > 0;
        m.wb_base = in.vd;
        m.wb_span = lmul;
        m.wb_words = words;
        m.chainable = in.addressing == Addressing::Unit;
        m.mem_bytes = vl * (in.eew_vd / 8);
        m.mem_esize = in.eew_vd / 8;
        m.mem_elementwise =
            in.addressing == Addressing::Indexed ||
            (in.addressing == Addressing::Strided && in.stride != int64_t(in.eew_vd / 8));
        if (in.addressing == Addressing::Indexed)
          add_src(m, in.vs2, op_words(vl, in.eew_vs2), lmul);
        break;
      }

      case OpKind::Store: {
        m.unit = Unit::Vstu;
        m.cls = MopClass::Store;
        m.slices = std::max<uint64_t>(1, words);
        m.mem_bytes = vl * (in.eew_vd / 8);
        m.mem_esize = in.eew_vd / 8;
        m.mem_elementwise =
            in.addressing == Addressing::Indexed ||
            (in.addressing == Addressing::Strided && in.stride != int64_t(in.eew_vd / 8));
        add_src(m, in.vd, words, lmul);  // data
        if (in.addressing == Addressing::Indexed)
          add_src(m, in.vs2, op_words(vl, in.eew_vs2), lmul);
        break;
      }

      case OpKind::Slide: {
        m.unit = Unit::Sldu;
        m.cls = MopClass::Permute;
        m.slices = std::max<uint64_t>(1, words);
        m.writes = vl > 0;
        m.wb_base = in.vd;
        m.wb_span = lmul;
        m.wb_words = words;
        add_src(m, in.vs2, op_words(vl, in.eew_vs2), lmul);
        const uint64_t amt = uint64_t(in.stride < 0 ? -in.stride : in.stride);
        const uint64_t per_pass = std::max<uint64_t>(1, words);
        const uint64_t passes = slide_passes(amt, cfg, false);
        m.body_left = cfg.sldu_startup * passes + per_pass * (passes - 1);
        break;
      }

      case OpKind::Reduction: {
        m.unit = Unit::Fpu;
        m.cls = MopClass::Permute;
        m.slices = std::max<uint64_t>(1, words);
        m.writes = true;
        m.wb_base = in.vd;
        m.wb_span = 1;
        m.wb_words = 1;
        add_src(m, in.vs2, op_words(vl, in.eew_vs2), lmul);
        add_src(m, in.vs1, 1, 1);
        const unsigned depth = reduction_depth(in.fp, in.eew_vd);
        ReductionSpec spec{vl * in.eew_vd / 64, cfg.lanes, depth, in.eew_vd,
                           depth + cfg.sldu_startup};
        auto sched = reduction_schedule(spec);
        m.body_left = sched.drain + sched.inter + sched.simd;
        m.sldu_block_from = sched.drain;             // relative to body start
        m.sldu_block_to = sched.drain + sched.inter;
        break;
      }

      case OpKind::MaskOp: {
        if (in.family == "vmseq" || in.family == "vmslt") {
          stream_writer(Unit::Masku, cfg.masku_latency);
          m.wb_words = std::max<uint64_t>(1, op_words((vl + 7) / 8, 8));
          m.wb_span = 1;
          if (in.has_vs2) add_src(m, in.vs2, op_words(vl, in.eew_vs2), lmul);
          if (in.has_vs1) add_src(m, in.vs1, op_words(vl, in.eew_vs1), lmul);
          m.chainable = false;
        } else {
          m.unit = Unit::Masku;
          m.cls = MopClass::Permute;
          const uint64_t mask_words = std::max<uint64_t>(1, op_words((vl + 7) / 8, 8));
          m.slices = mask_words;
          if (in.has_vs2) add_src(m, in.vs2, mask_words, 1);
          if (in.has_vs1) add_src(m, in.vs1, mask_words, 1);
          m.body_left = cfg.masku_latency;
          if (in.writes_vd) {
            m.writes = vl > 0;
            m.wb_base = in.vd;
            m.wb_span = 1;
            m.wb_words = mask_words;
          }
        }
        break;
      }

      case OpKind::Move: {
        if (in.whole_register) {
          stream_writer(Unit::Alu, cfg.alu_depth());
          const unsigned eew = vrf.eew_tag[in.vs2];
          m.slices = wpreg;
          m.wb_words = wpreg;
          m.wb_span = 1;
          add_src(m, in.vs2, wpreg, 1);
          m.in.eew_vd = eew;
          break;
        }
        if (in.form == OperandForm::XS || in.form == OperandForm::FS) {
          m.unit = Unit::Alu;
          m.cls = MopClass::Stream;
          m.slices = 1;
          m.pipe_depth = cfg.alu_depth();
          add_src(m, in.vs2, 1, 1);
          break;
        }
        if (in.form == OperandForm::SX || in.form == OperandForm::SF) {
          m.unit = Unit::Alu;
          m.cls = MopClass::Stream;
          m.slices = 1;
          m.pipe_depth = cfg.alu_depth();
          m.writes = in.vtype.vl > 0;
          m.wb_base = in.vd;
          m.wb_span = 1;
          m.wb_words = 1;
          m.chainable = true;
          break;
        }
        stream_writer(Unit::Alu, cfg.alu_depth());
        if (in.has_vs2) add_src(m, in.vs2, op_words(vl, in.eew_vs2), lmul);
        if (in.has_vs1) add_src(m, in.vs1, op_words(vl, in.eew_vs1), lmul);
        break;
      }
    }

    if (in.masked && vl > 0) add_src(m, 0, std::max<uint64_t>(1, op_words((vl + 7) / 8, 8)), 1);
    return m;
  }

  // ---- dependency bookkeeping ---------------------------------------------

  void register_mop(int id) {
    Mop& m = mops[id];
    for (auto& s : m.srcs)
      for (unsigned k = 0; k < s.span && s.base_reg + k < 32; ++k)
        s.dep[k] = last_writer[s.base_reg + k];
    for (auto& s : m.srcs)
      for (unsigned k = 0; k < s.span && s.base_reg + k < 32; ++k)
        readers[s.base_reg + k].push_back(id);
    if (m.writes) {
      for (unsigned k = 0; k < m.wb_span && m.wb_base + k < 32; ++k) {
        const unsigned r = m.wb_base + k;
        m.prior_readers.push_back({r, readers[r]});
        m.prior_writer.push_back({r, last_writer[r]});
        last_writer[r] = id;
      }
    }
  }

  // word g of a stream -> (reg, word-in-reg)
  std::pair<unsigned, unsigned> locate(unsigned base, uint64_t g) const {
    return {base + unsigned(g / wpreg), unsigned(g % wpreg)};
  }

  bool writer_wrote(const Mop& w, unsigned reg, unsigned word) const {
    if (w.retired) return true;
    if (!w.writes) return true;
    if (reg < w.wb_base) return true;
    const uint64_t g = uint64_t(reg - w.wb_base) * wpreg + word;
    if (g >= w.wb_words) return true;  // outside the written span
    return w.wb_granted > g;
  }

  // can stream s of mop m fetch its next word this cycle?
  bool fetch_allowed(const Mop& m, const SrcStream& s) const {
    if (s.fetched >= s.words) return false;
    auto [reg, word] = locate(s.base_reg, s.fetched);
    if (reg >= 32) return true;
    const int dep = s.dep[std::min<unsigned>(unsigned(reg - s.base_reg), 7)];
    if (dep >= 0 && !mops[dep].retired) {
      const Mop& w = mops[dep];
      if (!w.chainable) return false;
      if (!writer_wrote(w, reg, word)) return false;
    }
    return cycle >= word_ready[reg][word];
  }

  // can mop m write its next wb word this cycle? (WAW/WAR)
  bool wb_allowed(const Mop& m) const {
    auto [reg, word] = locate(m.wb_base, m.wb_granted);
    if (reg >= 32) return true;
    for (const auto& [r, pw] : m.prior_writer) {
      if (r != reg || pw < 0) continue;
      if (!writer_wrote(mops[pw], reg, word)) return false;
    }
    for (const auto& [r, rdrs] : m.prior_readers) {
      if (r != reg) continue;
      for (int rid : rdrs) {
        const Mop& rd = mops[rid];
        if (rd.retired) continue;
        for (const auto& s : rd.srcs) {
          if (reg < s.base_reg || reg >= s.base_reg + s.span) continue;
          const uint64_t g = uint64_t(reg - s.base_reg) * wpreg + word;
          if (g < s.words && s.fetched <= g) return false;
        }
      }
    }
    return true;
  }

  // ---- dispatch ------------------------------------------------------------

  void functional_execute(const VInstr& in) {
    exec_functional(in, vrf, mem);
    // dynamic useful-op accounting
    const uint64_t vl = in.vtype.vl;
    switch (in.kind) {
      case OpKind::Fmacc: rep.dyn_ops += 2.0 * double(vl); break;
      case OpKind::ArithFp: rep.dyn_ops += double(vl); break;
      case OpKind::ArithInt: rep.dyn_ops += double(vl); break;
      case OpKind::Reduction: rep.dyn_ops += double(vl); break;
      default: break;
    }
  }

  void decode_to_pending(const VInstr& in) {
    auto plan = plan_reshuffles(in, vrf.eew_tag, cfg);
    for (const auto& r : plan.injected) {
      mops.push_back(make_reshuffle(r.reg, r.new_eew));
      vrf.eew_tag[r.reg] = r.new_eew;
      pending.push_back(int(mops.size() - 1));
      ++rep.reshuffles;
    }
    Mop m = make_mop(in);  // reads tags for vmv1r before functional update
    functional_execute(in);
    mops.push_back(std::move(m));
    pending.push_back(int(mops.size() - 1));
    ++rep.instructions;
  }

  bool try_dispatch_one() {
    if (pending.empty()) return false;
    const int id = pending.front();
    Mop& m = mops[id];
    if (in_flight >= int(cfg.effective_window())) {
      ++rep.issue_stalls;
      return false;
    }
    if (m.unit != Unit::None) {
      auto& q = unit_q[int(m.unit)];
      if (q.size() >= cfg.effective_queue_depth()) {
        ++rep.issue_stalls;
        return false;
      }
      q.push_back(id);
    }
    pending.pop_front();
    m.dispatch_cycle = cycle;
    m.dispatched = true;
    register_mop(id);
    active.push_back(id);
    ++in_flight;
    ++dispatched_count;
    if (first_dispatch == ~uint64_t(0)) first_dispatch = cycle;
    last_progress = cycle;
    if (m.unit == Unit::None) retire(id);  // vsetvl
    if (m.in.kind == OpKind::Load) ++oc.vec_loads;
    if (m.in.kind == OpKind::Store) ++oc.vec_stores;
    return true;
  }

  void retire(int id) {
    Mop& m = mops[id];
    m.retired = true;
    --in_flight;
    last_retire = std::max(last_retire, cycle);
    last_progress = cycle;
    if (m.writes) {
      const uint64_t avail = cycle + 1 + chain_penalty(m);
      for (uint64_t g = 0; g < m.wb_words; ++g) {
        auto [reg, word] = locate(m.wb_base, g);
        if (reg < 32) word_ready[reg][word] = std::max(word_ready[reg][word], avail);
      }
    }
    if (m.in.kind == OpKind::Load && !m.synthetic_reshuffle) --oc.vec_loads;
    if (m.in.kind == OpKind::Store) --oc.vec_stores;
    for (auto& rl : readers)
      rl.erase(std::remove(rl.begin(), rl.end(), id), rl.end());
  }

  // ---- main loop ------------------------------------------------------------

  void run() {
    const uint64_t deadlock_window = 200000;
    while (true) {
      const bool work_left = !fe.done() || !pending.empty() || in_flight > 0;
      if (!work_left) break;
      ++cycle;

      // scalar store completions
      for (auto& e : scalar_store_done)
        if (e.first == cycle) oc.scalar_stores -= e.second;
      std::erase_if(scalar_store_done, [&](const auto& e) { return e.first <= cycle; });

      // frontend
      const uint64_t refill = fe.step(cycle, oc, scalar_store_done);
      if (refill > 0)
        rchannel_refill_until =
            std::max(rchannel_refill_until, cycle + fe.mcfg.mem_latency_scalar) + refill;

      // dispatcher: accept the frontend offer, then dispatch one mop per cycle
      if (pending.empty() && fe.offer && cycle >= fe.offer_at) {
        decode_to_pending(prog.vinstrs[*fe.offer]);
        fe.offer.reset();
      }
      try_dispatch_one();

      // memory channels
      step_memory();

      // bank requests: operand fetch and writeback streams
      step_banks();

      // unit execution
      for (int u = 0; u < kUnits; ++u) step_unit(Unit(u));

      // retirement
      for (std::size_t i = 0; i < active.size();) {
        const int id = active[i];
        Mop& m = mops[id];
        if (!m.retired && mop_complete(m)) {
          pop_from_unit(id);
          retire(id);
        }
        if (mops[id].retired)
          active.erase(active.begin() + i);
        else
          ++i;
      }

      if (cycle - last_progress > deadlock_window) {
        std::ostringstream os;
        os << "window deadlock at cycle " << cycle << "; unit states:";
        for (int u = 0; u < kUnits; ++u) {
          os << " " << unit_name(Unit(u)) << "=[";
          for (int id : unit_q[u]) os << id << ",";
          os << "]";
        }
        os << " in_flight=" << in_flight;
        for (int id : active) {
          const Mop& m = mops[id];
          os << "\n  mop " << id << " " << m.in.mnemonic << " exec=" << m.exec_done << "/"
             << m.slices << " body=" << m.body_started << "/" << m.body_left
             << " wb=" << m.wb_granted << "/" << m.wb_words << " ready=" << m.wb_ready.size();
          for (const auto& s : m.srcs) {
            os << " src[v" << s.base_reg << " " << s.fetched << "/" << s.words << " dep=";
            for (unsigned k = 0; k < s.span && k < 8; ++k) os << s.dep[k] << ",";
            os << "]";
          }
        }
        throw DeadlockError(os.str());
      }
    }
    finalize();
  }

  bool is_dispatched(int id) const { return mops[id].dispatched; }

  // chained reads from memory or the slide unit pay the hazard-resolution tax
  unsigned chain_penalty(const Mop& producer) const {
    if (!producer.chainable || producer.unit == Unit::Vldu || producer.unit == Unit::Sldu)
      return cfg.effective_hazard_penalty();
    return 0;
  }

  void pop_from_unit(int id) {
    Mop& m = mops[id];
    if (m.unit == Unit::None) return;
    auto& q = unit_q[int(m.unit)];
    auto it = std::find(q.begin(), q.end(), id);
    if (it != q.end()) q.erase(it);
  }

  bool mop_complete(const Mop& m) const {
    switch (m.cls) {
      case MopClass::Nop: return true;
      case MopClass::Stream:
        return m.exec_done >= m.slices && m.wb_granted >= m.wb_words && m.wb_ready.empty();
      case MopClass::Permute:
        return m.body_started && m.body_left == 0 && m.wb_granted >= m.wb_words &&
               m.wb_ready.empty();
      case MopClass::Load:
        return m.mem_done >= m.mem_bytes && m.wb_granted >= m.wb_words && m.wb_ready.empty();
      case MopClass::Store: {
        bool fetched = true;
        for (const auto& s : m.srcs) fetched = fetched && s.fetched >= s.words;
        return fetched && m.mem_done >= m.mem_bytes;
      }
    }
    return false;
  }

  void step_memory() {
    // read channel: one refill or one load transfer per cycle
    if (cycle < rchannel_refill_until) {
      // refill owns the channel
    } else if (!unit_q[int(Unit::Vldu)].empty()) {
      const int id = unit_q[int(Unit::Vldu)].front();
      Mop& m = mops[id];
      bool index_ready = true;
      for (const auto& s : m.srcs) index_ready = index_ready && s.fetched >= s.words;
      if (m.mem_request_at == ~uint64_t(0)) {
        if (index_ready) m.mem_request_at = cycle;
      }
      if (m.mem_request_at != ~uint64_t(0) && cycle >= m.mem_request_at + cfg.mem_latency_vec &&
          m.mem_done < m.mem_bytes) {
        if (m.mem_elementwise)
          m.mem_done = std::min<uint64_t>(m.mem_bytes, m.mem_done + m.mem_esize);
        else
          m.mem_done = std::min<uint64_t>(m.mem_bytes, m.mem_done + cfg.mem_bandwidth());
        rep.unit_busy["vldu"]++;
        last_progress = cycle;
        // queue writebacks for newly completed slices
        const uint64_t slice_bytes = cfg.compute_bandwidth();
        uint64_t done_slices = m.mem_done / slice_bytes;
        if (m.mem_done == m.mem_bytes) done_slices = m.wb_words;
        done_slices = std::min<uint64_t>(m.wb_words, done_slices);
        while (m.wb_ready.size() + m.wb_granted < done_slices) m.wb_ready.push_back(cycle + 1);
      } else if (m.mem_done < m.mem_bytes) {
        rep.memory_stalls++;
      }
    }

    // write channel: the store unit streams fetched data out
    if (!unit_q[int(Unit::Vstu)].empty()) {
      const int id = unit_q[int(Unit::Vstu)].front();
      Mop& m = mops[id];
      bool aux_ready = true;  // index / mask operands precede the address phase
      for (std::size_t i = 1; i < m.srcs.size(); ++i)
        aux_ready = aux_ready && m.srcs[i].fetched >= m.srcs[i].words;
      uint64_t fetched_bytes = m.srcs.empty() ? 0 : m.srcs[0].fetched * cfg.compute_bandwidth();
      fetched_bytes = std::min(fetched_bytes, m.mem_bytes);
      if (aux_ready && m.mem_done < fetched_bytes) {
        if (m.mem_elementwise)
          m.mem_done = std::min<uint64_t>(fetched_bytes, m.mem_done + m.mem_esize);
        else
          m.mem_done = std::min<uint64_t>(fetched_bytes, m.mem_done + cfg.mem_bandwidth());
        rep.unit_busy["vstu"]++;
        last_progress = cycle;
      }
    }
  }

  // One serial operand requester per (unit, operand slot) and one writeback
  // port per unit. A requester walks its slot's streams in instruction order,
  // one bank request per cycle, so the bank rotation carries over seamlessly
  // from one instruction to the next when their start banks line up.
  void step_banks() {
    struct Req {
      int mop;
      int src;  // -1 for writeback
      BankRequest br;
    };
    std::vector<Req> reqs;
    unsigned rid = 0;

    for (int u = 0; u < kUnits; ++u) {
      auto& q = unit_q[u];
      if (q.empty()) continue;
      const unsigned max_slots = 3;
      for (unsigned slot = 0; slot < max_slots; ++slot) {
        // per-slot FIFO occupancy across queued instructions
        uint64_t unconsumed = 0;
        int pick = -1;
        for (int id : q) {
          Mop& m = mops[id];
          if (slot >= m.srcs.size()) continue;
          auto& s = m.srcs[slot];
          // permute/memory units buffer their whole operand internally
          const uint64_t consumed =
              m.cls == MopClass::Stream
                  ? std::min<uint64_t>(s.words, (m.exec_done * s.words + m.slices - 1) / m.slices)
                  : s.fetched;
          unconsumed += s.fetched - std::min(s.fetched, consumed);
          if (s.fetched < s.words) {
            pick = id;
            break;  // serial: the slot requester works one stream at a time
          }
        }
        if (pick < 0) continue;
        if (unconsumed >= cfg.effective_queue_depth() * 2) continue;  // slot FIFO full
        Mop& m = mops[pick];
        auto& s = m.srcs[slot];
        if (!fetch_allowed(m, s)) continue;
        auto [reg, word] = locate(s.base_reg, s.fetched);
        if (reg >= 32) continue;
        reqs.push_back({pick, int(slot), {bank_of(reg, word), 0, rid++}});
      }
      // writeback port: oldest pending writeback in this unit
      for (int id : q) {
        Mop& m = mops[id];
        if (!m.writes || m.wb_granted >= m.wb_words) continue;
        if (m.wb_ready.empty()) break;  // in-order writeback per unit
        if (m.wb_ready.front() > cycle) break;
        if (!wb_allowed(m)) break;
        auto [reg, word] = locate(m.wb_base, m.wb_granted);
        if (reg < 32) reqs.push_back({id, -1, {bank_of(reg, word), 1, rid++}});
        break;
      }
    }

    std::vector<BankRequest> brs;
    brs.reserve(reqs.size());
    for (auto& r : reqs) brs.push_back(r.br);
    auto res = arbitrate_banks(brs, cfg.banks_per_lane, cycle);
    rep.bank_stalls += res.stalls;
    for (auto& [bank, id] : res.granted) {
      Req& r = reqs[id];
      Mop& m = mops[r.mop];
      if (r.src >= 0) {
        m.srcs[r.src].fetched++;
      } else {
        auto [reg, word] = locate(m.wb_base, m.wb_granted);
        if (reg < 32) {
          const uint64_t avail = cycle + 1 + chain_penalty(m);
          word_ready[reg][word] = std::max(word_ready[reg][word], avail);
        }
        m.wb_granted++;
        m.wb_ready.pop_front();
      }
      last_progress = cycle;
    }
  }

  void step_unit(Unit u) {
    auto& q = unit_q[int(u)];
    if (q.empty()) return;
    // SLDU can be reserved by an in-flight reduction's inter-lane phase
    if (u == Unit::Sldu && cycle >= sldu_reserved_from && cycle < sldu_reserved_to) {
      rep.unit_busy["sldu"]++;
      return;
    }
    // pipeline drain overlaps the next instruction: skip mops that finished
    // their occupancy and are only waiting on writeback grants
    int id = -1;
    for (int cand : q) {
      const Mop& c = mops[cand];
      const bool drained = (c.cls == MopClass::Stream && c.exec_done >= c.slices) ||
                           (c.cls == MopClass::Permute && c.body_started && c.body_left == 0);
      if (!drained) {
        id = cand;
        break;
      }
    }
    if (id < 0) return;
    Mop& m = mops[id];
    switch (m.cls) {
      case MopClass::Stream: {
        if (m.exec_done >= m.slices) return;
        if (cycle < m.next_exec) return;
        for (const auto& s : m.srcs) {
          const uint64_t need = ((m.exec_done + 1) * s.words + m.slices - 1) / m.slices;
          if (s.fetched < need) {
            rep.unit_busy[std::string("wait_") + unit_name(u)]++;
            return;
          }
        }
        m.exec_done++;
        m.next_exec = cycle + m.exec_interval;
        rep.unit_busy[unit_name(u)]++;
        last_progress = cycle;
        if (m.writes && m.wb_granted + m.wb_ready.size() < m.wb_words) {
          const uint64_t out_words = std::min<uint64_t>(
              m.wb_words, (m.exec_done * m.wb_words + m.slices - 1) / m.slices);
          while (m.wb_granted + m.wb_ready.size() < out_words)
            m.wb_ready.push_back(cycle + m.pipe_depth);
        }
        return;
      }
      case MopClass::Permute: {
        if (!m.body_started) {
          for (const auto& s : m.srcs)
            if (s.fetched < s.words) return;  // gathering through the banks
          m.body_started = true;
          last_progress = cycle;
          if (m.in.kind == OpKind::Reduction) {
            sldu_reserved_from = cycle + m.sldu_block_from;
            sldu_reserved_to = cycle + m.sldu_block_to;
          }
        }
        if (m.body_left > 0) {
          m.body_left--;
          rep.unit_busy[unit_name(u)]++;
          last_progress = cycle;
        }
        if (m.body_left == 0)
          while (m.wb_granted + m.wb_ready.size() < m.wb_words)
            m.wb_ready.push_back(cycle + 1);
        return;
      }
      case MopClass::Load:
      case MopClass::Store:
      case MopClass::Nop:
        return;  // driven by step_memory / dispatch
    }
  }

  void finalize() {
    rep.flops = prog.flops > 0 ? prog.flops : rep.dyn_ops;
    rep.cycles = dispatched_count == 0 ? 0 : last_retire - first_dispatch + 1;
    rep.flop_per_cycle = rep.cycles == 0 ? 0.0 : rep.flops / double(rep.cycles);
    rep.issue_stalls += fe.gate_stalls;
    if (fe.icache) {
      rep.i_miss = fe.icache->misses;
      rep.d_miss = fe.dcache->misses;
    }
    for (const char* n : {"alu", "muldiv", "fpu", "vldu", "vstu", "sldu", "masku"})
      rep.unit_busy.try_emplace(n, 0);
  }
};

}  // namespace

CycleReport simulate(const Program& prog, const MachineConfig& cfg, const FrontendConfig& fcfg,
                     SimMemory& mem, VrfState* out_vrf) {
  Engine e(prog, cfg, fcfg, mem);
  e.run();
  if (out_vrf) *out_vrf = e.vrf;
  return e.rep;
}

CycleReport simulate(const Program& prog, const MachineConfig& cfg, const FrontendConfig& fcfg) {
  SimMemory mem(cfg.mem_bytes);
  return simulate(prog, cfg, fcfg, mem);
}

}  // namespace laneforge
