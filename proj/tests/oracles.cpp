#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <sstream>

namespace laneforge::testing {

namespace {

uint64_t ld(const uint8_t* p, unsigned esize) {
  uint64_t v = 0;
  std::memcpy(&v, p, esize);
  return v;
}
void st(uint8_t* p, unsigned esize, uint64_t v) { std::memcpy(p, &v, esize); }

double fd(uint64_t b) {
  double d;
  std::memcpy(&d, &b, 8);
  return d;
}
uint64_t db(double d) {
  uint64_t b;
  std::memcpy(&b, &d, 8);
  return b;
}
float ff(uint64_t b) {
  uint32_t w = uint32_t(b);
  float f;
  std::memcpy(&f, &w, 4);
  return f;
}
uint64_t fb(float f) {
  uint32_t w;
  std::memcpy(&w, &f, 4);
  return w;
}

uint64_t cut(uint64_t v, unsigned eew) {
  return eew >= 64 ? v : v & ((uint64_t(1) << eew) - 1);
}

int64_t sgn(uint64_t v, unsigned eew) {
  if (eew == 64) return int64_t(v);
  uint64_t m = uint64_t(1) << (eew - 1);
  return int64_t((cut(v, eew) ^ m) - m);
}

bool mbit(const RefState& s, uint64_t i) { return (s.regs[0][i / 8] >> (i % 8)) & 1; }

// element access treating a register group as one contiguous image
uint64_t gelem(const RefState& s, unsigned base, uint64_t i, unsigned esize) {
  const std::size_t rb = s.regs[0].size();
  const std::size_t off = i * esize;
  return ld(s.regs[base + off / rb].data() + off % rb, esize);
}
void setelem(RefState& s, unsigned base, uint64_t i, unsigned esize, uint64_t v) {
  const std::size_t rb = s.regs[0].size();
  const std::size_t off = i * esize;
  st(s.regs[base + off / rb].data() + off % rb, esize, v);
}

void tag_written(RefState& s, unsigned base, unsigned eew, uint64_t vl, unsigned group) {
  const uint64_t per_reg = uint64_t(s.regs[0].size()) / (eew / 8);
  for (unsigned k = 0; k < group; ++k)
    if (vl > uint64_t(k) * per_reg) s.tag[base + k] = eew;
}

}  // namespace

void ref_exec(const VInstr& in, RefState& s) {
  const uint64_t vl = in.vtype.vl;
  const unsigned sew = in.vtype.sew;
  const unsigned group = in.vtype.lmul;

  // all register sources are read from a pre-instruction snapshot
  const RefState snap = s;

  auto skip = [&](uint64_t i) { return in.masked && !mbit(snap, i); };

  if (in.kind == OpKind::VSetVl) return;

  if (in.kind == OpKind::Load || in.kind == OpKind::Store) {
    const unsigned esize = in.eew_vd / 8;
    const unsigned isize = in.eew_vs2 / 8;
    for (uint64_t i = 0; i < vl; ++i) {
      if (skip(i)) continue;
      uint64_t a = in.scalar_ops[0];
      if (in.addressing == Addressing::Unit) a += i * esize;
      if (in.addressing == Addressing::Strided) a += uint64_t(int64_t(i) * in.stride);
      if (in.addressing == Addressing::Indexed) a += gelem(snap, in.vs2, i, isize);
      if (a + esize > s.mem.size())
        throw std::runtime_error("ref: address out of bounds at line " +
                                 std::to_string(in.line_no) + " (" + in.mnemonic + ")");
      if (in.kind == OpKind::Load) {
        uint64_t v = ld(s.mem.data() + a, esize);
        setelem(s, in.vd, i, esize, v);
      } else {
        st(s.mem.data() + a, esize, gelem(snap, in.vd, i, esize));
      }
    }
    if (in.kind == OpKind::Load) tag_written(s, in.vd, in.eew_vd, vl, in.dest_regs);
    return;
  }

  if (in.kind == OpKind::ArithInt || in.kind == OpKind::ArithFp || in.kind == OpKind::Fmacc) {
    const unsigned esize = sew / 8;
    for (uint64_t i = 0; i < vl; ++i) {
      if (skip(i)) continue;
      const uint64_t b = gelem(snap, in.vs2, i, esize);
      const uint64_t a = in.has_vs1 ? gelem(snap, in.vs1, i, esize) : in.scalar_ops[0];
      uint64_t r = 0;
      const std::string& f = in.family;
      if (f == "vadd") r = b + a;
      else if (f == "vsub") r = b - a;
      else if (f == "vand") r = b & a;
      else if (f == "vor") r = b | a;
      else if (f == "vxor") r = b ^ a;
      else if (f == "vsll") r = cut(b, sew) << (a & (sew - 1));
      else if (f == "vsrl") r = cut(b, sew) >> (a & (sew - 1));
      else if (f == "vmul") r = b * a;
      else if (f == "vfadd") r = sew == 64 ? db(fd(b) + fd(a)) : fb(ff(b) + ff(a));
      else if (f == "vfmul") r = sew == 64 ? db(fd(b) * fd(a)) : fb(ff(b) * ff(a));
      else if (f == "vfdiv") r = sew == 64 ? db(fd(b) / fd(a)) : fb(ff(b) / ff(a));
      else if (f == "vfmacc") {
        const uint64_t c = gelem(snap, in.vd, i, esize);
        r = sew == 64 ? db(std::fma(fd(a), fd(b), fd(c))) : fb(std::fmaf(ff(a), ff(b), ff(c)));
      }
      setelem(s, in.vd, i, esize, cut(r, sew));
    }
    tag_written(s, in.vd, sew, vl, in.dest_regs);
    return;
  }

  if (in.kind == OpKind::Reduction) {
    const unsigned esize = sew / 8;
    if (in.family == "vfredusum") {
      if (sew == 64) {
        double acc = fd(gelem(snap, in.vs1, 0, 8));
        for (uint64_t i = 0; i < vl; ++i)
          if (!skip(i)) acc += fd(gelem(snap, in.vs2, i, 8));
        setelem(s, in.vd, 0, 8, db(acc));
      } else {
        float acc = ff(gelem(snap, in.vs1, 0, 4));
        for (uint64_t i = 0; i < vl; ++i)
          if (!skip(i)) acc += ff(gelem(snap, in.vs2, i, 4));
        setelem(s, in.vd, 0, 4, fb(acc));
      }
    } else {
      uint64_t acc = gelem(snap, in.vs1, 0, esize);
      for (uint64_t i = 0; i < vl; ++i)
        if (!skip(i)) acc += gelem(snap, in.vs2, i, esize);
      setelem(s, in.vd, 0, esize, cut(acc, sew));
    }
    s.tag[in.vd] = sew;
    return;
  }

  if (in.kind == OpKind::Slide) {
    const unsigned esize = sew / 8;
    const uint64_t amt = uint64_t(in.stride < 0 ? -in.stride : in.stride);
    if (in.family == "vslideup") {
      for (uint64_t i = vl; i-- > amt;)
        if (!skip(i)) setelem(s, in.vd, i, esize, gelem(snap, in.vs2, i - amt, esize));
    } else if (in.family == "vslidedown") {
      for (uint64_t i = 0; i < vl; ++i)
        if (i + amt < vl && !skip(i)) setelem(s, in.vd, i, esize, gelem(snap, in.vs2, i + amt, esize));
    } else if (in.family == "vslide1up") {
      for (uint64_t i = vl; i-- > 1;)
        if (!skip(i)) setelem(s, in.vd, i, esize, gelem(snap, in.vs2, i - 1, esize));
      if (vl > 0 && !skip(0)) setelem(s, in.vd, 0, esize, cut(in.scalar_ops[0], sew));
    } else {  // vslide1down / vfslide1down
      for (uint64_t i = 0; i + 1 < vl; ++i)
        if (!skip(i)) setelem(s, in.vd, i, esize, gelem(snap, in.vs2, i + 1, esize));
      if (vl > 0 && !skip(vl - 1)) setelem(s, in.vd, vl - 1, esize, cut(in.scalar_ops[0], sew));
    }
    tag_written(s, in.vd, sew, vl, in.dest_regs);
    return;
  }

  if (in.kind == OpKind::MaskOp) {
    if (in.family == "vmseq" || in.family == "vmslt") {
      const unsigned esize = sew / 8;
      for (uint64_t i = 0; i < vl; ++i) {
        if (skip(i)) continue;
        const uint64_t b = gelem(snap, in.vs2, i, esize);
        const uint64_t a = in.has_vs1 ? gelem(snap, in.vs1, i, esize) : cut(in.scalar_ops[0], sew);
        const bool bit =
            in.family == "vmseq" ? cut(b, sew) == cut(a, sew) : sgn(b, sew) < sgn(a, sew);
        uint8_t& by = s.regs[in.vd][i / 8];
        by = uint8_t((by & ~(1u << (i % 8))) | (unsigned(bit) << (i % 8)));
      }
      s.tag[in.vd] = 8;
    } else if (in.family == "vmand" || in.family == "vmor") {
      for (uint64_t i = 0; i < vl; ++i) {
        const bool a = (snap.regs[in.vs1][i / 8] >> (i % 8)) & 1;
        const bool b = (snap.regs[in.vs2][i / 8] >> (i % 8)) & 1;
        const bool bit = in.family == "vmand" ? a && b : a || b;
        uint8_t& by = s.regs[in.vd][i / 8];
        by = uint8_t((by & ~(1u << (i % 8))) | (unsigned(bit) << (i % 8)));
      }
      s.tag[in.vd] = 8;
    }
    // vcpop/vfirst produce scalars only
    return;
  }

  if (in.kind == OpKind::Move) {
    const unsigned esize = sew / 8;
    if (in.whole_register) {
      s.regs[in.vd] = snap.regs[in.vs2];
      s.tag[in.vd] = snap.tag[in.vs2];
      return;
    }
    if (in.form == OperandForm::XS || in.form == OperandForm::FS) return;
    if (in.form == OperandForm::SX || in.form == OperandForm::SF) {
      if (vl > 0) {
        setelem(s, in.vd, 0, esize, cut(in.scalar_ops[0], sew));
        s.tag[in.vd] = sew;
      }
      return;
    }
    if (in.family == "vmerge") {
      for (uint64_t i = 0; i < vl; ++i) {
        const uint64_t v = mbit(snap, i)
                               ? (in.has_vs1 ? gelem(snap, in.vs1, i, esize) : cut(in.scalar_ops[0], sew))
                               : gelem(snap, in.vs2, i, esize);
        setelem(s, in.vd, i, esize, v);
      }
    } else {
      for (uint64_t i = 0; i < vl; ++i) {
        if (skip(i)) continue;
        const uint64_t v =
            in.has_vs1 ? gelem(snap, in.vs1, i, esize) : cut(in.scalar_ops[0], sew);
        setelem(s, in.vd, i, esize, v);
      }
    }
    tag_written(s, in.vd, sew, vl, in.dest_regs);
    return;
  }
}

uint64_t drain_pipeline_oracle(unsigned stages) {
  if (stages == 0) return 0;
  // partials become available one per cycle starting at time 0
  std::deque<uint64_t> avail;
  for (unsigned i = 0; i < stages; ++i) avail.push_back(i);
  uint64_t last_issue = 0;
  bool issued = false;
  while (avail.size() > 1) {
    std::sort(avail.begin(), avail.end());
    const uint64_t t1 = avail[0], t2 = avail[1];
    avail.pop_front();
    avail.pop_front();
    uint64_t issue = std::max(t1, t2);
    if (issued) issue = std::max(issue, last_issue + 1);  // one adder port
    avail.push_back(issue + stages);
    last_issue = issue;
    issued = true;
  }
  return avail.front();
}

std::size_t physical_index_oracle(uint64_t mem_byte, unsigned eew, unsigned lanes,
                                  unsigned vlen_per_lane) {
  const unsigned esize = eew / 8;
  const uint64_t element = mem_byte / esize;
  const unsigned byte_in_elem = unsigned(mem_byte % esize);
  const unsigned lane = unsigned(element % lanes);
  const uint64_t slot = element / lanes;
  const unsigned per_word = 8 / esize;
  const uint64_t word = slot / per_word;
  const unsigned pos = unsigned(slot % per_word) * esize + byte_in_elem;
  return std::size_t(lane) * (vlen_per_lane / 8) + word * 8 + pos;
}

namespace {

struct TraceGen {
  const MachineConfig& cfg;
  std::mt19937_64 rng;
  std::ostringstream out;
  uint64_t window;
  unsigned sew = 64, lmul = 1;
  uint64_t vl = 0, vlmax = 0;

  TraceGen(const MachineConfig& c, uint64_t seed, uint64_t win)
      : cfg(c), rng(seed), window(win) {}

  unsigned pick_reg(unsigned align = 1, bool allow_v0 = true) {
    while (true) {
      unsigned r = unsigned(rng() % 32);
      r -= r % align;
      if (r + align > 32) continue;
      if (!allow_v0 && r == 0) continue;
      return r;
    }
  }

  void scalar(const std::string& reg, uint64_t v) {
    out << "@scalar " << reg << "=0x" << std::hex << v << std::dec << "\n";
  }

  void setvl() {
    static const unsigned sews[] = {8, 16, 32, 64};
    static const unsigned lmuls[] = {1, 1, 1, 2, 4, 8};
    sew = sews[rng() % 4];
    lmul = lmuls[rng() % 6];
    vlmax = uint64_t(cfg.vlen_total()) * lmul / sew;
    const unsigned mode = rng() % 8;
    uint64_t avl = mode == 0 ? 0 : mode == 1 ? vlmax : rng() % (vlmax + 1);
    vl = std::min(avl, vlmax);
    scalar("a0", avl);
    out << "vsetvli t0, a0, e" << sew << ", m" << lmul << "\n";
  }

  std::string vreg(unsigned r) { return "v" + std::to_string(r); }

  std::string mask_suffix(bool allow = true) {
    return (allow && rng() % 4 == 0) ? ", v0.t" : "";
  }

  void emit(unsigned count) {
    // populate every register and some memory-resident masks first
    scalar("a0", cfg.reg_bytes());
    out << "vsetvli t0, a0, e8, m1\n";
    for (unsigned r = 0; r < 32; ++r) {
      scalar("a1", 0x100 + r * cfg.reg_bytes());
      out << "vle8.v v" << r << ", (a1)\n";
    }
    setvl();
    for (unsigned i = 0; i < count; ++i) {
      switch (rng() % 12) {
        case 0:
          setvl();
          break;
        case 1: {  // int arith
          static const char* fams[] = {"vadd", "vsub", "vand", "vor", "vxor",
                                       "vsll", "vsrl", "vmul"};
          const std::string f = fams[rng() % 8];
          const unsigned form = (f == "vsub" || f == "vmul") ? rng() % 2 : rng() % 3;
          const unsigned vd = pick_reg(lmul, false);
          const unsigned a = pick_reg(lmul), b = pick_reg(lmul);
          if (form == 0)
            out << f << ".vv " << vreg(vd) << ", " << vreg(a) << ", " << vreg(b)
                << mask_suffix() << "\n";
          else if (form == 1) {
            scalar("t2", rng());
            out << f << ".vx " << vreg(vd) << ", " << vreg(a) << ", t2" << mask_suffix() << "\n";
          } else {
            out << f << ".vi " << vreg(vd) << ", " << vreg(a) << ", "
                << int(rng() % 31) - 15 << mask_suffix() << "\n";
          }
          break;
        }
        case 2: {  // fp arith
          if (sew < 32) break;
          static const char* fams[] = {"vfadd", "vfmul", "vfdiv", "vfmacc"};
          const std::string f = fams[rng() % 4];
          const unsigned vd = pick_reg(lmul, false);
          const unsigned a = pick_reg(lmul), b = pick_reg(lmul);
          if (rng() % 2) {
            if (f == "vfmacc")
              out << f << ".vv " << vreg(vd) << ", " << vreg(a) << ", " << vreg(b)
                  << mask_suffix() << "\n";
            else
              out << f << ".vv " << vreg(vd) << ", " << vreg(a) << ", " << vreg(b)
                  << mask_suffix() << "\n";
          } else {
            scalar("f1", rng());
            if (f == "vfmacc")
              out << f << ".vf " << vreg(vd) << ", f1, " << vreg(b) << mask_suffix() << "\n";
            else
              out << f << ".vf " << vreg(vd) << ", " << vreg(a) << ", f1" << mask_suffix()
                  << "\n";
          }
          break;
        }
        case 3: {  // unit load/store
          unsigned ew = 8u << (rng() % 4);
          while (ew * lmul / sew > 8) ew /= 2;
          const unsigned emul = std::max(1u, ew * lmul / sew);
          const unsigned vd = pick_reg(std::max(lmul, emul));
          const uint64_t span = vl * ew / 8 + 8;
          if (span + 8 >= window) break;
          scalar("a1", rng() % (window - span));
          const bool is_load = rng() % 2;
          out << (is_load ? "vle" : "vse") << ew << ".v " << vreg(vd) << ", (a1)"
              << mask_suffix() << "\n";
          break;
        }
        case 4: {  // strided
          unsigned ew = 8u << (rng() % 4);
          while (ew * lmul / sew > 8) ew /= 2;
          const unsigned emul = std::max(1u, ew * lmul / sew);
          const unsigned vd = pick_reg(std::max(lmul, emul));
          const int64_t stride = int64_t(rng() % 65) - 32;
          const uint64_t reach = (vl ? vl : 1) * uint64_t(stride < 0 ? -stride : stride) + 16;
          if (reach + 16 >= window) break;
          const uint64_t base = stride < 0 ? reach + rng() % (window - reach - 8)
                                           : rng() % (window - reach);
          scalar("a1", base);
          scalar("t3", uint64_t(stride));
          out << (rng() % 2 ? "vlse" : "vsse") << ew << ".v " << vreg(vd) << ", (a1), t3"
              << mask_suffix() << "\n";
          break;
        }
        case 5: {  // indexed, with the index register bounded first
          unsigned iew = 8u << (rng() % 4);
          while (iew > sew) iew /= 2;  // keep the index group within lmul registers
          const unsigned vidx = pick_reg(lmul, false);
          const unsigned vd = pick_reg(lmul);
          scalar("t2", 0x3ff);
          out << "vand.vx " << vreg(vidx) << ", " << vreg(vidx) << ", t2\n";
          if (window < 0x400 + 16) break;
          scalar("a1", rng() % (window - 0x400 - 8));
          static const char* ops[] = {"vluxei", "vloxei", "vsuxei", "vsoxei"};
          out << ops[rng() % 4] << iew << ".v " << vreg(vd) << ", (a1), " << vreg(vidx)
              << mask_suffix() << "\n";
          break;
        }
        case 6: {  // slides
          const unsigned vd = pick_reg(lmul, false);
          const unsigned vs = pick_reg(lmul);
          const unsigned pick = unsigned(rng() % 5);
          if (pick == 0) {
            out << "vslideup.vi " << vreg(vd) << ", " << vreg(vs) << ", " << rng() % 16
                << mask_suffix() << "\n";
          } else if (pick == 1) {
            scalar("t2", rng() % (vlmax + 2));
            out << "vslidedown.vx " << vreg(vd) << ", " << vreg(vs) << ", t2" << mask_suffix()
                << "\n";
          } else if (pick == 2) {
            scalar("t2", rng());
            out << "vslide1up.vx " << vreg(vd) << ", " << vreg(vs) << ", t2" << mask_suffix()
                << "\n";
          } else if (pick == 3) {
            scalar("t2", rng());
            out << "vslide1down.vx " << vreg(vd) << ", " << vreg(vs) << ", t2" << mask_suffix()
                << "\n";
          } else if (sew >= 32) {
            scalar("f1", rng());
            out << "vfslide1down.vf " << vreg(vd) << ", " << vreg(vs) << ", f1" << mask_suffix()
                << "\n";
          }
          break;
        }
        case 7: {  // reductions
          const unsigned vd = pick_reg(1, false);
          const unsigned vs2 = pick_reg(lmul);
          const unsigned vs1 = pick_reg(1);
          if (sew >= 32 && rng() % 2)
            out << "vfredusum.vs " << vreg(vd) << ", " << vreg(vs2) << ", " << vreg(vs1)
                << mask_suffix() << "\n";
          else
            out << "vredsum.vs " << vreg(vd) << ", " << vreg(vs2) << ", " << vreg(vs1)
                << mask_suffix() << "\n";
          break;
        }
        case 8: {  // compares and mask logicals
          const unsigned pick = unsigned(rng() % 4);
          if (pick < 2) {
            const unsigned vd = pick_reg(1, false);
            const unsigned a = pick_reg(lmul), b = pick_reg(lmul);
            const char* f = pick == 0 ? "vmseq" : "vmslt";
            if (rng() % 2)
              out << f << ".vv " << vreg(vd) << ", " << vreg(a) << ", " << vreg(b)
                  << mask_suffix() << "\n";
            else {
              scalar("t2", rng());
              out << f << ".vx " << vreg(vd) << ", " << vreg(a) << ", t2" << mask_suffix()
                  << "\n";
            }
          } else {
            const char* f = pick == 2 ? "vmand" : "vmor";
            out << f << ".mm " << vreg(pick_reg(1, false)) << ", " << vreg(pick_reg(1)) << ", "
                << vreg(pick_reg(1)) << "\n";
          }
          break;
        }
        case 9: {  // vcpop / vfirst
          out << (rng() % 2 ? "vcpop.m a4, " : "vfirst.m a4, ") << vreg(pick_reg(1))
              << mask_suffix() << "\n";
          break;
        }
        case 10: {  // moves
          const unsigned pick = unsigned(rng() % 6);
          const unsigned vd = pick_reg(lmul, false);
          if (pick == 0)
            out << "vmv.v.v " << vreg(vd) << ", " << vreg(pick_reg(lmul)) << "\n";
          else if (pick == 1) {
            scalar("t2", rng());
            out << "vmv.v.x " << vreg(vd) << ", t2\n";
          } else if (pick == 2)
            out << "vmv.v.i " << vreg(vd) << ", " << int(rng() % 31) - 15 << "\n";
          else if (pick == 3) {
            scalar("t2", rng());
            out << "vmv.s.x " << vreg(pick_reg(1, false)) << ", t2\n";
          } else if (pick == 4)
            out << "vmv1r.v " << vreg(pick_reg(1, false)) << ", " << vreg(pick_reg(1)) << "\n";
          else if (sew >= 32) {
            scalar("f1", rng());
            out << "vfmv.v.f " << vreg(vd) << ", f1\n";
          }
          break;
        }
        default: {  // vmerge
          const unsigned vd = pick_reg(lmul, false);
          const unsigned a = pick_reg(lmul, false), b = pick_reg(lmul, false);
          if (rng() % 2)
            out << "vmerge.vvm " << vreg(vd) << ", " << vreg(a) << ", " << vreg(b) << ", v0\n";
          else {
            scalar("t2", rng());
            out << "vmerge.vxm " << vreg(vd) << ", " << vreg(a) << ", t2, v0\n";
          }
          break;
        }
      }
    }
  }
};

}  // namespace

std::string random_trace(unsigned instructions, const MachineConfig& cfg, uint64_t seed,
                         uint64_t mem_window) {
  TraceGen g(cfg, seed, mem_window);
  g.emit(instructions);
  return g.out.str();
}

}  // namespace laneforge::testing
