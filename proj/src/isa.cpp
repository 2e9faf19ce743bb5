#include "laneforge/isa.hpp"

#include <cmath>
#include <cstring>
#include <functional>

namespace laneforge {

std::string to_string(SlduKind k) {
  switch (k) {
    case SlduKind::AllToAll: return "all-to-all";
    case SlduKind::SlideP2Combined: return "slidep2-combined";
    case SlduKind::SlideP2Timemux: return "slidep2-timemux";
    case SlduKind::Slide1Combined: return "slide1-combined";
    case SlduKind::Slide1Timemux: return "slide1-timemux";
  }
  return "?";
}

SlduKind sldu_kind_from_string(const std::string& s) {
  if (s == "all-to-all") return SlduKind::AllToAll;
  if (s == "slidep2-combined") return SlduKind::SlideP2Combined;
  if (s == "slidep2-timemux") return SlduKind::SlideP2Timemux;
  if (s == "slide1-combined") return SlduKind::Slide1Combined;
  if (s == "slide1-timemux") return SlduKind::Slide1Timemux;
  throw ConfigError("unknown slide-unit kind '" + s + "'");
}

VType vsetvl(uint64_t avl, unsigned sew, unsigned lmul, const MachineConfig& cfg) {
  if (sew != 8 && sew != 16 && sew != 32 && sew != 64)
    throw ConfigError("unsupported sew " + std::to_string(sew));
  if (lmul != 1 && lmul != 2 && lmul != 4 && lmul != 8)
    throw ConfigError("unsupported lmul " + std::to_string(lmul));
  VType t;
  t.sew = sew;
  t.lmul = lmul;
  t.vlmax = uint64_t(cfg.vlen_total()) * lmul / sew;
  t.vl = std::min(avl, t.vlmax);
  return t;
}

namespace {

uint64_t load_elem(const uint8_t* p, unsigned esize) {
  uint64_t v = 0;
  std::memcpy(&v, p, esize);
  return v;
}

void store_elem(uint8_t* p, unsigned esize, uint64_t v) { std::memcpy(p, &v, esize); }

int64_t sext(uint64_t v, unsigned eew) {
  if (eew == 64) return int64_t(v);
  uint64_t sign = uint64_t(1) << (eew - 1);
  return int64_t((v ^ sign) - sign);
}

uint64_t trunc(uint64_t v, unsigned eew) {
  return eew == 64 ? v : v & ((uint64_t(1) << eew) - 1);
}

double as_f64(uint64_t bits) {
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}
uint64_t f64_bits(double d) {
  uint64_t b;
  std::memcpy(&b, &d, 8);
  return b;
}
float as_f32(uint64_t bits) {
  uint32_t w = uint32_t(bits);
  float f;
  std::memcpy(&f, &w, 4);
  return f;
}
uint64_t f32_bits(float f) {
  uint32_t w;
  std::memcpy(&w, &f, 4);
  return w;
}

// a = vs1 or the forwarded scalar, b = vs2; results follow vd = vs2 op vs1
uint64_t fp_binop(const std::string& fam, uint64_t a, uint64_t b, uint64_t acc, unsigned eew) {
  if (eew == 64) {
    double x = as_f64(a), y = as_f64(b);
    if (fam == "vfadd") return f64_bits(y + x);
    if (fam == "vfmul") return f64_bits(y * x);
    if (fam == "vfdiv") return f64_bits(y / x);
    if (fam == "vfmacc") return f64_bits(std::fma(x, y, as_f64(acc)));
  } else {
    float x = as_f32(a), y = as_f32(b);
    if (fam == "vfadd") return f32_bits(y + x);
    if (fam == "vfmul") return f32_bits(y * x);
    if (fam == "vfdiv") return f32_bits(y / x);
    if (fam == "vfmacc") return f32_bits(std::fmaf(x, y, as_f32(acc)));
  }
  throw IllegalInstruction("fp op " + fam + " at eew " + std::to_string(eew));
}

}  // namespace

ExecResult exec_functional(const VInstr& in, VrfState& vrf, SimMemory& mem) {
  ExecResult res;
  const VType vt = in.vtype;
  const uint64_t vl = in.whole_register ? 0 : vt.vl;  // vmv1r resolves its own span

  auto set_tag = [&](unsigned base, unsigned eew) {
    const uint64_t per_reg = uint64_t(vrf.reg_bytes) / (eew / 8);
    for (unsigned k = 0; k < in.dest_regs; ++k)
      if (vt.vl > uint64_t(k) * per_reg) vrf.eew_tag[base + k] = eew;
  };

  // all sources are read before any write: snapshot the mask and any operand
  // a destination write could alias at a different element index
  std::vector<uint8_t> mask_snap;
  if (in.masked) mask_snap.assign(vrf.reg(0), vrf.reg(0) + vrf.reg_bytes);
  auto active = [&](uint64_t i) {
    return !in.masked || ((mask_snap[i / 8] >> (i % 8)) & 1);
  };
  auto snapshot_regs = [&](unsigned base, unsigned group) {
    std::vector<uint8_t> s(std::size_t(group) * vrf.reg_bytes);
    std::memcpy(s.data(), vrf.reg(base), s.size());
    return s;
  };

  switch (in.kind) {
    case OpKind::VSetVl: {
      res.scalar = vt.vl;
      return res;
    }

    case OpKind::Load: {
      const unsigned esize = in.eew_vd / 8;
      const unsigned isize = in.addressing == Addressing::Indexed ? in.eew_vs2 / 8 : 0;
      uint8_t* dst = vrf.reg(in.vd);
      std::vector<uint8_t> idx_snap;
      if (in.has_vs2) idx_snap = snapshot_regs(in.vs2, in.idx_regs);
      const uint8_t* idx = in.has_vs2 ? idx_snap.data() : nullptr;
      for (uint64_t i = 0; i < vl; ++i) {
        if (!active(i)) continue;
        uint64_t addr;
        switch (in.addressing) {
          case Addressing::Unit: addr = in.scalar_ops[0] + i * esize; break;
          case Addressing::Strided: addr = in.scalar_ops[0] + uint64_t(int64_t(i) * in.stride); break;
          default: addr = in.scalar_ops[0] + load_elem(idx + i * isize, isize); break;
        }
        mem.check(addr, esize);
        std::memcpy(dst + i * esize, mem.bytes.data() + addr, esize);
      }
      set_tag(in.vd, in.eew_vd);
      return res;
    }

    case OpKind::Store: {
      const unsigned esize = in.eew_vd / 8;
      const unsigned isize = in.addressing == Addressing::Indexed ? in.eew_vs2 / 8 : 0;
      const uint8_t* src = vrf.reg(in.vd);
      const uint8_t* idx = in.has_vs2 ? vrf.reg(in.vs2) : nullptr;
      for (uint64_t i = 0; i < vl; ++i) {
        if (!active(i)) continue;
        uint64_t addr;
        switch (in.addressing) {
          case Addressing::Unit: addr = in.scalar_ops[0] + i * esize; break;
          case Addressing::Strided: addr = in.scalar_ops[0] + uint64_t(int64_t(i) * in.stride); break;
          default: addr = in.scalar_ops[0] + load_elem(idx + i * isize, isize); break;
        }
        mem.check(addr, esize);
        std::memcpy(mem.bytes.data() + addr, src + i * esize, esize);
      }
      return res;
    }

    case OpKind::ArithInt: {
      const unsigned eew = in.eew_vd;
      const unsigned esize = eew / 8;
      uint8_t* vd = vrf.reg(in.vd);
      const uint8_t* vs2 = vrf.reg(in.vs2);
      const uint8_t* vs1 = in.has_vs1 ? vrf.reg(in.vs1) : nullptr;
      for (uint64_t i = 0; i < vl; ++i) {
        if (!active(i)) continue;
        uint64_t b = load_elem(vs2 + i * esize, esize);
        uint64_t a = vs1 ? load_elem(vs1 + i * esize, esize) : in.scalar_ops[0];
        uint64_t r;
        const std::string& f = in.family;
        if (f == "vadd") r = b + a;
        else if (f == "vsub") r = b - a;
        else if (f == "vand") r = b & a;
        else if (f == "vor") r = b | a;
        else if (f == "vxor") r = b ^ a;
        else if (f == "vsll") r = trunc(b, eew) << (a & (eew - 1));
        else if (f == "vsrl") r = trunc(b, eew) >> (a & (eew - 1));
        else if (f == "vmul") r = b * a;
        else throw UnsupportedInstruction("int op " + f);
        store_elem(vd + i * esize, esize, trunc(r, eew));
      }
      set_tag(in.vd, eew);
      return res;
    }

    case OpKind::ArithFp:
    case OpKind::Fmacc: {
      const unsigned eew = in.eew_vd;
      if (eew != 32 && eew != 64)
        throw IllegalInstruction("fp op at eew " + std::to_string(eew));
      const unsigned esize = eew / 8;
      uint8_t* vd = vrf.reg(in.vd);
      const uint8_t* vs2 = vrf.reg(in.vs2);
      const uint8_t* vs1 = in.has_vs1 ? vrf.reg(in.vs1) : nullptr;
      for (uint64_t i = 0; i < vl; ++i) {
        if (!active(i)) continue;
        uint64_t b = load_elem(vs2 + i * esize, esize);
        uint64_t a = vs1 ? load_elem(vs1 + i * esize, esize) : in.scalar_ops[0];
        uint64_t r;
        if (in.kind == OpKind::Fmacc) {
          uint64_t acc = load_elem(vd + i * esize, esize);
          r = fp_binop("vfmacc", a, b, acc, eew);  // vd += vs1 * vs2
        } else if (in.family == "vfdiv") {
          // vfdiv.vv vd, vs2, vs1: vd = vs2 / vs1; .vf divides by the scalar
          r = fp_binop("vfdiv", a, b, 0, eew);
        } else {
          r = fp_binop(in.family, a, b, 0, eew);
        }
        store_elem(vd + i * esize, esize, r);
      }
      set_tag(in.vd, eew);
      return res;
    }

    case OpKind::Reduction: {
      const unsigned eew = in.eew_vd;
      const unsigned esize = eew / 8;
      uint8_t* vd = vrf.reg(in.vd);
      const uint8_t* vs2 = vrf.reg(in.vs2);
      const uint8_t* vs1 = vrf.reg(in.vs1);
      if (in.fp) {
        if (eew == 64) {
          double acc = as_f64(load_elem(vs1, 8));
          for (uint64_t i = 0; i < vl; ++i)
            if (active(i)) acc += as_f64(load_elem(vs2 + i * 8, 8));
          store_elem(vd, 8, f64_bits(acc));
        } else if (eew == 32) {
          float acc = as_f32(load_elem(vs1, 4));
          for (uint64_t i = 0; i < vl; ++i)
            if (active(i)) acc += as_f32(load_elem(vs2 + i * 4, 4));
          store_elem(vd, 4, f32_bits(acc));
        } else {
          throw IllegalInstruction("fp reduction at eew " + std::to_string(eew));
        }
      } else {
        uint64_t acc = load_elem(vs1, esize);
        for (uint64_t i = 0; i < vl; ++i)
          if (active(i)) acc += load_elem(vs2 + i * esize, esize);
        store_elem(vd, esize, trunc(acc, eew));
      }
      vrf.eew_tag[in.vd] = eew;
      return res;
    }

    case OpKind::Slide: {
      const unsigned eew = in.eew_vd;
      const unsigned esize = eew / 8;
      uint8_t* vd = vrf.reg(in.vd);
      const std::vector<uint8_t> src_snap = snapshot_regs(in.vs2, vt.lmul);
      const uint8_t* vs2 = src_snap.data();
      const uint64_t amt = uint64_t(in.stride < 0 ? -in.stride : in.stride);
      if (in.family == "vslideup") {
        for (uint64_t i = amt; i < vl; ++i) {
          if (!active(i)) continue;
          std::memcpy(vd + i * esize, vs2 + (i - amt) * esize, esize);
        }
      } else if (in.family == "vslidedown") {
        for (uint64_t i = 0; i + amt < vl; ++i) {
          if (!active(i)) continue;
          std::memcpy(vd + i * esize, vs2 + (i + amt) * esize, esize);
        }
      } else if (in.family == "vslide1up") {
        if (vl > 0 && active(0)) store_elem(vd, esize, trunc(in.scalar_ops[0], eew));
        for (uint64_t i = 1; i < vl; ++i) {
          if (!active(i)) continue;
          std::memcpy(vd + i * esize, vs2 + (i - 1) * esize, esize);
        }
      } else {  // vslide1down / vfslide1down
        for (uint64_t i = 0; i + 1 < vl; ++i) {
          if (!active(i)) continue;
          std::memcpy(vd + i * esize, vs2 + (i + 1) * esize, esize);
        }
        if (vl > 0 && active(vl - 1))
          store_elem(vd + (vl - 1) * esize, esize, trunc(in.scalar_ops[0], eew));
      }
      set_tag(in.vd, eew);
      return res;
    }

    case OpKind::MaskOp: {
      const unsigned eew = in.eew_vs2;
      const unsigned esize = eew / 8;
      if (in.family == "vmseq" || in.family == "vmslt") {
        uint8_t* vd = vrf.reg(in.vd);
        const uint8_t* vs2 = vrf.reg(in.vs2);
        const uint8_t* vs1 = in.has_vs1 ? vrf.reg(in.vs1) : nullptr;
        for (uint64_t i = 0; i < vl; ++i) {
          if (!active(i)) continue;
          uint64_t b = load_elem(vs2 + i * esize, esize);
          uint64_t a = vs1 ? load_elem(vs1 + i * esize, esize) : trunc(in.scalar_ops[0], eew);
          bool bit = in.family == "vmseq" ? trunc(b, eew) == trunc(a, eew)
                                          : sext(b, eew) < sext(a, eew);
          uint8_t& byte = vd[i / 8];
          byte = uint8_t((byte & ~(1u << (i % 8))) | (unsigned(bit) << (i % 8)));
        }
        vrf.eew_tag[in.vd] = 8;
        return res;
      }
      if (in.family == "vmand" || in.family == "vmor") {
        uint8_t* vd = vrf.reg(in.vd);
        const uint8_t* vs2 = vrf.reg(in.vs2);
        const uint8_t* vs1 = vrf.reg(in.vs1);
        for (uint64_t i = 0; i < vl; ++i) {
          bool b = (vs2[i / 8] >> (i % 8)) & 1;
          bool a = (vs1[i / 8] >> (i % 8)) & 1;
          bool bit = in.family == "vmand" ? (a && b) : (a || b);
          uint8_t& byte = vd[i / 8];
          byte = uint8_t((byte & ~(1u << (i % 8))) | (unsigned(bit) << (i % 8)));
        }
        vrf.eew_tag[in.vd] = 8;
        return res;
      }
      if (in.family == "vcpop") {
        const uint8_t* vs2 = vrf.reg(in.vs2);
        uint64_t n = 0;
        for (uint64_t i = 0; i < vl; ++i)
          if (active(i) && ((vs2[i / 8] >> (i % 8)) & 1)) ++n;
        res.scalar = n;
        return res;
      }
      if (in.family == "vfirst") {
        const uint8_t* vs2 = vrf.reg(in.vs2);
        res.scalar = ~uint64_t(0);
        for (uint64_t i = 0; i < vl; ++i)
          if (active(i) && ((vs2[i / 8] >> (i % 8)) & 1)) {
            res.scalar = i;
            break;
          }
        return res;
      }
      throw UnsupportedInstruction("mask op " + in.family);
    }

    case OpKind::Move: {
      const unsigned eew = in.eew_vd;
      const unsigned esize = eew / 8;
      if (in.whole_register) {
        std::memcpy(vrf.reg(in.vd), vrf.reg(in.vs2), vrf.reg_bytes);
        vrf.eew_tag[in.vd] = vrf.eew_tag[in.vs2];
        return res;
      }
      if (in.form == OperandForm::XS || in.form == OperandForm::FS) {
        res.scalar = load_elem(vrf.reg(in.vs2), esize);
        if (in.form == OperandForm::XS) res.scalar = uint64_t(sext(*res.scalar, eew));
        return res;
      }
      if (in.form == OperandForm::SX || in.form == OperandForm::SF) {
        if (vt.vl > 0) {
          store_elem(vrf.reg(in.vd), esize, trunc(in.scalar_ops[0], eew));
          vrf.eew_tag[in.vd] = eew;
        }
        return res;
      }
      uint8_t* vd = vrf.reg(in.vd);
      if (in.family == "vmerge") {
        const uint8_t* vs2 = vrf.reg(in.vs2);
        const uint8_t* vs1 = in.has_vs1 ? vrf.reg(in.vs1) : nullptr;
        for (uint64_t i = 0; i < vl; ++i) {
          uint64_t v = mask_bit(vrf, i)
                           ? (vs1 ? load_elem(vs1 + i * esize, esize) : trunc(in.scalar_ops[0], eew))
                           : load_elem(vs2 + i * esize, esize);
          store_elem(vd + i * esize, esize, v);
        }
      } else {  // vmv.v.v / vmv.v.x / vmv.v.i / vfmv.v.f
        const uint8_t* vs1 = in.has_vs1 ? vrf.reg(in.vs1) : nullptr;
        for (uint64_t i = 0; i < vl; ++i) {
          if (!active(i)) continue;
          uint64_t v = vs1 ? load_elem(vs1 + i * esize, esize) : trunc(in.scalar_ops[0], eew);
          store_elem(vd + i * esize, esize, v);
        }
      }
      set_tag(in.vd, eew);
      return res;
    }
  }
  throw UnsupportedInstruction("unhandled instruction " + in.mnemonic);
}

const std::vector<std::string>& supported_set() {
  static const std::vector<std::string> s = {
      "vsetvli", "vsetvl",
      "vle8.v", "vle16.v", "vle32.v", "vle64.v",
      "vse8.v", "vse16.v", "vse32.v", "vse64.v",
      "vlse8.v", "vlse16.v", "vlse32.v", "vlse64.v",
      "vsse8.v", "vsse16.v", "vsse32.v", "vsse64.v",
      "vluxei8.v", "vluxei16.v", "vluxei32.v", "vluxei64.v",
      "vloxei8.v", "vloxei16.v", "vloxei32.v", "vloxei64.v",
      "vsuxei8.v", "vsuxei16.v", "vsuxei32.v", "vsuxei64.v",
      "vsoxei8.v", "vsoxei16.v", "vsoxei32.v", "vsoxei64.v",
      "vadd.vv", "vadd.vx", "vadd.vi",
      "vsub.vv", "vsub.vx",
      "vand.vv", "vand.vx", "vand.vi",
      "vor.vv", "vor.vx", "vor.vi",
      "vxor.vv", "vxor.vx", "vxor.vi",
      "vsll.vv", "vsll.vx", "vsll.vi",
      "vsrl.vv", "vsrl.vx", "vsrl.vi",
      "vmul.vv", "vmul.vx",
      "vfadd.vv", "vfadd.vf",
      "vfmul.vv", "vfmul.vf",
      "vfmacc.vv", "vfmacc.vf",
      "vfdiv.vv", "vfdiv.vf",
      "vredsum.vs", "vfredusum.vs",
      "vslideup.vx", "vslideup.vi",
      "vslidedown.vx", "vslidedown.vi",
      "vslide1up.vx", "vslide1down.vx", "vfslide1down.vf",
      "vmseq.vv", "vmseq.vx", "vmseq.vi",
      "vmslt.vv", "vmslt.vx",
      "vmand.mm", "vmor.mm",
      "vcpop.m", "vfirst.m",
      "vmerge.vvm", "vmerge.vxm",
      "vmv.v.v", "vmv.v.x", "vmv.v.i", "vmv.s.x", "vmv.x.s",
      "vfmv.v.f", "vfmv.f.s", "vfmv.s.f",
      "vmv1r.v",
  };
  return s;
}

bool is_supported(const std::string& mnemonic) {
  // accept both the exact mnemonic and its family (e.g. "vsoxei32")
  for (const auto& m : supported_set()) {
    if (m == mnemonic) return true;
    auto dot = m.find('.');
    if (dot != std::string::npos && m.compare(0, dot, mnemonic) == 0 && dot == mnemonic.size())
      return true;
  }
  return false;
}

}  // namespace laneforge
