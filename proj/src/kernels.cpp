#include "laneforge/kernels.hpp"

#include <cstring>
#include <random>
#include <sstream>

#include "laneforge/trace.hpp"

namespace laneforge {

double KernelSpec::max_perf(unsigned lanes) const {
  if (name == "matmul" || name == "conv2d") return 2.0 * lanes;
  if (name == "dotproduct" || name == "axpy") return 0.5 * lanes;
  throw ConfigError("unknown kernel '" + name + "'");
}

KernelSpec KernelSpec::lookup(const std::string& name) {
  if (name != "matmul" && name != "conv2d" && name != "dotproduct" && name != "axpy")
    throw ConfigError("unknown kernel '" + name + "'");
  return KernelSpec{name};
}

namespace {

struct Dtype {
  unsigned esize;
  bool fp;
};

Dtype dtype_of(const std::string& s) {
  if (s == "fp64") return {8, true};
  if (s == "fp32") return {4, true};
  if (s == "int64") return {8, false};
  if (s == "int32") return {4, false};
  throw ConfigError("unknown dtype '" + s + "'");
}

uint64_t f64bits(double d) {
  uint64_t b;
  std::memcpy(&b, &d, 8);
  return b;
}
uint64_t f32bits(float f) {
  uint32_t w;
  std::memcpy(&w, &f, 4);
  return w;
}

// Builds the interleaved scalar+vector stream. Vector lines go through the
// trace parser so the emitted text and the program stay in lockstep. Static
// PCs are assigned per slot so loop bodies hit the same icache lines.
struct KernelBuilder {
  MachineConfig cfg;
  TraceParser parser;
  Program prog;
  std::ostringstream text;
  std::map<std::string, uint64_t> slot_pc;
  uint64_t next_pc = 0x80000000;

  explicit KernelBuilder(const MachineConfig& c) : cfg(c), parser(c) {}

  uint64_t pc_of(const std::string& slot) {
    auto [it, fresh] = slot_pc.try_emplace(slot, next_pc);
    if (fresh) next_pc += 4;
    return it->second;
  }

  void at_scalar(const std::string& reg, uint64_t value) {
    std::ostringstream os;
    os << "@scalar " << reg << "=0x" << std::hex << value;
    text << os.str() << "\n";
    parser.parse_line(os.str());
  }

  void vec(const std::string& slot, const std::string& line) {
    text << line << "\n";
    auto in = parser.parse_line(line);
    if (!in) throw ParseError("kernel line is not an instruction: " + line);
    prog.vinstrs.push_back(*in);
    prog.items.push_back({ProgramItem::Vector, pc_of(slot), 0, prog.vinstrs.size() - 1});
  }

  void scalar(const std::string& slot, ProgramItem::Kind kind = ProgramItem::Scalar,
              uint64_t addr = 0) {
    prog.items.push_back({kind, pc_of(slot), addr, 0});
  }

  uint64_t vlmax(unsigned sew) const { return uint64_t(cfg.vlen_total()) / sew; }
};

void fill_uniform(SimMemory& mem, uint64_t base, uint64_t count, const Dtype& dt,
                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (uint64_t i = 0; i < count; ++i) {
    uint64_t bits;
    if (dt.fp)
      bits = dt.esize == 8 ? f64bits(uni(rng)) : f32bits(float(uni(rng)));
    else
      bits = rng() & 0xff;
    mem.check(base + i * dt.esize, dt.esize);
    std::memcpy(mem.bytes.data() + base + i * dt.esize, &bits, dt.esize);
  }
}

uint64_t read_bits(const SimMemory& mem, uint64_t addr, unsigned esize) {
  uint64_t v = 0;
  std::memcpy(&v, mem.bytes.data() + addr, esize);
  return v;
}

std::string sew_token(unsigned esize) { return "e" + std::to_string(esize * 8); }
std::string mem_suffix(unsigned esize) { return std::to_string(esize * 8) + ".v"; }

}  // namespace

GeneratedKernel gen_matmul(unsigned n, const std::string& dtype, const MachineConfig& cfg,
                           SimMemory& mem, uint64_t seed, unsigned block_rows) {
  return gen_matmul_block(n, 0, n, dtype, cfg, mem, seed, block_rows);
}

GeneratedKernel gen_matmul_block(unsigned n, unsigned row0, unsigned rows,
                                 const std::string& dtype, const MachineConfig& cfg,
                                 SimMemory& mem, uint64_t seed, unsigned block_rows) {
  if (n % 4 != 0) throw ConfigError("matmul requires n to be a multiple of 4");
  if (row0 + rows > n) throw ConfigError("matmul row block out of range");
  const Dtype dt = dtype_of(dtype);
  KernelBuilder b(cfg);
  std::mt19937_64 rng(seed);

  const uint64_t base_a = 0x1000;
  const uint64_t base_b = base_a + uint64_t(n) * n * dt.esize;
  const uint64_t base_c = base_b + uint64_t(n) * n * dt.esize;
  fill_uniform(mem, base_a, uint64_t(n) * n, dt, rng);
  fill_uniform(mem, base_b, uint64_t(n) * n, dt, rng);

  const uint64_t vlmax = b.vlmax(dt.esize * 8);
  for (unsigned i0 = row0; i0 < row0 + rows; i0 += block_rows) {
    const unsigned h = std::min(block_rows, row0 + rows - i0);
    for (uint64_t c0 = 0; c0 < n; c0 += vlmax) {
      const uint64_t vl = std::min<uint64_t>(vlmax, n - c0);
      b.at_scalar("a0", vl);
      b.vec("setvl", "vsetvli t0, a0, " + sew_token(dt.esize) + ", m1");
      for (unsigned k = 0; k < n; ++k) {
        const std::string brow = k % 2 ? "v9" : "v8";
        b.at_scalar("a1", base_b + (uint64_t(k) * n + c0) * dt.esize);
        b.scalar("bump_b");
        b.vec("vle_b", "vle" + mem_suffix(dt.esize) + " " + brow + ", (a1)");
        for (unsigned i = 0; i < h; ++i) {
          const uint64_t a_addr = base_a + (uint64_t(i0 + i) * n + k) * dt.esize;
          const std::string acc = "v" + std::to_string(16 + i);
          const std::string t = "t" + std::to_string(i % 2);  // scratch for int path
          b.scalar("ld_a" + std::to_string(i), ProgramItem::ScalarLoad, a_addr);
          b.scalar("bump_a" + std::to_string(i));
          if (dt.fp) {
            b.at_scalar("f0", read_bits(mem, a_addr, dt.esize));
            const char* op = k == 0 ? "vfmul.vf " : "vfmacc.vf ";
            if (k == 0)
              b.vec("init" + std::to_string(i), std::string(op) + acc + ", " + brow + ", f0");
            else
              b.vec("macc" + std::to_string(i), std::string(op) + acc + ", f0, " + brow);
          } else {
            b.at_scalar(t, read_bits(mem, a_addr, dt.esize));
            if (k == 0) {
              b.vec("init" + std::to_string(i), "vmul.vx " + acc + ", " + brow + ", " + t);
            } else {
              b.vec("mul" + std::to_string(i), "vmul.vx v12, " + brow + ", " + t);
              b.vec("acc" + std::to_string(i), "vadd.vv " + acc + ", " + acc + ", v12");
            }
          }
        }
      }
      for (unsigned i = 0; i < h; ++i) {
        b.at_scalar("a2", base_c + (uint64_t(i0 + i) * n + c0) * dt.esize);
        b.scalar("bump_c");
        b.vec("store" + std::to_string(i),
              "vse" + mem_suffix(dt.esize) + " v" + std::to_string(16 + i) + ", (a2)");
      }
    }
  }

  GeneratedKernel g;
  g.prog = std::move(b.prog);
  g.trace_text = b.text.str();
  g.out_base = base_c + uint64_t(row0) * n * dt.esize;
  g.out_bytes = uint64_t(rows) * n * dt.esize;
  g.flops = 2.0 * double(rows) * n * n;
  g.prog.flops = g.flops;
  return g;
}

uint64_t dotproduct_iterations(uint64_t n, const MachineConfig& cfg) {
  const uint64_t vlmax = uint64_t(cfg.vlen_total()) / 64;
  return (n + vlmax - 1) / vlmax;
}

GeneratedKernel gen_dotproduct(uint64_t n, const std::string& dtype, const MachineConfig& cfg,
                               SimMemory& mem, uint64_t seed) {
  if (n < 1) throw ConfigError("dotproduct requires n >= 1");
  const Dtype dt = dtype_of(dtype);
  if (dt.esize != 8) throw ConfigError("dotproduct uses 64-bit dtypes");
  KernelBuilder b(cfg);
  std::mt19937_64 rng(seed);

  const uint64_t base_x = 0x1000;
  const uint64_t base_y = base_x + n * 8;
  fill_uniform(mem, base_x, n, dt, rng);
  fill_uniform(mem, base_y, n, dt, rng);

  // setup: li a0, la a1, la a2, vsetvli (vlmax), clear the accumulator, slli
  b.scalar("li_a0");
  b.scalar("la_a1");
  b.scalar("la_a2");
  b.at_scalar("a0", n);
  b.vec("setvl0", "vsetvli t0, x0, e64, m1");
  b.vec("clear", dt.fp ? "vmv.s.x v24, x0" : "vmv.s.x v24, x0");
  b.scalar("slli_t1");

  uint64_t left = n;
  uint64_t x = base_x, y = base_y;
  const uint64_t vlmax = b.vlmax(64);
  while (left > 0) {
    const uint64_t vl = std::min(left, vlmax);
    b.at_scalar("a0", left);
    b.vec("setvl", "vsetvli a3, a0, e64, m1");
    b.at_scalar("a1", x);
    b.vec("ld_x", "vle64.v v8, (a1)");
    b.at_scalar("a2", y);
    b.vec("ld_y", "vle64.v v16, (a2)");
    if (dt.fp) {
      b.vec("mul", "vfmul.vv v4, v8, v16");
      b.vec("red", "vfredusum.vs v24, v4, v24");
    } else {
      b.vec("mul", "vmul.vv v4, v8, v16");
      b.vec("red", "vredsum.vs v24, v4, v24");
    }
    b.scalar("sub_a0");
    b.scalar("add_a1");
    b.scalar("add_a2");
    b.scalar("bnez");
    left -= vl;
    x += vl * 8;
    y += vl * 8;
  }
  // result stays in v24[0]; total stream is exactly 7 + 9N items
  b.vec("readout", dt.fp ? "vfmv.f.s fa0, v24" : "vmv.x.s a4, v24");

  GeneratedKernel g;
  g.prog = std::move(b.prog);
  g.trace_text = b.text.str();
  g.out_base = 0;
  g.out_bytes = 0;
  g.flops = 2.0 * double(n);
  g.prog.flops = g.flops;
  return g;
}

GeneratedKernel gen_conv2d(unsigned h, unsigned w, const std::string& dtype,
                           const MachineConfig& cfg, SimMemory& mem, uint64_t seed) {
  if (w < 7 || h < 7) throw ConfigError("conv2d requires h,w >= 7");
  const Dtype dt = dtype_of(dtype);
  if (!dt.fp) throw ConfigError("conv2d uses fp dtypes");
  KernelBuilder b(cfg);
  std::mt19937_64 rng(seed);

  const unsigned hout = h - 6, wout = w - 6;
  if (wout > b.vlmax(dt.esize * 8)) throw ConfigError("conv2d width exceeds vlmax");
  const uint64_t chan = uint64_t(h) * w * dt.esize;
  const uint64_t base_in = 0x1000;
  const uint64_t base_wt = base_in + 3 * chan;
  const uint64_t base_out = base_wt + 3 * 49 * dt.esize;
  fill_uniform(mem, base_in, 3 * uint64_t(h) * w, dt, rng);
  fill_uniform(mem, base_wt, 3 * 49, dt, rng);

  auto wt_addr = [&](unsigned ch, unsigned kr, unsigned kc) {
    return base_wt + ((uint64_t(ch) * 7 + kr) * 7 + kc) * dt.esize;
  };

  const std::string sw = sew_token(dt.esize);
  for (unsigned o0 = 0; o0 < hout; o0 += 7) {
    const unsigned bh = std::min(7u, hout - o0);
    std::vector<bool> acc_init(bh, false);
    for (unsigned ch = 0; ch < 3; ++ch) {
      for (unsigned r = o0; r < o0 + bh + 6; ++r) {
        b.at_scalar("a0", w);
        b.vec("setvl_w", "vsetvli t0, a0, " + sw + ", m1");
        b.at_scalar("a1", base_in + ch * chan + uint64_t(r) * w * dt.esize);
        b.scalar("bump_in");
        b.vec("ld_row", "vle" + mem_suffix(dt.esize) + " v8, (a1)");
        for (unsigned kc = 1; kc <= 6; ++kc)
          b.vec("slide" + std::to_string(kc),
                "vslidedown.vi v" + std::to_string(8 + kc) + ", v8, " + std::to_string(kc));
        b.at_scalar("a0", wout);
        b.vec("setvl_o", "vsetvli t0, a0, " + sw + ", m1");
        for (unsigned kc = 0; kc < 7; ++kc) {
          const std::string src = "v" + std::to_string(8 + kc);
          for (unsigned kr = 0; kr < 7; ++kr) {
            if (r < kr) continue;
            const unsigned o = r - kr;
            if (o < o0 || o >= o0 + bh) continue;
            const std::string acc = "v" + std::to_string(16 + (o - o0));
            b.scalar("ld_w", ProgramItem::ScalarLoad, wt_addr(ch, kr, kc));
            b.scalar("bump_w");
            b.at_scalar("f0", read_bits(mem, wt_addr(ch, kr, kc), dt.esize));
            if (!acc_init[o - o0]) {
              b.vec("cinit", "vfmul.vf " + acc + ", " + src + ", f0");
              acc_init[o - o0] = true;
            } else {
              b.vec("cmacc", "vfmacc.vf " + acc + ", f0, " + src);
            }
          }
        }
      }
    }
    for (unsigned i = 0; i < bh; ++i) {
      b.at_scalar("a2", base_out + uint64_t(o0 + i) * wout * dt.esize);
      b.scalar("bump_out");
      b.vec("st_row",
            "vse" + mem_suffix(dt.esize) + " v" + std::to_string(16 + i) + ", (a2)");
    }
  }

  GeneratedKernel g;
  g.prog = std::move(b.prog);
  g.trace_text = b.text.str();
  g.out_base = base_out;
  g.out_bytes = uint64_t(hout) * wout * dt.esize;
  g.flops = 2.0 * 3 * 49 * double(hout) * wout;
  g.prog.flops = g.flops;
  return g;
}

GeneratedKernel gen_axpy(uint64_t n, const std::string& dtype, const MachineConfig& cfg,
                         SimMemory& mem, uint64_t seed) {
  const Dtype dt = dtype_of(dtype);
  if (!dt.fp) throw ConfigError("axpy uses fp dtypes");
  KernelBuilder b(cfg);
  std::mt19937_64 rng(seed);

  const uint64_t base_a = 0x800;
  const uint64_t base_x = 0x1000;
  const uint64_t base_y = base_x + n * dt.esize;
  fill_uniform(mem, base_a, 1, dt, rng);
  fill_uniform(mem, base_x, n, dt, rng);
  fill_uniform(mem, base_y, n, dt, rng);

  b.scalar("li_a0");
  b.scalar("la_a1");
  b.scalar("la_a2");
  b.scalar("ld_alpha", ProgramItem::ScalarLoad, base_a);
  b.at_scalar("fa0", read_bits(mem, base_a, dt.esize));

  uint64_t left = n, x = base_x, y = base_y;
  const uint64_t vlmax = b.vlmax(dt.esize * 8);
  while (left > 0) {
    const uint64_t vl = std::min(left, vlmax);
    b.at_scalar("a0", left);
    b.vec("setvl", "vsetvli t0, a0, " + sew_token(dt.esize) + ", m1");
    b.at_scalar("a1", x);
    b.vec("ld_x", "vle" + mem_suffix(dt.esize) + " v8, (a1)");
    b.at_scalar("a2", y);
    b.vec("ld_y", "vle" + mem_suffix(dt.esize) + " v16, (a2)");
    b.vec("macc", "vfmacc.vf v16, fa0, v8");
    b.vec("st_y", "vse" + mem_suffix(dt.esize) + " v16, (a2)");
    b.scalar("sub_a0");
    b.scalar("slli_t1");
    b.scalar("add_a1");
    b.scalar("add_a2");
    b.scalar("bnez");
    left -= vl;
    x += vl * dt.esize;
    y += vl * dt.esize;
  }

  GeneratedKernel g;
  g.prog = std::move(b.prog);
  g.trace_text = b.text.str();
  g.out_base = base_y;
  g.out_bytes = n * dt.esize;
  g.flops = 2.0 * double(n);
  g.prog.flops = g.flops;
  return g;
}

GeneratedKernel gen_kernel(const std::string& kernel, unsigned n, const std::string& dtype,
                           const MachineConfig& cfg, SimMemory& mem, uint64_t seed) {
  if (kernel == "matmul") return gen_matmul(n, dtype, cfg, mem, seed);
  if (kernel == "dotproduct") return gen_dotproduct(n, dtype, cfg, mem, seed);
  if (kernel == "conv2d") return gen_conv2d(n, n, dtype, cfg, mem, seed);
  if (kernel == "axpy") return gen_axpy(n, dtype, cfg, mem, seed);
  throw ConfigError("unknown kernel '" + kernel + "'");
}

std::vector<std::string> sve_dotproduct_listing(unsigned iterations) {
  std::vector<std::string> out = {
      "mov x3, #0",            // element index
      "whilelt p0.d, x3, x0",  // first predicate
      "mov z24.d, #0",         // accumulator
      "mov x1, x1",            // base of x (materialized address)
      "mov x2, x2",            // base of y
      "fmov d0, #0",           // scalar result
  };
  for (unsigned i = 0; i < iterations; ++i) {
    out.push_back("ld1d z8.d, p0/z, [x1, x3, lsl #3]");
    out.push_back("ld1d z16.d, p0/z, [x2, x3, lsl #3]");
    out.push_back("fmla z24.d, p0/m, z8.d, z16.d");
    out.push_back("incd x3");
    out.push_back("whilelt p0.d, x3, x0");
    out.push_back("faddv d0, p0, z24.d");
    out.push_back("b.first .loop");
  }
  return out;
}

}  // namespace laneforge
