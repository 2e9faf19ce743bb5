#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "laneforge/config.hpp"

namespace laneforge {

/// Vector CSR state as set by vsetvl.
struct VType {
  unsigned sew = 64;   // bits
  unsigned lmul = 1;
  uint64_t vl = 0;     // active elements
  uint64_t vlmax = 0;

  bool operator==(const VType&) const = default;
};

/// vl = min(avl, vlmax), vlmax = VLEN_total * lmul / sew.
VType vsetvl(uint64_t avl, unsigned sew, unsigned lmul, const MachineConfig& cfg);

enum class OpKind {
  ArithInt,
  ArithFp,
  Fmacc,
  Load,
  Store,
  Slide,
  MaskOp,
  Reduction,
  Move,
  VSetVl,
};

enum class Addressing { None, Unit, Strided, Indexed };

/// Operand form taken from the mnemonic suffix (.vv, .vx, ...).
enum class OperandForm { None, VV, VX, VI, VF, VS, MM, M, VVM, VXM, SX, XS, FS, SF };

/// One decoded vector instruction with its vtype snapshot.
struct VInstr {
  std::string mnemonic;  // canonical text, e.g. "vfmacc.vf"
  std::string family;    // e.g. "vfmacc"
  OperandForm form = OperandForm::None;
  OpKind kind = OpKind::ArithInt;
  unsigned vd = 0, vs1 = 0, vs2 = 0;
  bool has_vs1 = false, has_vs2 = false, writes_vd = true;
  unsigned eew_vd = 64, eew_vs1 = 64, eew_vs2 = 64;
  bool masked = false;
  std::array<uint64_t, 2> scalar_ops{0, 0};
  int n_scalar = 0;
  Addressing addressing = Addressing::None;
  int64_t stride = 0;       // byte stride for strided mem ops, element amount for slides
  unsigned idx_regs = 1;    // registers spanned by an indexed op's index operand
  unsigned dest_regs = 1;   // registers spanned by vd (EMUL for mem ops, LMUL for groups)
  bool whole_register = false;  // vmv<n>r alias: vl covers the whole register
  bool fp = false;
  VType vtype;              // snapshot at decode
  // vsetvl payload
  unsigned set_sew = 64, set_lmul = 1;
  uint64_t set_avl = 0;
  int line_no = 0;
};

/// 32 architectural registers kept as memory images plus per-register EEW tags.
struct VrfState {
  std::vector<uint8_t> bytes;       // 32 * reg_bytes
  std::array<unsigned, 32> eew_tag; // last-written element width, reset to 64
  unsigned reg_bytes = 0;

  explicit VrfState(const MachineConfig& cfg) : reg_bytes(cfg.reg_bytes()) {
    bytes.assign(std::size_t(32) * reg_bytes, 0);
    eew_tag.fill(64);
  }
  uint8_t* reg(unsigned r) { return bytes.data() + std::size_t(r) * reg_bytes; }
  const uint8_t* reg(unsigned r) const { return bytes.data() + std::size_t(r) * reg_bytes; }
};

/// Flat byte-addressable memory with bounds checking.
struct SimMemory {
  std::vector<uint8_t> bytes;
  explicit SimMemory(std::size_t size) : bytes(size, 0) {}
  void check(uint64_t addr, uint64_t len) const {
    if (addr + len > bytes.size() || addr + len < addr)
      throw MemoryFault("memory access out of bounds: addr=" + std::to_string(addr) +
                        " len=" + std::to_string(len));
  }
};

struct ExecResult {
  std::optional<uint64_t> scalar;  // vcpop/vfirst/vmv.x.s/vfmv.f.s results
};

/// Architecturally exact, timing-free execution of one instruction.
/// Tail elements and masked-off elements are left undisturbed.
ExecResult exec_functional(const VInstr& instr, VrfState& vrf, SimMemory& mem);

/// Frozen list of supported mnemonics (families with their forms).
const std::vector<std::string>& supported_set();
bool is_supported(const std::string& mnemonic);

/// Mask bit i of register v0's memory image.
inline bool mask_bit(const VrfState& vrf, uint64_t i) {
  return (vrf.reg(0)[i / 8] >> (i % 8)) & 1;
}

}  // namespace laneforge
