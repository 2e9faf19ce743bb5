#include "laneforge/vrf.hpp"

#include <sstream>

namespace laneforge {

ByteLocation byte_location(unsigned reg, uint64_t elem, unsigned eew, const LayoutConfig& cfg,
                           unsigned byte_in_elem) {
  if (reg >= 32) throw ConfigError("register index out of range");
  const unsigned esize = eew / 8;
  const uint64_t elems_per_reg = uint64_t(cfg.reg_bytes()) / esize;
  if (elem >= elems_per_reg) throw ConfigError("element index out of range for eew");
  if (byte_in_elem >= esize) throw ConfigError("byte index out of range for eew");

  const unsigned lane = element_to_lane(elem, cfg.lanes);
  const uint64_t in_lane = elem / cfg.lanes;      // slot among this lane's elements
  const unsigned elems_per_word = 64 / eew;
  const uint64_t word = in_lane / elems_per_word; // 64-bit lane word within the register
  const unsigned sub = unsigned(in_lane % elems_per_word);
  const unsigned offset = sub * esize + byte_in_elem;

  const unsigned start_bank = cfg.barber_pole ? reg % cfg.banks_per_lane : 0;
  const unsigned bank = unsigned((word + start_bank) % cfg.banks_per_lane);
  const unsigned rows_per_reg = cfg.words_per_reg_per_lane() / cfg.banks_per_lane;
  const unsigned row = reg * rows_per_reg + unsigned(word / cfg.banks_per_lane);
  return ByteLocation{lane, bank, row, offset};
}

std::size_t physical_byte_index(uint64_t k, unsigned eew, const LayoutConfig& cfg) {
  const unsigned esize = eew / 8;
  const uint64_t elem = k / esize;
  const unsigned b = unsigned(k % esize);
  const unsigned lane = element_to_lane(elem, cfg.lanes);
  const uint64_t in_lane = elem / cfg.lanes;
  const unsigned elems_per_word = 64 / eew;
  const uint64_t word = in_lane / elems_per_word;
  const unsigned sub = unsigned(in_lane % elems_per_word);
  const std::size_t lane_bytes = cfg.vlen_per_lane / 8;
  return std::size_t(lane) * lane_bytes + word * 8 + sub * esize + b;
}

std::vector<uint8_t> shuffle(const std::vector<uint8_t>& mem_image, unsigned eew,
                             const LayoutConfig& cfg) {
  std::vector<uint8_t> out(mem_image.size());
  for (std::size_t k = 0; k < mem_image.size(); ++k)
    out[physical_byte_index(k, eew, cfg)] = mem_image[k];
  return out;
}

std::vector<uint8_t> deshuffle(const std::vector<uint8_t>& physical, unsigned eew,
                               const LayoutConfig& cfg) {
  std::vector<uint8_t> out(physical.size());
  for (std::size_t k = 0; k < physical.size(); ++k)
    out[k] = physical[physical_byte_index(k, eew, cfg)];
  return out;
}

std::vector<uint8_t> apply_reshuffle(const std::vector<uint8_t>& physical, unsigned old_eew,
                                     unsigned new_eew, const LayoutConfig& cfg) {
  if (old_eew == new_eew) return physical;
  return shuffle(deshuffle(physical, old_eew, cfg), new_eew, cfg);
}

namespace {

// Mask-register operands are deshuffled at bit granularity by the MASKU.
bool mask_register_sources(const VInstr& in) {
  return in.form == OperandForm::MM || in.form == OperandForm::M;
}

uint64_t elems_per_reg(unsigned eew, const MachineConfig& cfg) {
  return uint64_t(cfg.reg_bytes()) / (eew / 8);
}

}  // namespace

std::vector<RegWrite> written_registers(const VInstr& instr, const MachineConfig& cfg) {
  std::vector<RegWrite> out;
  if (!instr.writes_vd) return out;
  if (instr.kind == OpKind::Reduction) {
    out.push_back({instr.vd, false});  // only element 0
    return out;
  }
  if (instr.whole_register) {
    out.push_back({instr.vd, true});
    return out;
  }
  const unsigned eew = instr.eew_vd;
  const uint64_t per_reg = elems_per_reg(eew, cfg);
  const unsigned group = instr.dest_regs;
  uint64_t vl = instr.vtype.vl;
  for (unsigned k = 0; k < group; ++k) {
    const uint64_t lo = k * per_reg;
    if (vl <= lo) break;  // untouched registers keep their tag and content
    const bool whole = vl >= lo + per_reg;
    out.push_back({instr.vd + k, whole});
  }
  return out;
}

ReshufflePlan plan_reshuffles(const VInstr& instr, const std::array<unsigned, 32>& tags,
                              const MachineConfig& cfg) {
  ReshufflePlan plan;
  if (instr.kind == OpKind::VSetVl) return plan;
  auto add = [&](unsigned reg, unsigned target) {
    for (const auto& r : plan.injected)
      if (r.reg == reg && r.new_eew == target) return;
    if (tags[reg] != target) plan.injected.push_back({reg, tags[reg], target});
  };

  auto add_group = [&](unsigned base, unsigned eew, unsigned group) {
    for (unsigned k = 0; k < group; ++k) add(base + k, eew);
  };

  const unsigned group = instr.vtype.lmul;
  if (!mask_register_sources(instr)) {
    if (instr.has_vs2) {
      const unsigned g = instr.whole_register ? 1
                         : instr.addressing == Addressing::Indexed ? instr.idx_regs
                                                                   : group;
      add_group(instr.vs2, instr.eew_vs2, g);
    }
    if (instr.has_vs1)
      add_group(instr.vs1, instr.eew_vs1, instr.kind == OpKind::Reduction ? 1 : group);
  }
  // fmacc reads the destination as a third source
  if (instr.kind == OpKind::Fmacc) add_group(instr.vd, instr.eew_vd, instr.dest_regs);
  // stores read vd (the data register) rather than writing it
  if (instr.kind == OpKind::Store) add_group(instr.vd, instr.eew_vd, instr.dest_regs);

  if (instr.writes_vd && instr.kind != OpKind::Store && instr.kind != OpKind::MaskOp) {
    for (const auto& w : written_registers(instr, cfg))
      if (!w.whole) add(w.reg, instr.eew_vd);
  }
  return plan;
}

std::string layout_csv(unsigned reg, unsigned eew, uint64_t elems, const LayoutConfig& cfg) {
  std::ostringstream os;
  os << "reg,elem,eew,lane,bank,row,offset\n";
  for (uint64_t e = 0; e < elems; ++e) {
    auto loc = byte_location(reg, e, eew, cfg);
    os << reg << ',' << e << ',' << eew << ',' << loc.lane << ',' << loc.bank << ',' << loc.row
       << ',' << loc.offset << '\n';
  }
  return os.str();
}

}  // namespace laneforge
