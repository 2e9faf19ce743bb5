#include "laneforge/trace.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstring>
#include <sstream>

namespace laneforge {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_operands(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cur = trim(cur);
  if (!cur.empty()) out.push_back(cur);
  return out;
}

const std::map<std::string, std::string>& abi_map() {
  static const std::map<std::string, std::string> m = [] {
    std::map<std::string, std::string> r;
    const char* x[] = {"zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0",
                       "a1",   "a2", "a3", "a4", "a5", "a6", "a7", "s2", "s3", "s4", "s5",
                       "s6",   "s7", "s8", "s9", "s10", "s11", "t3", "t4", "t5", "t6"};
    for (int i = 0; i < 32; ++i) r[x[i]] = "x" + std::to_string(i);
    r["fp"] = "x8";
    const char* f[] = {"ft0", "ft1", "ft2", "ft3", "ft4", "ft5", "ft6", "ft7", "fs0", "fs1", "fa0",
                       "fa1", "fa2", "fa3", "fa4", "fa5", "fa6", "fa7", "fs2", "fs3", "fs4", "fs5",
                       "fs6", "fs7", "fs8", "fs9", "fs10", "fs11", "ft8", "ft9", "ft10", "ft11"};
    for (int i = 0; i < 32; ++i) r[f[i]] = "f" + std::to_string(i);
    return r;
  }();
  return m;
}

bool is_vreg(const std::string& s, unsigned& idx) {
  if (s.size() < 2 || s[0] != 'v') return false;
  for (size_t i = 1; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  idx = unsigned(std::stoul(s.substr(1)));
  return idx < 32;
}

bool parse_int(const std::string& s, int64_t& v) {
  std::string t = s;
  bool neg = false;
  if (!t.empty() && (t[0] == '-' || t[0] == '+')) {
    neg = t[0] == '-';
    t = t.substr(1);
  }
  uint64_t mag = 0;
  const char* first = t.c_str();
  const char* last = first + t.size();
  std::from_chars_result r{};
  if (t.size() > 2 && t[0] == '0' && (t[1] == 'x' || t[1] == 'X'))
    r = std::from_chars(first + 2, last, mag, 16);
  else
    r = std::from_chars(first, last, mag, 10);
  if (r.ec != std::errc() || r.ptr != last || t.empty()) return false;
  v = neg ? -int64_t(mag) : int64_t(mag);
  return true;
}

struct Mnemonic {
  std::string family;
  OperandForm form;
  OpKind kind;
  Addressing addressing;
  unsigned mem_eew;  // for memory ops, from the mnemonic
  bool fp;
};

// family.suffix -> decode info; memory ops are registered without suffix keys.
std::optional<Mnemonic> decode_mnemonic(const std::string& mn) {
  auto dot = mn.find('.');
  std::string fam = dot == std::string::npos ? mn : mn.substr(0, dot);
  std::string suf = dot == std::string::npos ? "" : mn.substr(dot + 1);

  static const std::map<std::string, OperandForm> forms = {
      {"vv", OperandForm::VV}, {"vx", OperandForm::VX}, {"vi", OperandForm::VI},
      {"vf", OperandForm::VF}, {"vs", OperandForm::VS}, {"mm", OperandForm::MM},
      {"m", OperandForm::M},   {"vvm", OperandForm::VVM}, {"vxm", OperandForm::VXM},
      {"s.x", OperandForm::SX}, {"x.s", OperandForm::XS}, {"f.s", OperandForm::FS},
      {"s.f", OperandForm::SF}, {"v.v", OperandForm::VV}, {"v.x", OperandForm::VX},
      {"v.i", OperandForm::VI}, {"v.f", OperandForm::VF}};

  auto mem = [&](const char* prefix, OpKind kind, Addressing a) -> std::optional<Mnemonic> {
    size_t n = std::strlen(prefix);
    if (fam.compare(0, n, prefix) != 0) return std::nullopt;
    std::string w = fam.substr(n);
    if (w != "8" && w != "16" && w != "32" && w != "64") return std::nullopt;
    if (suf != "v") return std::nullopt;
    return Mnemonic{fam, OperandForm::None, kind, a, unsigned(std::stoul(w)), false};
  };

  if (auto m = mem("vle", OpKind::Load, Addressing::Unit)) return m;
  if (auto m = mem("vse", OpKind::Store, Addressing::Unit)) return m;
  if (auto m = mem("vlse", OpKind::Load, Addressing::Strided)) return m;
  if (auto m = mem("vsse", OpKind::Store, Addressing::Strided)) return m;
  if (auto m = mem("vluxei", OpKind::Load, Addressing::Indexed)) return m;
  if (auto m = mem("vloxei", OpKind::Load, Addressing::Indexed)) return m;
  if (auto m = mem("vsuxei", OpKind::Store, Addressing::Indexed)) return m;
  if (auto m = mem("vsoxei", OpKind::Store, Addressing::Indexed)) return m;

  struct Entry {
    OpKind kind;
    bool fp;
    const char* suffixes;  // space-separated allowed suffixes
  };
  static const std::map<std::string, Entry> table = {
      {"vadd", {OpKind::ArithInt, false, "vv vx vi"}},
      {"vsub", {OpKind::ArithInt, false, "vv vx"}},
      {"vand", {OpKind::ArithInt, false, "vv vx vi"}},
      {"vor", {OpKind::ArithInt, false, "vv vx vi"}},
      {"vxor", {OpKind::ArithInt, false, "vv vx vi"}},
      {"vsll", {OpKind::ArithInt, false, "vv vx vi"}},
      {"vsrl", {OpKind::ArithInt, false, "vv vx vi"}},
      {"vmul", {OpKind::ArithInt, false, "vv vx"}},
      {"vfadd", {OpKind::ArithFp, true, "vv vf"}},
      {"vfmul", {OpKind::ArithFp, true, "vv vf"}},
      {"vfdiv", {OpKind::ArithFp, true, "vv vf"}},
      {"vfmacc", {OpKind::Fmacc, true, "vv vf"}},
      {"vredsum", {OpKind::Reduction, false, "vs"}},
      {"vfredusum", {OpKind::Reduction, true, "vs"}},
      {"vslideup", {OpKind::Slide, false, "vx vi"}},
      {"vslidedown", {OpKind::Slide, false, "vx vi"}},
      {"vslide1up", {OpKind::Slide, false, "vx"}},
      {"vslide1down", {OpKind::Slide, false, "vx"}},
      {"vfslide1down", {OpKind::Slide, true, "vf"}},
      {"vmseq", {OpKind::MaskOp, false, "vv vx vi"}},
      {"vmslt", {OpKind::MaskOp, false, "vv vx"}},
      {"vmand", {OpKind::MaskOp, false, "mm"}},
      {"vmor", {OpKind::MaskOp, false, "mm"}},
      {"vcpop", {OpKind::MaskOp, false, "m"}},
      {"vfirst", {OpKind::MaskOp, false, "m"}},
      {"vmerge", {OpKind::Move, false, "vvm vxm"}},
      {"vmv", {OpKind::Move, false, "v.v v.x v.i s.x x.s"}},
      {"vfmv", {OpKind::Move, true, "v.f f.s s.f"}},
      {"vmv1r", {OpKind::Move, false, "v"}},
  };

  auto it = table.find(fam);
  if (it == table.end()) return std::nullopt;
  std::istringstream allowed(it->second.suffixes);
  std::string tok;
  while (allowed >> tok)
    if (tok == suf) {
      OperandForm f = OperandForm::None;
      if (fam == "vmv1r") {
        f = OperandForm::None;
      } else {
        auto fit = forms.find(suf);
        if (fit == forms.end()) return std::nullopt;
        f = fit->second;
      }
      return Mnemonic{fam, f, it->second.kind, Addressing::None, 0, it->second.fp};
    }
  return std::nullopt;
}

}  // namespace

std::string canonical_scalar_reg(const std::string& name) {
  auto& m = abi_map();
  auto it = m.find(name);
  if (it != m.end()) return it->second;
  if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'f')) {
    bool digits = true;
    for (size_t i = 1; i < name.size(); ++i)
      digits = digits && std::isdigit(static_cast<unsigned char>(name[i]));
    if (digits && std::stoul(name.substr(1)) < 32) return name;
  }
  return "";
}

TraceParser::TraceParser(const MachineConfig& cfg) : cfg_(cfg) {
  vtype_ = vsetvl(0, 64, 1, cfg_);
}

uint64_t TraceParser::scalar(const std::string& name) const {
  auto it = scalars_.find(name);
  return it == scalars_.end() ? 0 : it->second;
}

std::optional<VInstr> TraceParser::parse_line(const std::string& raw) {
  ++line_no_;
  auto err = [&](const std::string& msg) -> ParseError {
    return ParseError("line " + std::to_string(line_no_) + ": " + msg);
  };

  std::string line = raw;
  if (auto h = line.find('#'); h != std::string::npos) line = line.substr(0, h);
  line = trim(line);
  if (line.empty()) return std::nullopt;

  if (line[0] == '@') {
    std::istringstream is(line);
    std::string word;
    is >> word;
    if (word != "@scalar") throw err("unknown directive '" + word + "'");
    std::string rest;
    std::getline(is, rest);
    rest = trim(rest);
    auto eq = rest.find('=');
    if (eq == std::string::npos) throw err("@scalar expects <reg>=<value>");
    std::string reg = canonical_scalar_reg(trim(rest.substr(0, eq)));
    if (reg.empty()) throw err("unknown scalar register in @scalar");
    int64_t v = 0;
    if (!parse_int(trim(rest.substr(eq + 1)), v)) throw err("bad @scalar value");
    scalars_[reg] = uint64_t(v);
    return std::nullopt;
  }

  std::istringstream is(line);
  std::string mn;
  is >> mn;
  std::string rest;
  std::getline(is, rest);
  auto ops = split_operands(trim(rest));

  VInstr in;
  in.line_no = line_no_;
  in.mnemonic = mn;
  in.vtype = vtype_;

  // trailing mask specifier
  if (!ops.empty() && ops.back() == "v0.t") {
    in.masked = true;
    ops.pop_back();
  }

  auto as_vreg = [&](const std::string& s) -> unsigned {
    unsigned r;
    if (!is_vreg(s, r)) throw err("expected vector register, got '" + s + "'");
    return r;
  };
  auto as_scalar = [&](const std::string& s) -> uint64_t {
    std::string reg = canonical_scalar_reg(s);
    if (reg.empty()) throw err("expected scalar register, got '" + s + "'");
    if (reg == "x0") return 0;
    return scalar(reg);
  };
  auto as_imm = [&](const std::string& s) -> int64_t {
    int64_t v;
    if (!parse_int(s, v)) throw err("expected immediate, got '" + s + "'");
    return v;
  };
  auto as_addr = [&](const std::string& s) -> uint64_t {
    if (s.size() < 3 || s.front() != '(' || s.back() != ')')
      throw err("expected (reg) address operand, got '" + s + "'");
    return as_scalar(trim(s.substr(1, s.size() - 2)));
  };

  if (mn == "vsetvli" || mn == "vsetvl") {
    // vsetvli rd, rs1, e<sew>, m<lmul>[, ta|tu][, ma|mu]
    if (ops.size() < 4) throw err("vsetvli expects rd, rs1, e<sew>, m<lmul>");
    in.kind = OpKind::VSetVl;
    in.writes_vd = false;
    std::string rd = canonical_scalar_reg(ops[0]);
    std::string rs1 = canonical_scalar_reg(ops[1]);
    if (rd.empty() || rs1.empty()) throw err("vsetvli expects scalar rd/rs1");
    if (ops[2].size() < 2 || ops[2][0] != 'e') throw err("bad sew token");
    if (ops[3].size() < 2 || ops[3][0] != 'm') throw err("bad lmul token");
    in.set_sew = unsigned(std::stoul(ops[2].substr(1)));
    in.set_lmul = unsigned(std::stoul(ops[3].substr(1)));
    if (rs1 == "x0")
      in.set_avl = ~uint64_t(0);  // request the maximum
    else
      in.set_avl = scalar(rs1);
    VType vt = vsetvl(in.set_avl, in.set_sew, in.set_lmul, cfg_);
    vtype_ = vt;
    in.vtype = vt;
    if (rd != "x0") scalars_[rd] = vt.vl;
    return in;
  }

  auto dec = decode_mnemonic(mn);
  if (!dec) {
    if (mn.rfind("v", 0) == 0)
      throw UnsupportedInstruction("line " + std::to_string(line_no_) +
                                   ": unsupported instruction '" + mn + "'");
    throw err("unknown mnemonic '" + mn + "'");
  }
  in.family = dec->family;
  in.form = dec->form;
  in.kind = dec->kind;
  in.addressing = dec->addressing;
  in.fp = dec->fp;
  in.eew_vd = in.eew_vs1 = in.eew_vs2 = vtype_.sew;

  auto need = [&](size_t n) {
    if (ops.size() != n) throw err(mn + " expects " + std::to_string(n) + " operands");
  };

  switch (in.kind) {
    case OpKind::Load:
    case OpKind::Store: {
      in.writes_vd = in.kind == OpKind::Load;
      in.eew_vd = dec->mem_eew;
      if (in.addressing == Addressing::Indexed) {
        in.eew_vd = vtype_.sew;       // data uses SEW, the mnemonic gives the index width
        in.eew_vs2 = dec->mem_eew;
      }
      // data register group: EMUL = eew*lmul/sew
      in.dest_regs = std::max(1u, in.eew_vd * vtype_.lmul / vtype_.sew);
      if (in.dest_regs > 8)
        throw IllegalInstruction("line " + std::to_string(line_no_) + ": EMUL > 8");
      if (in.addressing == Addressing::Unit) {
        need(2);
        in.vd = as_vreg(ops[0]);
        in.scalar_ops[0] = as_addr(ops[1]);
        in.n_scalar = 1;
      } else if (in.addressing == Addressing::Strided) {
        need(3);
        in.vd = as_vreg(ops[0]);
        in.scalar_ops[0] = as_addr(ops[1]);
        in.stride = int64_t(as_scalar(ops[2]));
        in.scalar_ops[1] = uint64_t(in.stride);
        in.n_scalar = 2;
      } else {
        need(3);
        in.vd = as_vreg(ops[0]);
        in.scalar_ops[0] = as_addr(ops[1]);
        in.vs2 = as_vreg(ops[2]);
        in.has_vs2 = true;
        in.n_scalar = 1;
        // the index operand spans EMUL = iew*lmul/sew registers
        const unsigned emul =
            std::max(1u, dec->mem_eew * vtype_.lmul / vtype_.sew);
        if (emul > 8 || in.vs2 % emul != 0 || in.vs2 + emul > 32)
          throw IllegalInstruction("line " + std::to_string(line_no_) +
                                   ": illegal index register group");
        in.idx_regs = emul;
      }
      break;
    }
    case OpKind::VSetVl:
      break;  // handled above
    case OpKind::Reduction: {
      need(3);
      in.vd = as_vreg(ops[0]);
      in.vs2 = as_vreg(ops[1]);
      in.vs1 = as_vreg(ops[2]);
      in.has_vs1 = in.has_vs2 = true;
      break;
    }
    case OpKind::Slide: {
      need(3);
      in.vd = as_vreg(ops[0]);
      in.vs2 = as_vreg(ops[1]);
      in.has_vs2 = true;
      if (in.family == "vslide1up" || in.family == "vslide1down" ||
          in.family == "vfslide1down") {
        in.scalar_ops[0] = as_scalar(ops[2]);
        in.n_scalar = 1;
        in.stride = 1;
      } else if (in.form == OperandForm::VI) {
        in.stride = as_imm(ops[2]);
        if (in.stride < 0) throw err("slide immediate must be non-negative");
      } else {
        in.stride = int64_t(as_scalar(ops[2]));
        in.n_scalar = 1;
      }
      break;
    }
    case OpKind::MaskOp: {
      if (in.form == OperandForm::M) {
        need(2);
        in.writes_vd = false;  // scalar result
        std::string rd = canonical_scalar_reg(ops[0]);
        if (rd.empty()) throw err(mn + " expects a scalar destination");
        in.vs2 = as_vreg(ops[1]);
        in.has_vs2 = true;
        break;
      }
      need(3);
      in.vd = as_vreg(ops[0]);
      in.vs2 = as_vreg(ops[1]);
      in.has_vs2 = true;
      if (in.form == OperandForm::VX) {
        in.scalar_ops[0] = as_scalar(ops[2]);
        in.n_scalar = 1;
      } else if (in.form == OperandForm::VI) {
        in.scalar_ops[0] = uint64_t(as_imm(ops[2]));
        in.n_scalar = 1;
      } else {  // vv / mm
        in.vs1 = as_vreg(ops[2]);
        in.has_vs1 = true;
      }
      break;
    }
    case OpKind::Move: {
      if (in.family == "vmv1r") {
        need(2);
        in.vd = as_vreg(ops[0]);
        in.vs2 = as_vreg(ops[1]);
        in.has_vs2 = true;
        in.whole_register = true;
        break;
      }
      if (in.family == "vmerge") {
        need(4);
        in.vd = as_vreg(ops[0]);
        in.vs2 = as_vreg(ops[1]);
        in.has_vs2 = true;
        if (in.form == OperandForm::VVM) {
          in.vs1 = as_vreg(ops[2]);
          in.has_vs1 = true;
        } else {
          in.scalar_ops[0] = as_scalar(ops[2]);
          in.n_scalar = 1;
        }
        if (ops[3] != "v0") throw err("vmerge expects v0 as the mask operand");
        in.masked = true;
        break;
      }
      // vmv / vfmv forms
      need(2);
      switch (in.form) {
        case OperandForm::VV:
          in.vd = as_vreg(ops[0]);
          in.vs1 = as_vreg(ops[1]);
          in.has_vs1 = true;
          break;
        case OperandForm::VX:
        case OperandForm::VF:
        case OperandForm::SX:
        case OperandForm::SF:
          in.vd = as_vreg(ops[0]);
          in.scalar_ops[0] = as_scalar(ops[1]);
          in.n_scalar = 1;
          break;
        case OperandForm::VI:
          in.vd = as_vreg(ops[0]);
          in.scalar_ops[0] = uint64_t(as_imm(ops[1]));
          in.n_scalar = 1;
          break;
        case OperandForm::XS:
        case OperandForm::FS: {
          std::string rd = canonical_scalar_reg(ops[0]);
          if (rd.empty()) throw err(mn + " expects a scalar destination");
          in.writes_vd = false;
          in.vs2 = as_vreg(ops[1]);
          in.has_vs2 = true;
          break;
        }
        default:
          throw err("bad move form");
      }
      break;
    }
    default: {  // ArithInt / ArithFp / Fmacc
      need(3);
      in.vd = as_vreg(ops[0]);
      if (in.kind == OpKind::Fmacc) {
        // vfmacc.vv vd, vs1, vs2 / vfmacc.vf vd, rs1, vs2
        if (in.form == OperandForm::VV) {
          in.vs1 = as_vreg(ops[1]);
          in.has_vs1 = true;
        } else {
          in.scalar_ops[0] = as_scalar(ops[1]);
          in.n_scalar = 1;
        }
        in.vs2 = as_vreg(ops[2]);
        in.has_vs2 = true;
      } else {
        in.vs2 = as_vreg(ops[1]);
        in.has_vs2 = true;
        if (in.form == OperandForm::VV) {
          in.vs1 = as_vreg(ops[2]);
          in.has_vs1 = true;
        } else if (in.form == OperandForm::VI) {
          in.scalar_ops[0] = uint64_t(as_imm(ops[2]));
          in.n_scalar = 1;
        } else {
          in.scalar_ops[0] = as_scalar(ops[2]);
          in.n_scalar = 1;
        }
      }
      break;
    }
  }

  if (in.fp && vtype_.sew != 32 && vtype_.sew != 64 && in.kind != OpKind::Move)
    throw IllegalInstruction("line " + std::to_string(line_no_) +
                             ": fp op at sew=" + std::to_string(vtype_.sew));

  // register-group sizes and alignment; reductions and mask ops use single
  // registers for their scalar-element / mask-bit operands
  const unsigned lmul = vtype_.lmul;
  const bool vd_is_group = in.kind == OpKind::ArithInt || in.kind == OpKind::ArithFp ||
                           in.kind == OpKind::Fmacc || in.kind == OpKind::Load ||
                           in.kind == OpKind::Store || in.kind == OpKind::Slide ||
                           (in.kind == OpKind::Move && in.form != OperandForm::SX &&
                            in.form != OperandForm::SF && in.form != OperandForm::XS &&
                            in.form != OperandForm::FS && !in.whole_register);
  if (vd_is_group && in.kind != OpKind::Load && in.kind != OpKind::Store)
    in.dest_regs = lmul;
  auto check_group = [&](unsigned r, unsigned group, const char* what) {
    if (r % group != 0 || r + group > 32)
      throw IllegalInstruction("line " + std::to_string(line_no_) + ": " + what +
                               " register group illegal");
  };
  if (!in.whole_register) {
    const bool vs1_is_group = in.has_vs1 && in.kind != OpKind::Reduction &&
                              in.form != OperandForm::MM;
    const bool vs2_is_group = in.has_vs2 && in.addressing != Addressing::Indexed &&
                              in.form != OperandForm::MM && in.form != OperandForm::M &&
                              !(in.kind == OpKind::Move &&
                                (in.form == OperandForm::XS || in.form == OperandForm::FS));
    if (vd_is_group) check_group(in.vd, in.dest_regs, "vd");
    if (vs1_is_group && lmul > 1) check_group(in.vs1, lmul, "vs1");
    if (vs2_is_group && lmul > 1) check_group(in.vs2, lmul, "vs2");
  }
  return in;
}

std::vector<VInstr> parse_trace(const std::string& text, const MachineConfig& cfg) {
  TraceParser p(cfg);
  std::vector<VInstr> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line))
    if (auto in = p.parse_line(line)) out.push_back(*in);
  return out;
}

VInstr parse_trace_line(const std::string& line, const MachineConfig& cfg) {
  TraceParser p(cfg);
  auto in = p.parse_line(line);
  if (!in) throw ParseError("line holds no instruction");
  return *in;
}

}  // namespace laneforge
