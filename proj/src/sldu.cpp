#include "laneforge/sldu.hpp"

namespace laneforge {

std::vector<uint64_t> decompose_slide(uint64_t amount) {
  if (amount == 0) return {0};
  std::vector<uint64_t> out;
  for (int b = 63; b >= 0; --b)
    if (amount & (uint64_t(1) << b)) out.push_back(uint64_t(1) << b);
  return out;
}

uint64_t slide_passes(uint64_t amount, const MachineConfig& cfg, bool with_reshuffle) {
  uint64_t passes = 0;
  switch (cfg.sldu_kind) {
    case SlduKind::AllToAll:
      passes = 1;
      break;
    case SlduKind::SlideP2Combined:
    case SlduKind::SlideP2Timemux:
      passes = decompose_slide(amount).size();
      break;
    case SlduKind::Slide1Combined:
    case SlduKind::Slide1Timemux:
      passes = amount == 0 ? 1 : amount;
      break;
  }
  const bool timemux =
      cfg.sldu_kind == SlduKind::SlideP2Timemux || cfg.sldu_kind == SlduKind::Slide1Timemux;
  if (with_reshuffle && timemux) ++passes;  // slides and re-encoding cannot share a pass
  return passes;
}

uint64_t slide_cycles(uint64_t amount, uint64_t vl, unsigned eew, const MachineConfig& cfg,
                      bool with_reshuffle) {
  const uint64_t bytes = vl * (eew / 8);
  const uint64_t per_pass = (bytes + cfg.compute_bandwidth() - 1) / cfg.compute_bandwidth();
  return slide_passes(amount, cfg, with_reshuffle) * (per_pass + cfg.sldu_startup);
}

namespace {

// Physical position of memory-image byte k (k < 8L) within one datapath
// slice: one 64-bit word per lane, elements interleaved across lanes.
unsigned slice_pos(unsigned k, unsigned eew, unsigned lanes) {
  const unsigned esize = eew / 8;
  const unsigned elem = k / esize;
  const unsigned b = k % esize;
  const unsigned lane = elem % lanes;
  const unsigned sub = elem / lanes;  // < 64/eew for k < 8*lanes
  return lane * 8 + sub * esize + b;
}

}  // namespace

std::set<unsigned> reachable_sources(const InterconnectConfig& cfg, unsigned out_byte) {
  const unsigned n = cfg.total_bytes();
  if (out_byte >= n) throw ConfigError("output byte out of range");
  std::set<unsigned> srcs;
  if (cfg.kind == SlduKind::AllToAll) {
    for (unsigned i = 0; i < n; ++i) srcs.insert(i);
    return srcs;
  }

  static const unsigned eews[] = {8, 16, 32, 64};

  // The streaming datapath indexes slice bytes in element (memory-image)
  // order. A slide by `a` elements at width e rotates the stream by a*e/8
  // bytes: the wrapped part comes from the adjacent slice held in the
  // recirculation register, behind the same mux inputs. The null-stride pass
  // (reshuffle micro-op) contributes the identity route.
  srcs.insert(out_byte);
  for (unsigned eew : eews) {
    const unsigned esize = eew / 8;
    std::vector<uint64_t> amounts;
    if (cfg.power_of_two_slides()) {
      for (uint64_t a = 1; a * esize < n; a <<= 1) amounts.push_back(a);
    } else {
      amounts.push_back(1);
    }
    for (uint64_t a : amounts) {
      const unsigned delta = unsigned(a) * esize % n;
      srcs.insert((out_byte + delta) % n);      // slide down
      srcs.insert((out_byte + n - delta) % n);  // slide up
    }
  }

  if (cfg.combined()) {
    // re-encoding in the same pass: old-EEW lane layout in, new-EEW out
    for (unsigned old_eew : eews)
      for (unsigned new_eew : eews) {
        if (old_eew == new_eew) continue;
        for (unsigned k = 0; k < n; ++k)
          if (slice_pos(k, new_eew, cfg.lanes) == out_byte)
            srcs.insert(slice_pos(k, old_eew, cfg.lanes));
      }
  }
  return srcs;
}

uint64_t mux_count(const InterconnectConfig& cfg) {
  if (cfg.kind == SlduKind::AllToAll) {
    const uint64_t n = cfg.total_bytes();
    return n * (n - 1);
  }
  uint64_t total = 0;
  for (unsigned o = 0; o < cfg.total_bytes(); ++o) {
    auto s = reachable_sources(cfg, o);
    if (!s.empty()) total += s.size() - 1;
  }
  return total;
}

SlduArea area_model(unsigned lanes) {
  switch (lanes) {
    case 2: return {24, 39};
    case 4: return {48, 131};
    case 8: return {94, 577};
    case 16: return {196, 2900};
    default: throw ConfigError("no area calibration for " + std::to_string(lanes) + " lanes");
  }
}

}  // namespace laneforge
