#include "laneforge/report.hpp"

#include <json.hpp>

namespace laneforge {

std::string CycleReport::to_json() const {
  nlohmann::json j;
  j["cycles"] = cycles;
  j["flops"] = flops;
  j["flop_per_cycle"] = flop_per_cycle;
  j["ideality"] = ideality;
  j["stalls"] = {{"bank", bank_stalls}, {"issue", issue_stalls}, {"memory", memory_stalls}};
  j["unit_busy"] = unit_busy;
  j["cache"] = {{"i_miss", i_miss}, {"d_miss", d_miss}, {"invalidated_lines", invalidated_lines}};
  j["instructions"] = instructions;
  j["reshuffles"] = reshuffles;
  return j.dump(2);
}

}  // namespace laneforge
