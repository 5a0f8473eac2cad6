#pragma once

#include <functional>
#include <vector>

#include "svo/simulation.h"

namespace svo::detail {

// Named numeric fields of SimulationConfig, shared by the key-value parser,
// the config echo and metrics.json.
struct ConfigParam {
  const char* key;
  std::function<double&(SimulationConfig&)> ref;
};
struct IntParam {
  const char* key;
  std::function<int&(SimulationConfig&)> ref;
};

const std::vector<ConfigParam>& RealParams();
const std::vector<IntParam>& IntParams();

}  // namespace svo::detail
