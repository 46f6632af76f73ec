#include "learnsim/oracle/return_map.hpp"

#include <cmath>

#include "learnsim/core/errors.hpp"

namespace learnsim::oracle {

ReturnMapResult return_map(double strain, const SpringPlasticState& state, double E, double sigma_y, double H) {
  if (!(E > 0.0) || !(H > 0.0) || !(sigma_y > 0.0)) throw ConfigError("return_map needs E, H, sigma_y > 0");
  ReturnMapResult r;
  r.state = state;
  const double trial = E * (strain - state.plastic_strain);
  const double f = std::abs(trial) - (sigma_y + H * state.accumulated);
  if (f <= 0.0) {
    r.stress = trial;
    r.tangent = E;
    return r;
  }
  const double dgamma = f / (E + H);
  const double sign = trial > 0.0 ? 1.0 : -1.0;
  r.stress = trial - E * dgamma * sign;
  r.state.plastic_strain += dgamma * sign;
  r.state.accumulated += dgamma;
  r.tangent = E * H / (E + H);
  return r;
}

}  // namespace learnsim::oracle
