#pragma once

namespace learnsim::oracle {

struct SpringPlasticState {
  double plastic_strain = 0.0;
  double accumulated = 0.0;  // never decreases
};

struct ReturnMapResult {
  double stress = 0.0;
  double tangent = 0.0;  // d stress / d strain
  SpringPlasticState state;
};

// 1-D radial return with linear isotropic hardening; yield = sigma_y + H * accumulated.
ReturnMapResult return_map(double strain, const SpringPlasticState& state, double E, double sigma_y, double H);

}  // namespace learnsim::oracle
