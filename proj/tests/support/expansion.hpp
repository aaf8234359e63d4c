#pragma once

// Synthetic fields that are exactly three-term basis expansions: for every
// variable, the normalized field is c1(psi) + c2(psi) z2(x) + c3(psi) z3(x)
// with smooth z and polynomial c (density is the exponential of such a sum,
// so its log-normalized form is one too).

#include <cstddef>
#include <vector>

#include "nbfrom/dataset.hpp"
#include "nbfrom/geometry.hpp"

namespace oracle {

nbfrom::FlowState expansion_state(nbfrom::Point x, const nbfrom::ParamVector& psi);

std::vector<nbfrom::FieldSnapshot> expansion_snapshots(const nbfrom::Mesh& mesh,
                                                       const std::vector<nbfrom::ParamVector>& params,
                                                       const std::vector<std::size_t>& ids);

}  // namespace oracle
