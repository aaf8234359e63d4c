#include "expansion.hpp"

#include <cmath>

namespace oracle {

using nbfrom::FlowState;
using nbfrom::ParamVector;
using nbfrom::Point;

FlowState expansion_state(Point x, const ParamVector& psi) {
  // Parameters scaled to [-1, 1] over the default grid.
  const double a = (psi.mach - 20.0) / 10.0;
  const double b = (psi.altitude_km - 40.0) / 20.0;
  const double z2 = std::sin(2.0 * x.x + 1.5 * x.y);
  const double z3 = std::cos(3.0 * x.y) * (1.0 + 0.5 * x.x);

  const auto sum = [&](double c1, double c2, double c3) { return c1 + c2 * z2 + c3 * z3; };
  FlowState s;
  s.u1 = 2000.0 * sum(1.5 + 0.2 * a, 0.4 + 0.1 * b + 0.05 * a * b, 0.25 - 0.1 * a * a);
  s.u2 = 300.0 * sum(1.2 - 0.1 * b, 0.3 * a - 0.1 * b, 0.2 + 0.1 * a * b);
  s.rho = std::exp(sum(-1.0 - 0.5 * b, 0.3 + 0.1 * a, 0.2 - 0.1 * b * b));
  s.T = 500.0 * sum(2.0 + 0.3 * a - 0.2 * b, 0.2 + 0.1 * a, -0.15 + 0.05 * b);
  return s;
}

std::vector<nbfrom::FieldSnapshot> expansion_snapshots(const nbfrom::Mesh& mesh,
                                                       const std::vector<ParamVector>& params,
                                                       const std::vector<std::size_t>& ids) {
  std::vector<nbfrom::FieldSnapshot> out;
  for (std::size_t id : ids) {
    nbfrom::FieldSnapshot s{id, params[id], nbfrom::DenseMatrix(mesh.size(), nbfrom::kNumVariables)};
    for (std::size_t i = 0; i < mesh.size(); ++i) {
      const FlowState f = expansion_state(mesh.points[i], params[id]);
      s.values(i, 0) = f.u1;
      s.values(i, 1) = f.u2;
      s.values(i, 2) = f.rho;
      s.values(i, 3) = f.T;
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace oracle
