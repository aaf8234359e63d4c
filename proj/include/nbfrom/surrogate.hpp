#pragma once

#include <span>
#include <string>

#include "nbfrom/dataset.hpp"
#include "nbfrom/geometry.hpp"
#include "nbfrom/linalg.hpp"

namespace nbfrom {

/// Anything that maps (mesh, parameters) to physical field values.
class Surrogate {
 public:
  virtual ~Surrogate() = default;

  virtual std::string kind() const = 0;

  /// N x K matrix: column k holds variable v over the mesh for params[k], in
  /// physical units.
  virtual DenseMatrix predict(const Mesh& mesh, std::span<const ParamVector> params,
                              Variable v) const = 0;
};

}  // namespace nbfrom
