#pragma once

// Gas properties and steady planar residuals of the compressible
// Navier-Stokes equations, evaluated on structured probe grids.

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <vector>

#include "nbfrom/dataset.hpp"
#include "nbfrom/geometry.hpp"

namespace nbfrom {

struct GasConstants {
  double R = 287.0;
  double a1 = 3.5;
  double mu0 = 1.716e-5;
  double T0_mu = 273.11;
  double S_mu = 111.0;
  double k0 = 2.41e-2;
  double T0_k = 273.11;
  double S_k = 194.0;
};

/// mu0 (T/T0)^{3/2} (T0 + S) / (T + S). Throws std::domain_error for T <= 0.
double sutherland_viscosity(double T, const GasConstants& gas = {});
double sutherland_conductivity(double T, const GasConstants& gas = {});

/// h = R a1 T (higher polynomial coefficients and formation enthalpy are zero).
double enthalpy(double T, const GasConstants& gas = {});
/// e = h - R T.
double internal_energy(double T, const GasConstants& gas = {});
/// E = e + rho (u1^2 + u2^2) / 2, exactly as the governing relations write it.
double total_energy(double rho, double u1, double u2, double T, const GasConstants& gas = {});
double pressure(double rho, double T, const GasConstants& gas = {});

using Tensor2 = std::array<std::array<double, 2>, 2>;

/// grad[i][j] = d u_i / d x_j. Returns tau with tau_ii = 2 mu (S_ii - tr(S)/3)
/// and tau_ij = 2 mu S_ij off the diagonal.
Tensor2 stress_tensor(const Tensor2& grad, double mu);

/// Uniform nx x ny grid with spacing h and lower-left node (x0, y0). Values
/// are stored row by row (index j * nx + i).
struct ProbeGrid {
  double x0 = 0.0, y0 = 0.0, h = 0.0;
  std::size_t nx = 0, ny = 0;
  std::vector<FlowState> values;

  Point node(std::size_t i, std::size_t j) const {
    return {x0 + static_cast<double>(i) * h, y0 + static_cast<double>(j) * h};
  }
  std::size_t size() const { return nx * ny; }
  /// The nodes as a mesh, row by row.
  Mesh as_mesh() const;
};

/// Throws std::invalid_argument listing the nodes that fall outside the domain.
void check_probe_grid(const ConeGeometry& geom, double x0, double y0, std::size_t nx, std::size_t ny,
                      double h);

/// Samples `field` at every node. Throws std::invalid_argument if h <= 0, the
/// grid is empty, or a node falls outside the domain.
ProbeGrid sample_probe_grid(const ConeGeometry& geom, double x0, double y0, std::size_t nx,
                            std::size_t ny, double h,
                            const std::function<FlowState(Point)>& field);

/// Builds a grid from values already computed at as_mesh() nodes.
ProbeGrid make_probe_grid(double x0, double y0, std::size_t nx, std::size_t ny, double h,
                          std::vector<FlowState> values);

struct ResidualField {
  std::vector<double> continuity;
  std::vector<double> momentum_x;
  std::vector<double> momentum_y;
  std::vector<double> energy;
};

/// Signed residuals (left side minus right side) at every node, with p = rho R T.
/// Derivatives use second-order central differences, one-sided second order
/// at the grid edges. Throws std::invalid_argument for grids below 3 x 3.
ResidualField residuals(const ProbeGrid& grid, const GasConstants& gas = {});

/// x, y, r_cont, r_momx, r_momy, r_energy.
void save_residuals(const std::filesystem::path& path, const ProbeGrid& grid,
                    const ResidualField& r);

}  // namespace nbfrom
