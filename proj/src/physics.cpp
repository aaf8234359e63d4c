#include "nbfrom/physics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "nbfrom/io.hpp"

namespace nbfrom {

namespace {

double sutherland(double T, double ref, double t0, double s, const char* what) {
  if (!(T > 0.0)) throw std::domain_error(std::string(what) + ": temperature must be positive");
  return ref * std::pow(T / t0, 1.5) * (t0 + s) / (T + s);
}

}  // namespace

double sutherland_viscosity(double T, const GasConstants& gas) {
  return sutherland(T, gas.mu0, gas.T0_mu, gas.S_mu, "sutherland_viscosity");
}

double sutherland_conductivity(double T, const GasConstants& gas) {
  return sutherland(T, gas.k0, gas.T0_k, gas.S_k, "sutherland_conductivity");
}

double enthalpy(double T, const GasConstants& gas) {
  if (!(T > 0.0)) throw std::domain_error("enthalpy: temperature must be positive");
  return gas.R * gas.a1 * T;
}

double internal_energy(double T, const GasConstants& gas) { return enthalpy(T, gas) - gas.R * T; }

double total_energy(double rho, double u1, double u2, double T, const GasConstants& gas) {
  if (!(rho > 0.0)) throw std::domain_error("total_energy: density must be positive");
  return internal_energy(T, gas) + 0.5 * rho * (u1 * u1 + u2 * u2);
}

double pressure(double rho, double T, const GasConstants& gas) { return rho * gas.R * T; }

Tensor2 stress_tensor(const Tensor2& grad, double mu) {
  Tensor2 s{};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) s[i][j] = 0.5 * (grad[i][j] + grad[j][i]);
  }
  const double trace = s[0][0] + s[1][1];
  Tensor2 tau{};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      tau[i][j] = i == j ? 2.0 * mu * (s[i][i] - trace / 3.0) : 2.0 * mu * s[i][j];
    }
  }
  return tau;
}

Mesh ProbeGrid::as_mesh() const {
  Mesh m;
  m.points.reserve(size());
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) m.points.push_back(node(i, j));
  }
  return m;
}

ProbeGrid make_probe_grid(double x0, double y0, std::size_t nx, std::size_t ny, double h,
                          std::vector<FlowState> values) {
  if (!(h > 0.0)) throw std::invalid_argument("probe grid: spacing must be positive");
  if (nx == 0 || ny == 0) throw std::invalid_argument("probe grid: empty grid");
  if (values.size() != nx * ny) throw std::invalid_argument("probe grid: value count does not match nodes");
  return {x0, y0, h, nx, ny, std::move(values)};
}

void check_probe_grid(const ConeGeometry& geom, double x0, double y0, std::size_t nx, std::size_t ny,
                      double h) {
  const ProbeGrid grid = make_probe_grid(x0, y0, nx, ny, h, std::vector<FlowState>(nx * ny));
  std::string listed;
  std::size_t bad = 0;
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const Point p = grid.node(i, j);
      if (contains(geom, p)) continue;
      if (++bad <= 8) {
        listed += (bad > 1 ? ", " : "") + std::string("[") + std::to_string(i) + "," + std::to_string(j) + "] (" +
                  format_double(p.x) + ", " + format_double(p.y) + ")";
      }
    }
  }
  if (bad) {
    throw std::invalid_argument("probe grid: " + std::to_string(bad) + " node(s) outside the domain: " + listed +
                                (bad > 8 ? ", ..." : ""));
  }
}

ProbeGrid sample_probe_grid(const ConeGeometry& geom, double x0, double y0, std::size_t nx,
                            std::size_t ny, double h,
                            const std::function<FlowState(Point)>& field) {
  check_probe_grid(geom, x0, y0, nx, ny, h);
  ProbeGrid grid = make_probe_grid(x0, y0, nx, ny, h, std::vector<FlowState>(nx * ny));
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) grid.values[j * nx + i] = field(grid.node(i, j));
  }
  return grid;
}

namespace {

// Second-order derivative of a row-major nx x ny field along x or y.
std::vector<double> derivative(const std::vector<double>& f, std::size_t nx, std::size_t ny,
                               double h, bool along_x) {
  std::vector<double> out(f.size());
  const std::size_t n = along_x ? nx : ny;
  const std::size_t stride = along_x ? 1 : nx;
  const std::size_t lines = along_x ? ny : nx;
  const std::size_t line_stride = along_x ? nx : 1;
  const double inv = 1.0 / (2.0 * h);
  for (std::size_t l = 0; l < lines; ++l) {
    const double* p = f.data() + l * line_stride;
    double* q = out.data() + l * line_stride;
    q[0] = (-3.0 * p[0] + 4.0 * p[stride] - p[2 * stride]) * inv;
    for (std::size_t k = 1; k + 1 < n; ++k) q[k * stride] = (p[(k + 1) * stride] - p[(k - 1) * stride]) * inv;
    const std::size_t e = (n - 1) * stride;
    q[e] = (3.0 * p[e] - 4.0 * p[e - stride] + p[e - 2 * stride]) * inv;
  }
  return out;
}

}  // namespace

ResidualField residuals(const ProbeGrid& grid, const GasConstants& gas) {
  if (grid.nx < 3 || grid.ny < 3) {
    throw std::invalid_argument("residuals: grid must be at least 3 x 3, got " +
                                std::to_string(grid.nx) + " x " + std::to_string(grid.ny));
  }
  if (grid.values.size() != grid.size()) throw std::invalid_argument("residuals: value count does not match nodes");
  const std::size_t n = grid.size();
  const auto dx = [&](const std::vector<double>& f) { return derivative(f, grid.nx, grid.ny, grid.h, true); };
  const auto dy = [&](const std::vector<double>& f) { return derivative(f, grid.nx, grid.ny, grid.h, false); };

  std::vector<double> u(n), v(n), temp(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = grid.values[i].u1;
    v[i] = grid.values[i].u2;
    temp[i] = grid.values[i].T;
  }
  const auto ux = dx(u), uy = dy(u), vx = dx(v), vy = dy(v), tx = dx(temp), ty = dy(temp);

  std::vector<double> mass_x(n), mass_y(n);
  std::vector<double> mom_xx(n), mom_xy(n), mom_yx(n), mom_yy(n);
  std::vector<double> en_x(n), en_y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const FlowState& s = grid.values[i];
    const double p = pressure(s.rho, s.T, gas);
    const double mu = sutherland_viscosity(s.T, gas);
    const double k = sutherland_conductivity(s.T, gas);
    const Tensor2 tau = stress_tensor({{{ux[i], uy[i]}, {vx[i], vy[i]}}}, mu);
    const double e_total = total_energy(s.rho, s.u1, s.u2, s.T, gas);

    mass_x[i] = s.rho * s.u1;
    mass_y[i] = s.rho * s.u2;
    // Momentum flux minus viscous stress, row i = component, column j = direction.
    mom_xx[i] = s.rho * s.u1 * s.u1 + p - tau[0][0];
    mom_xy[i] = s.rho * s.u1 * s.u2 - tau[0][1];
    mom_yx[i] = s.rho * s.u2 * s.u1 - tau[1][0];
    mom_yy[i] = s.rho * s.u2 * s.u2 + p - tau[1][1];
    // Convective energy flux minus viscous work and conduction.
    en_x[i] = (e_total + p) * s.u1 - (tau[0][0] * s.u1 + tau[1][0] * s.u2 + k * tx[i]);
    en_y[i] = (e_total + p) * s.u2 - (tau[0][1] * s.u1 + tau[1][1] * s.u2 + k * ty[i]);
  }

  ResidualField r;
  const auto divergence = [&](const std::vector<double>& fx, const std::vector<double>& fy) {
    auto a = dx(fx);
    const auto b = dy(fy);
    for (std::size_t i = 0; i < n; ++i) a[i] += b[i];
    return a;
  };
  r.continuity = divergence(mass_x, mass_y);
  r.momentum_x = divergence(mom_xx, mom_xy);
  r.momentum_y = divergence(mom_yx, mom_yy);
  r.energy = divergence(en_x, en_y);
  return r;
}

void save_residuals(const std::filesystem::path& path, const ProbeGrid& grid,
                    const ResidualField& r) {
  std::string out = "x,y,r_cont,r_momx,r_momy,r_energy\n";
  for (std::size_t j = 0; j < grid.ny; ++j) {
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const std::size_t idx = j * grid.nx + i;
      const Point p = grid.node(i, j);
      for (double value : {p.x, p.y, r.continuity[idx], r.momentum_x[idx], r.momentum_y[idx], r.energy[idx]}) {
        append_double(out, value);
        out += ',';
      }
      out.back() = '\n';
    }
  }
  write_file_atomic(path, out);
}

}  // namespace nbfrom
