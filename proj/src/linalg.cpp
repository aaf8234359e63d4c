#include "nbfrom/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "nbfrom/kernels.hpp"

namespace nbfrom {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("DenseMatrix: " + std::to_string(data_.size()) +
                                " values for shape " + shape());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void DenseMatrix::resize(std::size_t rows, std::size_t cols) {
  rows_ = rows;
  cols_ = cols;
  data_.resize(rows * cols);
}

std::vector<double> DenseMatrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void DenseMatrix::set_column(std::size_t c, std::span<const double> values) {
  if (values.size() != rows_) throw std::invalid_argument("set_column: length mismatch");
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = values[r];
}

std::string DenseMatrix::shape() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: dimension mismatch " + a.shape() + " * " + b.shape());
  }
  DenseMatrix c(a.rows(), b.cols());
  kernels::gemm(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  kernels::transpose(a.data(), t.data(), a.rows(), a.cols());
  return t;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double frobenius_norm(const DenseMatrix& a) { return norm2(a.data()); }

namespace {

constexpr int kMaxSweeps = 60;
constexpr double kOrthogonalityTol = 1e-14;

// Rotates columns p and q of `cols` (and of `v`) so they become orthogonal.
void rotate(std::vector<double>& cp, std::vector<double>& cq, double c, double s) {
  for (std::size_t i = 0; i < cp.size(); ++i) {
    const double x = cp[i];
    const double y = cq[i];
    cp[i] = c * x - s * y;
    cq[i] = s * x + c * y;
  }
}

// Fills `target` with a unit vector orthogonal to every vector in `basis`.
void orthonormal_completion(const std::vector<std::vector<double>>& basis,
                            std::vector<double>& target) {
  const std::size_t n = target.size();
  for (std::size_t e = 0; e < n; ++e) {
    std::fill(target.begin(), target.end(), 0.0);
    target[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) {
        const double proj = dot(b, target);
        for (std::size_t i = 0; i < n; ++i) target[i] -= proj * b[i];
      }
    }
    const double len = norm2(target);
    if (len > 0.5) {
      for (double& x : target) x /= len;
      return;
    }
  }
  throw std::runtime_error("thin_svd: orthonormal completion failed");
}

}  // namespace

SvdResult thin_svd(const DenseMatrix& a) {
  const std::size_t n = a.rows();
  const std::size_t d = a.cols();
  if (n == 0 || d == 0) throw std::invalid_argument("thin_svd: empty matrix");
  if (d > n) throw std::invalid_argument("thin_svd: expected rows >= cols, got " + a.shape());

  std::vector<std::vector<double>> cols(d);
  std::vector<std::vector<double>> v(d, std::vector<double>(d, 0.0));
  for (std::size_t j = 0; j < d; ++j) {
    cols[j] = a.column(j);
    v[j][j] = 1.0;
  }

  bool converged = false;
  int sweep = 0;
  for (; sweep < kMaxSweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double alpha = dot(cols[p], cols[p]);
        const double beta = dot(cols[q], cols[q]);
        const double gamma = dot(cols[p], cols[q]);
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::fabs(gamma) <= kOrthogonalityTol * std::sqrt(alpha) * std::sqrt(beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::fabs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(cols[p], cols[q], c, s);
        rotate(v[p], v[q], c, s);
      }
    }
  }
  if (!converged) {
    throw std::runtime_error("thin_svd: no convergence after " + std::to_string(sweep) +
                             " sweeps");
  }

  std::vector<double> norms(d);
  for (std::size_t j = 0; j < d; ++j) norms[j] = norm2(cols[j]);
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  const double sigma_max = norms[order[0]];
  const double zero_floor =
      sigma_max * std::numeric_limits<double>::epsilon() * static_cast<double>(d);

  SvdResult out{DenseMatrix(n, d), std::vector<double>(d), DenseMatrix(d, d)};
  std::vector<std::vector<double>> u_cols;
  u_cols.reserve(d);
  std::vector<std::size_t> deficient;
  for (std::size_t k = 0; k < d; ++k) {
    const std::size_t j = order[k];
    std::vector<double> vj = v[j];
    std::vector<double> uj = cols[j];
    double sigma = norms[j];
    if (sigma <= zero_floor || sigma == 0.0) {
      sigma = 0.0;
      deficient.push_back(k);
    } else {
      for (double& x : uj) x /= sigma;
    }

    // First non-negligible component of the right vector is made positive.
    const auto lead = std::find_if(vj.begin(), vj.end(), [](double x) { return std::fabs(x) > 1e-8; });
    if (lead != vj.end() && *lead < 0.0) {
      for (double& x : vj) x = -x;
      for (double& x : uj) x = -x;
    }

    out.sigma[k] = sigma;
    for (std::size_t i = 0; i < d; ++i) out.vt(k, i) = vj[i];
    u_cols.push_back(std::move(uj));
  }

  if (!deficient.empty()) {
    std::vector<std::vector<double>> basis;
    for (std::size_t k = 0; k < d; ++k) {
      if (out.sigma[k] > 0.0) basis.push_back(u_cols[k]);
    }
    for (std::size_t k : deficient) {
      orthonormal_completion(basis, u_cols[k]);
      basis.push_back(u_cols[k]);
    }
  }
  for (std::size_t k = 0; k < d; ++k) out.u.set_column(k, u_cols[k]);
  return out;
}

}  // namespace nbfrom
