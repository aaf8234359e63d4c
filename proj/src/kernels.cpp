#include "nbfrom/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

namespace nbfrom::kernels {
namespace {

constexpr std::size_t kRowBlock = 4;
constexpr std::size_t kColBlock = 16;
// Below this many multiply-adds the parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 16;

using v4d = double __attribute__((vector_size(32)));
constexpr std::size_t kLanes = 4;
constexpr std::size_t kVecPerRow = kColBlock / kLanes;

inline v4d load4(const double* p) {
  v4d v;
  __builtin_memcpy(&v, p, sizeof v);
  return v;
}

inline void store4(double* p, v4d v) { __builtin_memcpy(p, &v, sizeof v); }

// Full kRowBlock x kColBlock tile; accumulators stay in registers across k.
inline void tile_full(const double* a, const double* b, double* c, std::size_t k,
                      std::size_t n, bool accumulate) {
  v4d acc[kRowBlock][kVecPerRow];
  for (std::size_t r = 0; r < kRowBlock; ++r)
    for (std::size_t q = 0; q < kVecPerRow; ++q)
      acc[r][q] = accumulate ? load4(c + r * n + q * kLanes) : v4d{0.0, 0.0, 0.0, 0.0};
  for (std::size_t p = 0; p < k; ++p) {
    const double* bp = b + p * n;
    v4d bv[kVecPerRow];
    for (std::size_t q = 0; q < kVecPerRow; ++q) bv[q] = load4(bp + q * kLanes);
    for (std::size_t r = 0; r < kRowBlock; ++r) {
      const v4d ar = v4d{1.0, 1.0, 1.0, 1.0} * a[r * k + p];
      for (std::size_t q = 0; q < kVecPerRow; ++q) acc[r][q] += ar * bv[q];
    }
  }
  for (std::size_t r = 0; r < kRowBlock; ++r)
    for (std::size_t q = 0; q < kVecPerRow; ++q) store4(c + r * n + q * kLanes, acc[r][q]);
}

// Partial tile (fewer rows and/or columns); same summation order as tile_full.
inline void tile_partial(const double* a, const double* b, double* c, std::size_t rows,
                         std::size_t cols, std::size_t k, std::size_t n, bool accumulate) {
  for (std::size_t r = 0; r < rows; ++r) {
    double acc[kColBlock];
    for (std::size_t q = 0; q < cols; ++q) acc[q] = accumulate ? c[r * n + q] : 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double ar = a[r * k + p];
      const double* bp = b + p * n;
      for (std::size_t q = 0; q < cols; ++q) acc[q] += ar * bp[q];
    }
    for (std::size_t q = 0; q < cols; ++q) c[r * n + q] = acc[q];
  }
}

void gemm_rows(const double* a, const double* b, double* c, std::size_t row_begin,
               std::size_t rows, std::size_t k, std::size_t n, bool accumulate) {
  const double* ab = a + row_begin * k;
  double* cb = c + row_begin * n;
  std::size_t j = 0;
  if (rows == kRowBlock) {
    for (; j + kColBlock <= n; j += kColBlock) tile_full(ab, b + j, cb + j, k, n, accumulate);
  }
  for (; j < n; j += kColBlock) {
    tile_partial(ab, b + j, cb + j, rows, std::min(kColBlock, n - j), k, n, accumulate);
  }
}

}  // namespace

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate) std::fill_n(c.begin(), m * n, 0.0);
    return;
  }
  const std::size_t blocks = (m + kRowBlock - 1) / kRowBlock;
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  const bool parallel = m * k * n >= kParallelWork && blocks > 1;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    const std::size_t i0 = blk * kRowBlock;
    gemm_rows(pa, pb, pc, i0, std::min(kRowBlock, m - i0), k, n, accumulate);
  }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  std::vector<double> at(m * k);
  transpose(a, at, k, m);
  gemm(at, b, c, m, k, n, accumulate);
}

void transpose(std::span<const double> in, std::span<double> out, std::size_t rows,
               std::size_t cols) {
  constexpr std::size_t kTile = 32;
  for (std::size_t i0 = 0; i0 < rows; i0 += kTile) {
    const std::size_t i1 = std::min(rows, i0 + kTile);
    for (std::size_t j0 = 0; j0 < cols; j0 += kTile) {
      const std::size_t j1 = std::min(cols, j0 + kTile);
      for (std::size_t i = i0; i < i1; ++i)
        for (std::size_t j = j0; j < j1; ++j) out[j * rows + i] = in[i * cols + j];
    }
  }
}

void add_row_bias(std::span<double> y, std::span<const double> bias, std::size_t rows) {
  const std::size_t cols = bias.size();
  for (std::size_t r = 0; r < rows; ++r) {
    double* yr = y.data() + r * cols;
    for (std::size_t q = 0; q < cols; ++q) yr[q] += bias[q];
  }
}

namespace {

using v4i = std::int64_t __attribute__((vector_size(32)));

inline v4d splat(double x) { return v4d{x, x, x, x}; }

// tanh on four lanes using only vector arithmetic. |x| < 0.625 uses the Cephes
// rational form x + x^3 P(x^2)/Q(x^2); elsewhere (1 - e)/(1 + e) with
// e = exp(-2|x|) from a Cody-Waite reduced Taylor polynomial. Max error is a
// few ulp against std::tanh.
inline v4d tanh4(v4d x) {
  const v4i sign_mask = v4i{0, 0, 0, 0} + static_cast<std::int64_t>(0x8000000000000000ULL);
  const v4i xi = reinterpret_cast<v4i>(x);
  const v4d ax_raw = reinterpret_cast<v4d>(xi & ~sign_mask);
  const v4d ax = ax_raw < 20.0 ? ax_raw : splat(20.0);

  const v4d z = x * x;
  const v4d p = (-9.64399179425052238628e-1 * z - 9.92877231001918586564e1) * z -
                1.61468768441708447952e3;
  const v4d q = ((z + 1.12811678491632931402e2) * z + 2.23548839060100448583e3) * z +
                4.84406305325125486048e3;
  const v4d small = x + x * z * (p / q);

  // e = exp(y), y in [-40, 0].
  const v4d y = -2.0 * ax;
  constexpr double kShift = 0x1.8p52;
  const v4d t = y * 1.4426950408889634074 + kShift;
  const v4d kf = t - kShift;
  const v4d r = (y - kf * 6.93147180369123816490e-1) - kf * 1.90821492927058770002e-10;
  v4d poly = splat(1.0 / 6227020800.0);
  poly = poly * r + 1.0 / 479001600.0;
  poly = poly * r + 1.0 / 39916800.0;
  poly = poly * r + 1.0 / 3628800.0;
  poly = poly * r + 1.0 / 362880.0;
  poly = poly * r + 1.0 / 40320.0;
  poly = poly * r + 1.0 / 5040.0;
  poly = poly * r + 1.0 / 720.0;
  poly = poly * r + 1.0 / 120.0;
  poly = poly * r + 1.0 / 24.0;
  poly = poly * r + 1.0 / 6.0;
  poly = poly * r + 0.5;
  poly = poly * r + 1.0;
  poly = poly * r + 1.0;
  // The low bits of t hold round(y / ln 2) as a two's-complement integer.
  const v4i k = reinterpret_cast<v4i>(t) - std::bit_cast<std::int64_t>(kShift);
  const v4d scale = reinterpret_cast<v4d>((k + 1023) << 52);
  const v4d e = poly * scale;
  const v4d mag = (1.0 - e) / (1.0 + e);
  const v4d large = reinterpret_cast<v4d>(reinterpret_cast<v4i>(mag) | (xi & sign_mask));

  return ax_raw < 0.625 ? small : large;
}

}  // namespace

void tanh_inplace(std::span<double> v) {
  const std::size_t n = v.size();
  const std::size_t blocks = n / kLanes;
  double* p = v.data();
#pragma omp parallel for schedule(static) if (n >= kParallelWork / 16)
  for (std::size_t b = 0; b < blocks; ++b) store4(p + b * kLanes, tanh4(load4(p + b * kLanes)));
  if (const std::size_t rest = n - blocks * kLanes; rest > 0) {
    double tail[kLanes] = {0.0, 0.0, 0.0, 0.0};
    std::copy_n(p + blocks * kLanes, rest, tail);
    store4(tail, tanh4(load4(tail)));
    std::copy_n(tail, rest, p + blocks * kLanes);
  }
}

void tanh_backward(std::span<const double> act, std::span<double> grad) {
  const std::size_t n = grad.size();
  for (std::size_t i = 0; i < n; ++i) grad[i] *= 1.0 - act[i] * act[i];
}

void column_sums(std::span<const double> m, std::span<double> out, std::size_t rows,
                 std::size_t cols, bool accumulate) {
  if (!accumulate) std::fill_n(out.begin(), cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* mr = m.data() + r * cols;
    for (std::size_t q = 0; q < cols; ++q) out[q] += mr[q];
  }
}

}  // namespace nbfrom::kernels
