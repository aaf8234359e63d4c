#pragma once

// Dense kernels used by every network and matrix operation in the library.
//
// All matrices are row-major. The functions in `nbfrom::kernels` are the
// OpenMP-parallel versions used in production code; `nbfrom::kernels::reference`
// holds straightforward serial loops kept as a correctness oracle for tests and
// as the baseline in bench/bench_kernels.
//
// Parallel kernels partition work by output rows in fixed 4-row blocks, so the
// arithmetic performed for any output element does not depend on the number of
// threads. Results are bit-identical for any OMP_NUM_THREADS.

#include <cstddef>
#include <span>

namespace nbfrom::kernels {

/// c (m x n) = a (m x k) * b (k x n), or c += a * b when `accumulate` is set.
void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

/// c (m x n) = a^T * b where a is (k x m) and b is (k x n).
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

/// out (cols x rows) = transpose of in (rows x cols).
void transpose(std::span<const double> in, std::span<double> out, std::size_t rows,
               std::size_t cols);

/// y[r, :] += bias for every row r of a (rows x bias.size()) matrix.
void add_row_bias(std::span<double> y, std::span<const double> bias, std::size_t rows);

/// In-place tanh.
void tanh_inplace(std::span<double> v);

/// grad[i] *= 1 - act[i]^2 (derivative of tanh expressed through its output).
void tanh_backward(std::span<const double> act, std::span<double> grad);

/// out[c] = sum over rows of m (rows x cols), rows summed in order.
void column_sums(std::span<const double> m, std::span<double> out, std::size_t rows,
                 std::size_t cols, bool accumulate = false);

namespace reference {

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void tanh_inplace(std::span<double> v);

}  // namespace reference

}  // namespace nbfrom::kernels
