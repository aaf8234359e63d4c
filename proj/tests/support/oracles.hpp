#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the library code paths it is used to check.

#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

/// c = a (m x k) * b (k x n), textbook triple loop.
std::vector<double> naive_matmul(const std::vector<double>& a, const std::vector<double>& b,
                                 std::size_t m, std::size_t k, std::size_t n);

/// Eigenvalues of a symmetric n x n matrix by cyclic two-sided Jacobi, sorted
/// descending.
std::vector<double> jacobi_eigenvalues(std::vector<double> sym, std::size_t n);

/// Largest singular value of an m x n matrix by power iteration on A^T A.
double power_iteration_norm(const std::vector<double>& a, std::size_t m, std::size_t n,
                            int iterations = 2000);

/// Central differences of f at x with step h, one component per entry of x.
std::vector<double> central_difference_gradient(const std::function<double(const std::vector<double>&)>& f,
                                                std::vector<double> x, double h);

}  // namespace oracle
