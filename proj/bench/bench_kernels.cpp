// Serial reference vs parallel kernels on the shapes that dominate training:
// basis networks (40 wide), coefficient networks (100 wide, batch of 10
// configs) and the DeepONet decoder (256 wide).

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include <omp.h>

#include "nbfrom/kernels.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_per_call(const std::function<void()>& fn, double min_seconds = 0.3) {
  fn();
  std::size_t calls = 0;
  const auto start = Clock::now();
  double elapsed = 0.0;
  do {
    fn();
    ++calls;
    elapsed = std::chrono::duration<double>(Clock::now() - start).count();
  } while (elapsed < min_seconds);
  return elapsed / static_cast<double>(calls);
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

}  // namespace

int main() {
  std::mt19937_64 rng(42);
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-28s %12s %12s %8s\n", "gemm m x k x n", "ref GFLOP/s", "omp GFLOP/s", "speedup");

  const std::size_t shapes[][3] = {
      {64, 40, 40}, {2000, 40, 40}, {10, 100, 100}, {256, 256, 256}, {2000, 256, 256}, {256, 32, 256}};
  for (const auto& s : shapes) {
    const std::size_t m = s[0], k = s[1], n = s[2];
    auto a = random_vector(m * k, rng);
    auto b = random_vector(k * n, rng);
    std::vector<double> c(m * n);
    const double flops = 2.0 * static_cast<double>(m * k * n);
    const double t_ref = seconds_per_call([&] { nbfrom::kernels::reference::gemm(a, b, c, m, k, n); });
    const double t_omp = seconds_per_call([&] { nbfrom::kernels::gemm(a, b, c, m, k, n); });
    char label[64];
    std::snprintf(label, sizeof label, "%zu x %zu x %zu", m, k, n);
    std::printf("%-28s %12.2f %12.2f %8.2f\n", label, flops / t_ref * 1e-9, flops / t_omp * 1e-9,
                t_ref / t_omp);
  }

  auto v = random_vector(1 << 18, rng);
  auto w = v;
  const double t_ref = seconds_per_call([&] {
    w = v;
    nbfrom::kernels::reference::tanh_inplace(w);
  });
  const double t_omp = seconds_per_call([&] {
    w = v;
    nbfrom::kernels::tanh_inplace(w);
  });
  std::printf("%-28s %12.2f %12.2f %8.2f   (Mevals/s)\n", "tanh 2^18",
              static_cast<double>(v.size()) / t_ref * 1e-6,
              static_cast<double>(v.size()) / t_omp * 1e-6, t_ref / t_omp);
  return 0;
}
