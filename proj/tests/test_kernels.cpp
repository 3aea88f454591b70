#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "orpr/kernels/kernels.hpp"

namespace kn = orpr::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

bool close(double a, double b, double tol = 1e-12) {
  return std::fabs(a - b) <= tol * std::max({std::fabs(a), std::fabs(b), 1.0});
}

}  // namespace

TEST_CASE("scalar kernels match naive arithmetic") {
  kn::force_backend(kn::Backend::kScalar);
  std::mt19937_64 rng(1);
  const auto a = random_vector(13, rng);
  const auto b = random_vector(13, rng);
  double expected = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) expected += a[i] * b[i];
  CHECK(kn::dot(a.data(), b.data(), a.size()) == doctest::Approx(expected));
}

TEST_CASE("avx2 and scalar backends agree on every kernel") {
  if (!kn::avx2_supported()) {
    MESSAGE("AVX2 unavailable; skipping equivalence checks");
    return;
  }
  std::mt19937_64 rng(42);
  for (const std::size_t n : {1u, 3u, 4u, 7u, 8u, 17u, 64u, 129u}) {
    const auto x = random_vector(n, rng);
    const auto y = random_vector(n, rng);

    kn::force_backend(kn::Backend::kScalar);
    const double dot_s = kn::dot(x.data(), y.data(), n);
    const double sum_s = kn::sum(x.data(), n);
    auto axpy_s = y;
    kn::axpy(1.7, x.data(), axpy_s.data(), n);

    kn::force_backend(kn::Backend::kAvx2);
    const double dot_v = kn::dot(x.data(), y.data(), n);
    const double sum_v = kn::sum(x.data(), n);
    auto axpy_v = y;
    kn::axpy(1.7, x.data(), axpy_v.data(), n);

    CHECK(close(dot_s, dot_v));
    CHECK(close(sum_s, sum_v));
    for (std::size_t i = 0; i < n; ++i) CHECK(close(axpy_s[i], axpy_v[i]));
  }
  kn::force_backend(kn::Backend::kScalar);
}

TEST_CASE("matvec variants agree across backends and against naive loops") {
  std::mt19937_64 rng(7);
  const std::size_t rows = 9, cols = 13;
  const auto a = random_vector(rows * cols, rng);
  const auto x = random_vector(cols, rng);
  const auto xr = random_vector(rows, rng);

  std::vector<double> naive_y(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) naive_y[r] += a[r * cols + c] * x[c];
  }
  std::vector<double> naive_t(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) naive_t[c] += a[r * cols + c] * xr[r];
  }

  const auto backends = kn::avx2_supported()
                            ? std::vector<kn::Backend>{kn::Backend::kScalar,
                                                       kn::Backend::kAvx2}
                            : std::vector<kn::Backend>{kn::Backend::kScalar};
  for (const auto backend : backends) {
    CAPTURE(kn::backend_name(backend));
    kn::force_backend(backend);
    std::vector<double> y(rows);
    kn::matvec(a.data(), rows, cols, x.data(), y.data());
    for (std::size_t r = 0; r < rows; ++r) CHECK(close(y[r], naive_y[r]));

    std::vector<double> yt(cols);
    kn::matvec_t(a.data(), rows, cols, xr.data(), yt.data());
    for (std::size_t c = 0; c < cols; ++c) CHECK(close(yt[c], naive_t[c]));

    auto acc = a;
    kn::outer_acc(0.5, xr.data(), rows, x.data(), cols, acc.data());
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        CHECK(close(acc[r * cols + c], a[r * cols + c] + 0.5 * xr[r] * x[c]));
      }
    }
  }
  kn::force_backend(kn::Backend::kScalar);
}
