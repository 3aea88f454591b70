#include "orpr/kernels/kernels.hpp"

#include <cstdlib>

#include "orpr/core/errors.hpp"

namespace orpr::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend probe_backend() {
  if (const char* env = std::getenv("ORPR_KERNELS")) {
    const std::string choice(env);
    if (choice == "scalar") return Backend::kScalar;
    if (choice == "avx2") {
      if (!cpu_has_avx2()) {
        throw DomainError("ORPR_KERNELS=avx2 requested but CPU lacks AVX2/FMA");
      }
      return Backend::kAvx2;
    }
    if (!choice.empty() && choice != "auto") {
      throw DomainError("unknown ORPR_KERNELS value '" + choice + "'");
    }
  }
  return cpu_has_avx2() ? Backend::kAvx2 : Backend::kScalar;
}

struct State {
  Backend backend;
  const detail::Ops* ops;
};

State& state() {
  static State s = [] {
    const Backend b = probe_backend();
    return State{b, b == Backend::kAvx2 ? &detail::avx2_ops() : &detail::scalar_ops()};
  }();
  return s;
}

}  // namespace

Backend active_backend() { return state().backend; }

bool avx2_supported() { return cpu_has_avx2(); }

void force_backend(Backend backend) {
  if (backend == Backend::kAvx2 && !cpu_has_avx2()) {
    throw DomainError("cannot force AVX2 backend: unsupported CPU");
  }
  state().backend = backend;
  state().ops = backend == Backend::kAvx2 ? &detail::avx2_ops() : &detail::scalar_ops();
}

std::string backend_name(Backend backend) {
  return backend == Backend::kAvx2 ? "avx2" : "scalar";
}

double dot(const double* a, const double* b, std::size_t n) {
  return state().ops->dot(a, b, n);
}

double sum(const double* x, std::size_t n) { return state().ops->sum(x, n); }

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  state().ops->axpy(alpha, x, y, n);
}

void matvec(const double* a, std::size_t rows, std::size_t cols, const double* x,
            double* y) {
  const auto* ops = state().ops;
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = ops->dot(a + r * cols, x, cols);
  }
}

void matvec_t(const double* a, std::size_t rows, std::size_t cols, const double* x,
              double* y) {
  for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
  const auto* ops = state().ops;
  for (std::size_t r = 0; r < rows; ++r) {
    ops->axpy(x[r], a + r * cols, y, cols);
  }
}

void outer_acc(double alpha, const double* u, std::size_t rows, const double* v,
               std::size_t cols, double* a) {
  const auto* ops = state().ops;
  for (std::size_t r = 0; r < rows; ++r) {
    ops->axpy(alpha * u[r], v, a + r * cols, cols);
  }
}

}  // namespace orpr::kernels
