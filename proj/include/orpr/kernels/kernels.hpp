#pragma once

#include <cstddef>
#include <string>

// Double-precision vector kernels backing the dense algebra of the policy
// network and its training loops. Scalar reference implementations are the
// semantic ground truth; an AVX2 variant is selected at runtime when the CPU
// supports it. The two backends are equivalence-tested against each other.
//
// The backend is fixed for the lifetime of the process (first use or an
// explicit force_backend call), so repeated runs on one machine are
// reproducible. ORPR_KERNELS=scalar|avx2|auto overrides the probe.

namespace orpr::kernels {

enum class Backend { kScalar, kAvx2 };

Backend active_backend();
// Throws DomainError when the requested backend is unsupported on this CPU.
void force_backend(Backend backend);
bool avx2_supported();
std::string backend_name(Backend backend);

double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
// y = A x, A row-major rows x cols
void matvec(const double* a, std::size_t rows, std::size_t cols, const double* x,
            double* y);
// y = A^T x, A row-major rows x cols, y has cols entries
void matvec_t(const double* a, std::size_t rows, std::size_t cols, const double* x,
              double* y);
// A += alpha * u v^T, A row-major rows x cols
void outer_acc(double alpha, const double* u, std::size_t rows, const double* v,
               std::size_t cols, double* a);

namespace detail {

struct Ops {
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
};

const Ops& scalar_ops();
const Ops& avx2_ops();  // valid only when avx2_supported()

}  // namespace detail

}  // namespace orpr::kernels
