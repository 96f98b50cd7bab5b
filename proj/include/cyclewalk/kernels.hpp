// kernels.hpp
// Double-precision vector kernels used by the solver and the norm machinery.
// Each kernel ships a scalar reference implementation and an AVX2+FMA variant;
// the backend is selected once at startup from CPUID and can be forced (tests
// compare the two paths on the same inputs).

#pragma once

#include <cstdint>
#include <cstddef>

namespace cyclewalk::kern {

enum class Backend { scalar, avx2 };

// Backend currently in use (auto-detected on first call).
Backend active_backend();

// Force a backend; Backend::avx2 is ignored when the CPU lacks it.
void force_backend(Backend b);

// True if this build/CPU can run the AVX2 variants.
bool avx2_available();

// sum_i x[i]*y[i]
double dot(const double* x, const double* y, std::size_t n);

// sum_i x[i]
double sum(const double* x, std::size_t n);

// sum_i w[i]*x[i]*x[i]
double weighted_sq_sum(const double* w, const double* x, std::size_t n);

// sum_i w[i]*x[i]*y[i]
double weighted_dot(const double* w, const double* x, const double* y, std::size_t n);

// max_i |x[i]|
double max_abs(const double* x, std::size_t n);

// y[i] += a*x[i]
void axpy(double a, const double* x, double* y, std::size_t n);

// p[i] = r[i] + beta*(p[i] - omega*v[i])   (BiCGStab direction update)
void bicgstab_update_p(const double* r, double beta, double omega, const double* v,
                       double* p, std::size_t n);

// y[i] = diag[i]*x[i] - sum_k cdir[k][i]*x[nbr[k][i]]
// Nearest-neighbor stencil on the torus; cdir/nbr are direction-major tables.
void stencil_apply(std::size_t n, int ndirs, const double* diag,
                   const double* const* cdir, const std::int64_t* const* nbr,
                   const double* x, double* y);

// sum_i w[i]*(x[nbr[i]] - x[i])^2  (one direction of a gradient energy)
double gather_diff_sq(const double* w, const double* x, const std::int64_t* nbr,
                      std::size_t n);

}  // namespace cyclewalk::kern
