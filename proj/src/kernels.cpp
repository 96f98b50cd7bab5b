// kernels.cpp
// Scalar reference kernels plus AVX2+FMA variants dispatched at runtime.
// The AVX2 functions carry target attributes so the file builds without
// global -mavx2; reductions keep a fixed lane order so results are
// reproducible run-to-run on the same machine.

#include "cyclewalk/kernels.hpp"

#include <atomic>
#include <cmath>

#if defined(__x86_64__) || defined(_M_X64)
#define CYCLEWALK_X86 1
#include <immintrin.h>
#else
#define CYCLEWALK_X86 0
#endif

namespace cyclewalk::kern {

// ---------------------------------------------------------------- scalar ---

namespace scalar {

static double dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

static double sum(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

static double weighted_sq_sum(const double* w, const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w[i] * x[i] * x[i];
    return s;
}

static double weighted_dot(const double* w, const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w[i] * x[i] * y[i];
    return s;
}

static double max_abs(const double* x, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double a = std::fabs(x[i]);
        if (a > m) m = a;
    }
    return m;
}

static void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

static void bicgstab_update_p(const double* r, double beta, double omega, const double* v,
                              double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
}

static void stencil_apply(std::size_t n, int ndirs, const double* diag,
                          const double* const* cdir, const std::int64_t* const* nbr,
                          const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = diag[i] * x[i];
    for (int k = 0; k < ndirs; ++k) {
        const double* c = cdir[k];
        const std::int64_t* nb = nbr[k];
        for (std::size_t i = 0; i < n; ++i) y[i] -= c[i] * x[nb[i]];
    }
}

static double gather_diff_sq(const double* w, const double* x, const std::int64_t* nbr,
                             std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = x[nbr[i]] - x[i];
        s += w[i] * d * d;
    }
    return s;
}

}  // namespace scalar

// ------------------------------------------------------------------ avx2 ---

#if CYCLEWALK_X86

namespace avx2 {

__attribute__((target("avx2,fma"))) static inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

__attribute__((target("avx2,fma"))) static double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

__attribute__((target("avx2,fma"))) static double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

__attribute__((target("avx2,fma"))) static double weighted_sq_sum(const double* w, const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xv = _mm256_loadu_pd(x + i);
        acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), xv), xv, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += w[i] * x[i] * x[i];
    return s;
}

__attribute__((target("avx2,fma"))) static double weighted_dot(const double* w, const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d wx = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(x + i));
        acc = _mm256_fmadd_pd(wx, _mm256_loadu_pd(y + i), acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += w[i] * x[i] * y[i];
    return s;
}

__attribute__((target("avx2,fma"))) static double max_abs(const double* x, std::size_t n) {
    const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_max_pd(acc, _mm256_and_pd(_mm256_loadu_pd(x + i), mask));
    __m128d lo = _mm256_castpd256_pd128(acc);
    __m128d hi = _mm256_extractf128_pd(acc, 1);
    lo = _mm_max_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    double m = _mm_cvtsd_f64(_mm_max_sd(lo, sh));
    for (; i < n; ++i) {
        double a = std::fabs(x[i]);
        if (a > m) m = a;
    }
    return m;
}

__attribute__((target("avx2,fma"))) static void axpy(double a, const double* x, double* y, std::size_t n) {
    __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

__attribute__((target("avx2,fma"))) static void bicgstab_update_p(const double* r, double beta, double omega, const double* v,
                                                                  double* p, std::size_t n) {
    __m256d bv = _mm256_set1_pd(beta);
    __m256d wv = _mm256_set1_pd(omega);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d pv = _mm256_loadu_pd(p + i);
        __m256d t = _mm256_fnmadd_pd(wv, _mm256_loadu_pd(v + i), pv);  // p - omega*v
        _mm256_storeu_pd(p + i, _mm256_fmadd_pd(bv, t, _mm256_loadu_pd(r + i)));
    }
    for (; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
}

__attribute__((target("avx2,fma"))) static void stencil_apply(std::size_t n, int ndirs, const double* diag,
                                                              const double* const* cdir,
                                                              const std::int64_t* const* nbr,
                                                              const double* x, double* y) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(diag + i), _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) y[i] = diag[i] * x[i];
    for (int k = 0; k < ndirs; ++k) {
        const double* c = cdir[k];
        const std::int64_t* nb = nbr[k];
        i = 0;
        for (; i + 4 <= n; i += 4) {
            __m256i idx = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(nb + i));
            __m256d xv = _mm256_i64gather_pd(x, idx, 8);
            __m256d yv = _mm256_loadu_pd(y + i);
            _mm256_storeu_pd(y + i, _mm256_fnmadd_pd(_mm256_loadu_pd(c + i), xv, yv));
        }
        for (; i < n; ++i) y[i] -= c[i] * x[nb[i]];
    }
}

__attribute__((target("avx2,fma"))) static double gather_diff_sq(const double* w, const double* x, const std::int64_t* nbr,
                                                                 std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256i idx = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(nbr + i));
        __m256d d = _mm256_sub_pd(_mm256_i64gather_pd(x, idx, 8), _mm256_loadu_pd(x + i));
        acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), d), d, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        double d = x[nbr[i]] - x[i];
        s += w[i] * d * d;
    }
    return s;
}

}  // namespace avx2

#endif  // CYCLEWALK_X86

// -------------------------------------------------------------- dispatch ---

static Backend detect_backend() {
#if CYCLEWALK_X86
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Backend::avx2;
#endif
    return Backend::scalar;
}

static std::atomic<Backend> g_backend{detect_backend()};

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

bool avx2_available() { return detect_backend() == Backend::avx2; }

void force_backend(Backend b) {
    if (b == Backend::avx2 && !avx2_available()) b = Backend::scalar;
    g_backend.store(b, std::memory_order_relaxed);
}

#if CYCLEWALK_X86
#define CYCLEWALK_DISPATCH(fn, ...) \
    return active_backend() == Backend::avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__)
#else
#define CYCLEWALK_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

double dot(const double* x, const double* y, std::size_t n) { CYCLEWALK_DISPATCH(dot, x, y, n); }
double sum(const double* x, std::size_t n) { CYCLEWALK_DISPATCH(sum, x, n); }
double weighted_sq_sum(const double* w, const double* x, std::size_t n) {
    CYCLEWALK_DISPATCH(weighted_sq_sum, w, x, n);
}
double weighted_dot(const double* w, const double* x, const double* y, std::size_t n) {
    CYCLEWALK_DISPATCH(weighted_dot, w, x, y, n);
}
double max_abs(const double* x, std::size_t n) { CYCLEWALK_DISPATCH(max_abs, x, n); }
void axpy(double a, const double* x, double* y, std::size_t n) { CYCLEWALK_DISPATCH(axpy, a, x, y, n); }
void bicgstab_update_p(const double* r, double beta, double omega, const double* v,
                       double* p, std::size_t n) {
    CYCLEWALK_DISPATCH(bicgstab_update_p, r, beta, omega, v, p, n);
}
void stencil_apply(std::size_t n, int ndirs, const double* diag,
                   const double* const* cdir, const std::int64_t* const* nbr,
                   const double* x, double* y) {
    CYCLEWALK_DISPATCH(stencil_apply, n, ndirs, diag, cdir, nbr, x, y);
}
double gather_diff_sq(const double* w, const double* x, const std::int64_t* nbr, std::size_t n) {
    CYCLEWALK_DISPATCH(gather_diff_sq, w, x, nbr, n);
}

#undef CYCLEWALK_DISPATCH

}  // namespace cyclewalk::kern
