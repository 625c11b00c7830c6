#include "coldbox/kernels.hpp"

namespace coldbox::kernels {

namespace {

using DotFn = double (*)(const double*, const double*, std::size_t) noexcept;
using AxpyFn = void (*)(double, const double*, double*, std::size_t) noexcept;
using SumFn = double (*)(const double*, std::size_t) noexcept;

struct Table {
    Backend backend;
    DotFn dot;
    AxpyFn axpy;
    SumFn sum;
};

constexpr Table kScalar{Backend::scalar, &ref::dot, &ref::axpy, &ref::sum};

#if defined(COLDBOX_HAVE_AVX2)
constexpr Table kAvx2{Backend::avx2, &avx2::dot, &avx2::axpy, &avx2::sum};

bool cpu_has_avx2() noexcept {
#if defined(__GNUC__) || defined(__clang__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}
#endif

Table pick_default() noexcept {
#if defined(COLDBOX_HAVE_AVX2)
    if (cpu_has_avx2()) return kAvx2;
#endif
    return kScalar;
}

Table g_active = pick_default();

} // namespace

Backend active_backend() noexcept { return g_active.backend; }

const char* backend_name(Backend b) noexcept {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
    }
    return "?";
}

bool set_backend(Backend b) noexcept {
    if (b == Backend::scalar) {
        g_active = kScalar;
        return true;
    }
#if defined(COLDBOX_HAVE_AVX2)
    if (b == Backend::avx2 && cpu_has_avx2()) {
        g_active = kAvx2;
        return true;
    }
#endif
    return false;
}

double dot(const double* a, const double* b, std::size_t n) noexcept {
    return g_active.dot(a, b, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) noexcept {
    g_active.axpy(a, x, y, n);
}

double sum(const double* x, std::size_t n) noexcept { return g_active.sum(x, n); }

} // namespace coldbox::kernels
