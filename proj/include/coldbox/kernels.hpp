#pragma once

#include <cstddef>

/// Data-parallel primitives behind the LP tableau updates, residual
/// autocorrelation and condensed-prediction products. Each operation has a
/// scalar reference implementation (namespace ref) and, on x86-64, an AVX2
/// variant; the active backend is chosen once at startup from CPUID. On
/// other architectures the dispatcher resolves to the scalar reference.
///
/// The two backends are equivalence-tested against each other; FMA changes
/// round-off, so equality is up to a small relative tolerance, never bitwise.
namespace coldbox::kernels {

enum class Backend { scalar, avx2 };

Backend active_backend() noexcept;
const char* backend_name(Backend b) noexcept;

/// Test hook: force a backend. Returns false (and changes nothing) if the
/// requested backend is not compiled in or the CPU lacks it.
bool set_backend(Backend b) noexcept;

double dot(const double* a, const double* b, std::size_t n) noexcept;

/// y += a * x, the simplex row elimination workhorse.
void axpy(double a, const double* x, double* y, std::size_t n) noexcept;

double sum(const double* x, std::size_t n) noexcept;

namespace ref {
double dot(const double* a, const double* b, std::size_t n) noexcept;
void axpy(double a, const double* x, double* y, std::size_t n) noexcept;
double sum(const double* x, std::size_t n) noexcept;
} // namespace ref

#if defined(COLDBOX_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n) noexcept;
void axpy(double a, const double* x, double* y, std::size_t n) noexcept;
double sum(const double* x, std::size_t n) noexcept;
} // namespace avx2
#endif

} // namespace coldbox::kernels
