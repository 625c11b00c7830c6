#pragma once

#include <array>
#include <cstddef>

namespace coldbox {

/// State dimension never exceeds four across the model family, so the
/// matrix types are fixed-capacity and live on the stack. Storage is
/// compact row-major (stride = cols).
inline constexpr int kMaxState = 4;

struct Vec {
    int n = 0;
    std::array<double, kMaxState> v{};

    double& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }

    static Vec constant(int n, double value);
    static Vec zero(int n) { return constant(n, 0.0); }
};

struct Mat {
    int rows = 0;
    int cols = 0;
    std::array<double, kMaxState * kMaxState> a{};

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i * cols + j)]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i * cols + j)]; }

    static Mat zero(int rows, int cols);
    static Mat identity(int n);
};

Mat operator*(const Mat& lhs, const Mat& rhs);
Mat operator+(const Mat& lhs, const Mat& rhs);
Mat operator-(const Mat& lhs, const Mat& rhs);
Mat operator*(double s, const Mat& m);
Vec operator*(const Mat& m, const Vec& x);
Vec operator+(const Vec& a, const Vec& b);
Vec operator-(const Vec& a, const Vec& b);
Vec operator*(double s, const Vec& a);

Mat transpose(const Mat& m);

/// Gauss-Jordan with partial pivoting; throws NumericalError on (numerical)
/// singularity. Intended for the ≤4×4 covariance updates only.
Mat inverse(const Mat& m);

/// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, ascending.
/// Used for covariance positive-semidefiniteness checks.
std::array<double, kMaxState> symmetric_eigenvalues(const Mat& s);

/// Largest eigenvalue magnitude of a general (possibly non-symmetric)
/// matrix, via the characteristic polynomial. Exact companion machinery is
/// overkill at n ≤ 4; Durand-Kerner iteration on the monic polynomial
/// handles complex pairs that power iteration would miss.
double spectral_radius(const Mat& m);

} // namespace coldbox
