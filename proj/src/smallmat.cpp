#include "coldbox/smallmat.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "coldbox/errors.hpp"

namespace coldbox {

Vec Vec::constant(int n, double value) {
    Vec out;
    out.n = n;
    for (int i = 0; i < n; ++i) out[i] = value;
    return out;
}

Mat Mat::zero(int rows, int cols) {
    Mat out;
    out.rows = rows;
    out.cols = cols;
    return out;
}

Mat Mat::identity(int n) {
    Mat out = zero(n, n);
    for (int i = 0; i < n; ++i) out(i, i) = 1.0;
    return out;
}

Mat operator*(const Mat& lhs, const Mat& rhs) {
    Mat out = Mat::zero(lhs.rows, rhs.cols);
    for (int i = 0; i < lhs.rows; ++i) {
        for (int k = 0; k < lhs.cols; ++k) {
            const double l = lhs(i, k);
            if (l == 0.0) continue;
            for (int j = 0; j < rhs.cols; ++j) out(i, j) += l * rhs(k, j);
        }
    }
    return out;
}

Mat operator+(const Mat& lhs, const Mat& rhs) {
    Mat out = lhs;
    for (int i = 0; i < lhs.rows * lhs.cols; ++i)
        out.a[static_cast<std::size_t>(i)] += rhs.a[static_cast<std::size_t>(i)];
    return out;
}

Mat operator-(const Mat& lhs, const Mat& rhs) {
    Mat out = lhs;
    for (int i = 0; i < lhs.rows * lhs.cols; ++i)
        out.a[static_cast<std::size_t>(i)] -= rhs.a[static_cast<std::size_t>(i)];
    return out;
}

Mat operator*(double s, const Mat& m) {
    Mat out = m;
    for (auto& x : out.a) x *= s;
    return out;
}

Vec operator*(const Mat& m, const Vec& x) {
    Vec out = Vec::zero(m.rows);
    for (int i = 0; i < m.rows; ++i) {
        double acc = 0.0;
        for (int j = 0; j < m.cols; ++j) acc += m(i, j) * x[j];
        out[i] = acc;
    }
    return out;
}

Vec operator+(const Vec& a, const Vec& b) {
    Vec out = a;
    for (int i = 0; i < a.n; ++i) out[i] += b[i];
    return out;
}

Vec operator-(const Vec& a, const Vec& b) {
    Vec out = a;
    for (int i = 0; i < a.n; ++i) out[i] -= b[i];
    return out;
}

Vec operator*(double s, const Vec& a) {
    Vec out = a;
    for (int i = 0; i < a.n; ++i) out[i] *= s;
    return out;
}

Mat transpose(const Mat& m) {
    Mat out = Mat::zero(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) out(j, i) = m(i, j);
    return out;
}

Mat inverse(const Mat& m) {
    if (m.rows != m.cols) throw NumericalError("inverse: matrix not square");
    const int n = m.rows;
    // Augmented [work | identity], eliminated in place.
    double work[kMaxState][2 * kMaxState] = {};
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) work[i][j] = m(i, j);
        work[i][n + i] = 1.0;
    }
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(work[r][col]) > std::abs(work[pivot][col])) pivot = r;
        if (std::abs(work[pivot][col]) == 0.0 || !std::isfinite(work[pivot][col]))
            throw NumericalError("inverse: singular matrix");
        if (pivot != col)
            for (int j = 0; j < 2 * n; ++j) std::swap(work[pivot][j], work[col][j]);
        const double inv_p = 1.0 / work[col][col];
        for (int j = 0; j < 2 * n; ++j) work[col][j] *= inv_p;
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = work[r][col];
            if (f == 0.0) continue;
            for (int j = 0; j < 2 * n; ++j) work[r][j] -= f * work[col][j];
        }
    }
    Mat out = Mat::zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(i, j) = work[i][n + j];
    return out;
}

std::array<double, kMaxState> symmetric_eigenvalues(const Mat& s) {
    const int n = s.rows;
    double a[kMaxState][kMaxState];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a[i][j] = 0.5 * (s(i, j) + s(j, i));

    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - sn * akq;
                    a[k][q] = sn * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - sn * aqk;
                    a[q][k] = sn * apk + c * aqk;
                }
            }
        }
    }
    std::array<double, kMaxState> eig{};
    for (int i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = a[i][i];
    std::sort(eig.begin(), eig.begin() + n);
    return eig;
}

double spectral_radius(const Mat& m) {
    if (m.rows != m.cols) throw NumericalError("spectral_radius: matrix not square");
    const int n = m.rows;

    // Characteristic polynomial via Faddeev-LeVerrier:
    // p(x) = x^n + c[1] x^(n-1) + ... + c[n].
    double c[kMaxState + 1] = {};
    c[0] = 1.0;
    Mat mk = Mat::zero(n, n); // running M_k, starts at 0
    for (int k = 1; k <= n; ++k) {
        for (int i = 0; i < n; ++i) mk(i, i) += c[k - 1];
        mk = m * mk;
        double tr = 0.0;
        for (int i = 0; i < n; ++i) tr += mk(i, i);
        c[k] = -tr / k;
    }

    // Durand-Kerner on the monic polynomial; seeds on a non-real spiral so
    // the iteration does not start on a symmetry axis of the root set.
    using C = std::complex<double>;
    std::array<C, kMaxState> roots{};
    const C seed(0.4, 0.9);
    C powz(1.0, 0.0);
    for (int i = 0; i < n; ++i) {
        powz *= seed;
        roots[static_cast<std::size_t>(i)] = powz;
    }
    auto poly = [&](C x) {
        C acc(1.0, 0.0);
        for (int k = 1; k <= n; ++k) acc = acc * x + c[k];
        return acc;
    };
    for (int iter = 0; iter < 256; ++iter) {
        double moved = 0.0;
        for (int i = 0; i < n; ++i) {
            C denom(1.0, 0.0);
            for (int j = 0; j < n; ++j)
                if (j != i) denom *= roots[static_cast<std::size_t>(i)] - roots[static_cast<std::size_t>(j)];
            if (std::abs(denom) == 0.0) denom = C(1e-30, 0.0);
            const C delta = poly(roots[static_cast<std::size_t>(i)]) / denom;
            roots[static_cast<std::size_t>(i)] -= delta;
            moved = std::max(moved, std::abs(delta));
        }
        if (moved < 1e-14) break;
    }

    double radius = 0.0;
    for (int i = 0; i < n; ++i)
        radius = std::max(radius, std::abs(roots[static_cast<std::size_t>(i)]));
    if (!std::isfinite(radius)) throw NumericalError("spectral_radius: iteration diverged");
    return radius;
}

} // namespace coldbox
