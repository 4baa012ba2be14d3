#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace delib::linalg {

/// LU factorization with partial pivoting of a dense row-major matrix.
/// The tables in this project are small (a few hundred rows), so a plain
/// dense solver is all that is needed.
struct LuFactor {
    int n = 0;
    std::vector<double> a;   // packed L\U, row-major
    std::vector<int> piv;    // row swaps applied during elimination
};

inline LuFactor lu_factor(std::vector<double> a, int n) {
    if (static_cast<std::size_t>(n) * n != a.size())
        throw std::invalid_argument("lu_factor: matrix is not n-by-n");
    LuFactor f;
    f.n = n;
    f.piv.resize(n);
    for (int k = 0; k < n; ++k) {
        int p = k;
        double best = std::fabs(a[static_cast<std::size_t>(k) * n + k]);
        for (int i = k + 1; i < n; ++i) {
            double v = std::fabs(a[static_cast<std::size_t>(i) * n + k]);
            if (v > best) { best = v; p = i; }
        }
        if (best == 0.0) throw std::runtime_error("lu_factor: singular matrix");
        f.piv[k] = p;
        if (p != k) {
            for (int j = 0; j < n; ++j)
                std::swap(a[static_cast<std::size_t>(k) * n + j],
                          a[static_cast<std::size_t>(p) * n + j]);
        }
        const double pivot = a[static_cast<std::size_t>(k) * n + k];
        for (int i = k + 1; i < n; ++i) {
            double* ri = &a[static_cast<std::size_t>(i) * n];
            const double* rk = &a[static_cast<std::size_t>(k) * n];
            double m = ri[k] / pivot;
            ri[k] = m;
            if (m != 0.0)
                for (int j = k + 1; j < n; ++j) ri[j] -= m * rk[j];
        }
    }
    f.a = std::move(a);
    return f;
}

inline void lu_solve_inplace(const LuFactor& f, std::vector<double>& b) {
    const int n = f.n;
    if (static_cast<int>(b.size()) != n)
        throw std::invalid_argument("lu_solve: size mismatch");
    for (int k = 0; k < n; ++k)
        if (f.piv[k] != k) std::swap(b[k], b[f.piv[k]]);
    // forward
    for (int i = 1; i < n; ++i) {
        const double* ri = &f.a[static_cast<std::size_t>(i) * n];
        double s = b[i];
        for (int j = 0; j < i; ++j) s -= ri[j] * b[j];
        b[i] = s;
    }
    // backward
    for (int i = n - 1; i >= 0; --i) {
        const double* ri = &f.a[static_cast<std::size_t>(i) * n];
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= ri[j] * b[j];
        b[i] = s / ri[i];
    }
}

/// One-shot solve of A x = b.
inline std::vector<double> solve(std::vector<double> a, int n, std::vector<double> b) {
    LuFactor f = lu_factor(std::move(a), n);
    lu_solve_inplace(f, b);
    return b;
}

}  // namespace delib::linalg
