#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "normsolve/error.hpp"

namespace normsolve {

/// Tridiagonal matrix stored by diagonals: lower[i] = A(i+1, i), upper[i] = A(i, i+1).
struct Tridiagonal {
    std::vector<double> lower;
    std::vector<double> diag;
    std::vector<double> upper;

    std::size_t size() const { return diag.size(); }

    void multiply(std::span<const double> x, std::span<double> y) const {
        const std::size_t n = size();
        for (std::size_t i = 0; i < n; ++i) {
            double s = diag[i] * x[i];
            if (i > 0) s += lower[i - 1] * x[i - 1];
            if (i + 1 < n) s += upper[i] * x[i + 1];
            y[i] = s;
        }
    }
};

/// Cholesky-free LDL^T factorization for symmetric positive definite tridiagonal
/// matrices (the Dirichlet stiffness). Reused across many right-hand sides.
class SpdTridiagonalSolver {
public:
    explicit SpdTridiagonalSolver(const Tridiagonal& a) : off_(a.upper), d_(a.size()) {
        const std::size_t n = a.size();
        for (std::size_t i = 0; i < n; ++i) {
            double di = a.diag[i];
            if (i > 0) di -= off_[i - 1] * off_[i - 1] / d_[i - 1];
            require(di > 0.0, ErrorKind::Singular, "stiffness matrix is not positive definite");
            d_[i] = di;
        }
    }

    void solve_in_place(std::span<double> b) const {
        const std::size_t n = d_.size();
        for (std::size_t i = 1; i < n; ++i) b[i] -= off_[i - 1] / d_[i - 1] * b[i - 1];
        b[n - 1] /= d_[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) b[i] = (b[i] - off_[i] * b[i + 1]) / d_[i];
    }

private:
    std::vector<double> off_;
    std::vector<double> d_;
};

/// Gaussian elimination with partial pivoting (the LAPACK gtsv scheme); handles the
/// indefinite Jacobians met at mountain-pass critical points.
class PivotedTridiagonalSolver {
public:
    explicit PivotedTridiagonalSolver(const Tridiagonal& a)
        : dl_(a.lower), d_(a.diag), du_(a.upper), du2_(a.size(), 0.0), swapped_(a.size(), false) {
        const std::size_t n = d_.size();
        double scale = 0.0;
        for (double v : d_) scale = std::max(scale, std::abs(v));
        for (double v : du_) scale = std::max(scale, std::abs(v));
        for (double v : dl_) scale = std::max(scale, std::abs(v));
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (std::abs(d_[i]) >= std::abs(dl_[i])) {
                require(d_[i] != 0.0, ErrorKind::Singular, "tridiagonal pivot is zero");
                const double fact = dl_[i] / d_[i];
                dl_[i] = fact;
                d_[i + 1] -= fact * du_[i];
            } else {
                swapped_[i] = true;
                const double fact = d_[i] / dl_[i];
                d_[i] = dl_[i];
                dl_[i] = fact;
                const double temp = du_[i];
                du_[i] = d_[i + 1];
                d_[i + 1] = temp - fact * d_[i + 1];
                if (i + 2 < n) {
                    du2_[i] = du_[i + 1];
                    du_[i + 1] = -fact * du_[i + 1];
                }
            }
        }
        min_pivot_ = scale;
        for (double v : d_) min_pivot_ = std::min(min_pivot_, std::abs(v));
        scale_ = scale;
        require(min_pivot_ > 0.0, ErrorKind::Singular, "tridiagonal matrix is singular");
    }

    /// Smallest |pivot| relative to the largest matrix entry; a cheap conditioning proxy.
    double pivot_ratio() const { return min_pivot_ / scale_; }

    void solve_in_place(std::span<double> b) const {
        const std::size_t n = d_.size();
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (!swapped_[i]) {
                b[i + 1] -= dl_[i] * b[i];
            } else {
                const double temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - dl_[i] * b[i + 1];
            }
        }
        b[n - 1] /= d_[n - 1];
        if (n > 1) b[n - 2] = (b[n - 2] - du_[n - 2] * b[n - 1]) / d_[n - 2];
        for (std::size_t i = n < 2 ? 0 : n - 2; i-- > 0;) {
            b[i] = (b[i] - du_[i] * b[i + 1] - du2_[i] * b[i + 2]) / d_[i];
        }
    }

private:
    std::vector<double> dl_;
    std::vector<double> d_;
    std::vector<double> du_;
    std::vector<double> du2_;
    std::vector<bool> swapped_;
    double min_pivot_ = 0.0;
    double scale_ = 1.0;
};

}  // namespace normsolve
