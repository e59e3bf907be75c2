#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "normsolve/error.hpp"

namespace normsolve {

/// General band matrix with kl sub- and ku super-diagonals, factored by LU with
/// partial pivoting in LAPACK band layout (extra kl rows hold the fill-in).
class BandedLU {
public:
    BandedLU(std::size_t n, std::size_t kl, std::size_t ku)
        : n_(n), kl_(kl), ku_(ku), kv_(kl + ku), ab_((2 * kl + ku + 1) * n, 0.0), ipiv_(n) {}

    std::size_t size() const { return n_; }

    /// Adds v to entry (r, c); |r - c| must respect the band.
    void add(std::size_t r, std::size_t c, double v) { at(r, c) += v; }

    void factor() {
        double pmax = 0.0, pmin = INFINITY;
        std::size_t ju = 0;
        for (std::size_t j = 0; j < n_; ++j) {
            const std::size_t km = std::min(kl_, n_ - 1 - j);
            std::size_t jp = 0;
            double best = std::abs(at(j, j));
            for (std::size_t i = 1; i <= km; ++i) {
                const double v = std::abs(at(j + i, j));
                if (v > best) {
                    best = v;
                    jp = i;
                }
            }
            ipiv_[j] = j + jp;
            require(best > 0.0 && std::isfinite(best), ErrorKind::Singular,
                    "banded matrix is singular");
            ju = std::max(ju, std::min(j + ku_ + jp, n_ - 1));
            if (jp != 0) {
                for (std::size_t c = j; c <= ju; ++c) std::swap(at(j, c), at(j + jp, c));
            }
            const double piv = at(j, j);
            pmax = std::max(pmax, std::abs(piv));
            pmin = std::min(pmin, std::abs(piv));
            for (std::size_t i = 1; i <= km; ++i) at(j + i, j) /= piv;
            for (std::size_t c = j + 1; c <= ju; ++c) {
                const double ujc = at(j, c);
                if (ujc == 0.0) continue;
                for (std::size_t i = 1; i <= km; ++i) at(j + i, c) -= at(j + i, j) * ujc;
            }
        }
        pivot_ratio_ = pmin / pmax;
    }

    void solve_in_place(std::span<double> b) const {
        for (std::size_t j = 0; j + 1 < n_; ++j) {
            const std::size_t km = std::min(kl_, n_ - 1 - j);
            if (ipiv_[j] != j) std::swap(b[j], b[ipiv_[j]]);
            for (std::size_t i = 1; i <= km; ++i) b[j + i] -= at(j + i, j) * b[j];
        }
        for (std::size_t jj = n_; jj-- > 0;) {
            b[jj] /= at(jj, jj);
            const std::size_t lo = jj > kv_ ? jj - kv_ : 0;
            for (std::size_t i = lo; i < jj; ++i) b[i] -= at(i, jj) * b[jj];
        }
    }

    /// Smallest over largest pivot magnitude of U; a crude reciprocal condition estimate.
    double pivot_ratio() const { return pivot_ratio_; }

private:
    double& at(std::size_t r, std::size_t c) { return ab_[(kv_ + r - c) * n_ + c]; }
    double at(std::size_t r, std::size_t c) const { return ab_[(kv_ + r - c) * n_ + c]; }

    std::size_t n_, kl_, ku_, kv_;
    std::vector<double> ab_;
    std::vector<std::size_t> ipiv_;
    double pivot_ratio_ = 0.0;
};

}  // namespace normsolve
