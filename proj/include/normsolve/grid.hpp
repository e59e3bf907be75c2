#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "normsolve/error.hpp"
#include "normsolve/tridiagonal.hpp"

namespace normsolve {

/// Surface measure of the unit sphere S^{N-1} in R^N.
inline double unit_sphere_area(int dim) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

/**
 * Cell-centered radial discretization of the ball B_R in R^N.
 *
 * Node i sits at r_i = (i + 1/2) h with h = R/n and owns the spherical shell
 * [i h, (i+1) h]; its weight is the exact shell volume. The Laplacian is the
 * finite-volume flux difference with a zero-flux face at r = 0 and a half-cell
 * Dirichlet face at r = R, so it is symmetric in the weighted inner product and
 * the Dirichlet form below is exactly <-Delta u, u>.
 */
class RadialGrid {
public:
    RadialGrid(int dim, double radius, std::size_t n)
        : dim_(dim), radius_(radius), n_(n), h_(radius / static_cast<double>(n)),
          omega_(unit_sphere_area(dim)), id_(next_id()) {
        nodes_.resize(n);
        weights_.resize(n);
        face_coeff_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double lo = static_cast<double>(i) * h_;
            const double hi = static_cast<double>(i + 1) * h_;
            nodes_[i] = (static_cast<double>(i) + 0.5) * h_;
            weights_[i] = omega_ * (std::pow(hi, dim) - std::pow(lo, dim)) / dim;
            face_coeff_[i] = omega_ * std::pow(hi, dim - 1) / h_;
        }
        // Last face is the boundary, a half cell away from the final node.
        face_coeff_[n - 1] *= 2.0;

        stiffness_.diag.assign(n, 0.0);
        stiffness_.lower.assign(n - 1, 0.0);
        stiffness_.upper.assign(n - 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            stiffness_.diag[i] += face_coeff_[i];
            if (i + 1 < n) {
                stiffness_.diag[i + 1] += face_coeff_[i];
                stiffness_.upper[i] = -face_coeff_[i];
                stiffness_.lower[i] = -face_coeff_[i];
            }
        }
        stiffness_solver_ = std::make_shared<SpdTridiagonalSolver>(stiffness_);
    }

    int dim() const { return dim_; }
    double radius() const { return radius_; }
    std::size_t size() const { return n_; }
    double spacing() const { return h_; }
    double sphere_area() const { return omega_; }
    std::uint64_t id() const { return id_; }

    /// Critical Sobolev exponent 2N/(N-2).
    double critical_exponent() const { return 2.0 * dim_ / (dim_ - 2.0); }

    std::span<const double> nodes() const { return nodes_; }
    std::span<const double> weights() const { return weights_; }

    /// Coefficient of the face to the right of node i (the boundary face for i = n-1).
    std::span<const double> face_coefficients() const { return face_coeff_; }

    /// Symmetric stiffness K = W (-Delta_h).
    const Tridiagonal& stiffness() const { return stiffness_; }
    const SpdTridiagonalSolver& stiffness_solver() const { return *stiffness_solver_; }

    double ball_volume() const { return omega_ * std::pow(radius_, dim_) / dim_; }

private:
    static std::uint64_t next_id() {
        static std::atomic<std::uint64_t> counter{1};
        return counter.fetch_add(1);
    }

    int dim_;
    double radius_;
    std::size_t n_;
    double h_;
    double omega_;
    std::uint64_t id_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<double> face_coeff_;
    Tridiagonal stiffness_;
    std::shared_ptr<const SpdTridiagonalSolver> stiffness_solver_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

inline GridPtr make_radial_grid(int dim, double radius, std::size_t n) {
    require(dim >= 3, ErrorKind::InvalidArgument, "dimension must be at least 3");
    require(radius > 0.0 && std::isfinite(radius), ErrorKind::InvalidArgument,
            "radius must be positive");
    require(n >= 16, ErrorKind::InvalidArgument, "at least 16 radial nodes are required");
    return std::make_shared<const RadialGrid>(dim, radius, n);
}

/// Grid function on a ball; the Dirichlet value at r = R is implicit.
struct Field {
    GridPtr grid;
    std::vector<double> values;

    Field() = default;
    explicit Field(GridPtr g) : grid(std::move(g)), values(grid->size(), 0.0) {}
    Field(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
        require(values.size() == grid->size(), ErrorKind::GridMismatch,
                "field length does not match its grid");
    }

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::span<const double> span() const { return values; }
    std::span<double> span() { return values; }
};

inline void check_same_grid(const Field& a, const Field& b) {
    require(a.grid && b.grid && a.grid->id() == b.grid->id(), ErrorKind::GridMismatch,
            "fields live on different grids");
}

inline void check_on_grid(const RadialGrid& g, const Field& f) {
    require(f.grid && f.grid->id() == g.id(), ErrorKind::GridMismatch,
            "field does not live on this grid");
}

template <class Fn>
Field make_field(const GridPtr& g, Fn&& fn) {
    Field f(g);
    const auto r = g->nodes();
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = fn(r[i]);
    return f;
}

inline bool all_finite(const Field& f) {
    for (double v : f.values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

// --- vector-space helpers -------------------------------------------------

/// y <- y + a x
inline void axpy(double a, const Field& x, Field& y) {
    check_same_grid(x, y);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

/// a x + b y
inline Field combine(double a, const Field& x, double b, const Field& y) {
    check_same_grid(x, y);
    Field out(x.grid);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i] + b * y[i];
    return out;
}

inline Field scaled(double a, const Field& x) {
    Field out(x.grid);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i];
    return out;
}

inline Field absolute(const Field& x) {
    Field out(x.grid);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(x[i]);
    return out;
}

/// Weighted L2 inner product.
inline double inner(const Field& a, const Field& b) {
    check_same_grid(a, b);
    const auto w = a.grid->weights();
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += w[i] * a[i] * b[i];
    return s;
}

inline double l2_norm(const Field& a) { return std::sqrt(inner(a, a)); }

inline double l2_distance(const Field& a, const Field& b) {
    check_same_grid(a, b);
    const auto w = a.grid->weights();
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += w[i] * d * d;
    }
    return std::sqrt(s);
}

// --- quadrature and operators ---------------------------------------------

/// sum_i w_i |f_i|^power, approximating the integral of |f|^power over the ball.
inline double integrate(const RadialGrid& g, const Field& f, double power) {
    check_on_grid(g, f);
    require(power >= 1.0, ErrorKind::InvalidArgument, "integration power must be >= 1");
    const auto w = g.weights();
    double s = 0.0;
    if (power == 1.0) {
        for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * std::abs(f[i]);
    } else if (power == 2.0) {
        for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i] * f[i];
    } else {
        for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * std::pow(std::abs(f[i]), power);
    }
    return s;
}

/// Differences across each face: u_i - u_{i+1}, with u_n = 0 on the boundary.
inline void face_jumps(const Field& f, std::span<double> jumps) {
    const std::size_t n = f.size();
    for (std::size_t i = 0; i + 1 < n; ++i) jumps[i] = f[i] - f[i + 1];
    jumps[n - 1] = f[n - 1];
}

/// Discrete Dirichlet form, i.e. the squared H^1_0 norm ||grad f||_2^2.
inline double dirichlet_form(const Field& f) {
    const auto a = f.grid->face_coefficients();
    const std::size_t n = f.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (i + 1 < n) ? f[i] - f[i + 1] : f[i];
        s += a[i] * d * d;
    }
    return s;
}

inline double dirichlet_form(const Field& f, const Field& g) {
    check_same_grid(f, g);
    const auto a = f.grid->face_coefficients();
    const std::size_t n = f.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double df = (i + 1 < n) ? f[i] - f[i + 1] : f[i];
        const double dg = (i + 1 < n) ? g[i] - g[i + 1] : g[i];
        s += a[i] * df * dg;
    }
    return s;
}

/// K f = W (-Delta_h f), evaluated in flux form to limit cancellation.
inline std::vector<double> stiffness_apply(const Field& f) {
    const auto a = f.grid->face_coefficients();
    const std::size_t n = f.size();
    std::vector<double> flux(n);
    face_jumps(f, flux);
    for (std::size_t i = 0; i < n; ++i) flux[i] *= a[i];
    std::vector<double> out(n);
    out[0] = flux[0];
    for (std::size_t i = 1; i < n; ++i) out[i] = flux[i] - flux[i - 1];
    return out;
}

/// Returns Delta_h f (the sign convention of the operator, not of -Delta).
inline Field apply_laplacian(const RadialGrid& g, const Field& f) {
    check_on_grid(g, f);
    const auto kf = stiffness_apply(f);
    const auto w = g.weights();
    Field out(f.grid);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = -kf[i] / w[i];
    return out;
}

/// Solves -Delta_h z = rhs with homogeneous Dirichlet data.
inline Field solve_dirichlet(const Field& rhs) {
    const auto w = rhs.grid->weights();
    Field z(rhs.grid);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = w[i] * rhs[i];
    rhs.grid->stiffness_solver().solve_in_place(z.span());
    return z;
}

/// H^{-1} norm of a residual given in stiffness space (b = W r): sqrt(b^T K^{-1} b).
/// This is the H^1_0 norm of the Riesz representative (-Delta_h)^{-1} r.
inline double dual_norm(const RadialGrid& g, std::span<const double> b) {
    std::vector<double> z(b.begin(), b.end());
    g.stiffness_solver().solve_in_place(z);
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) s += b[i] * z[i];
    return std::sqrt(std::max(s, 0.0));
}

/// Outward normal derivative u'(R) from the half-cell boundary face.
inline double boundary_derivative(const Field& f) {
    return -f[f.size() - 1] / (0.5 * f.grid->spacing());
}

// --- principal eigenpair --------------------------------------------------

struct EigenPair {
    double lambda1 = 0.0;
    Field phi1;
    int iterations = 0;
    double residual = 0.0;
};

/**
 * First Dirichlet eigenpair by inverse power iteration on the stiffness matrix.
 *
 * The unshifted LDL^T solve keeps componentwise accuracy near the origin, where the
 * weights are tiny; a Rayleigh shift makes the system indefinite and leaves noise there.
 */
inline EigenPair principal_eigenpair(const GridPtr& g, double tol = 1e-10, int max_iters = 400) {
    const std::size_t n = g->size();
    Field u = make_field(g, [R = g->radius()](double r) { return std::cos(0.5 * std::numbers::pi * r / R); });
    u = scaled(1.0 / l2_norm(u), u);
    const auto w = g->weights();
    const auto& solver = g->stiffness_solver();

    double lambda = dirichlet_form(u);
    double residual = 0.0;
    for (int it = 1; it <= max_iters; ++it) {
        std::vector<double> b(n);
        for (std::size_t i = 0; i < n; ++i) b[i] = w[i] * u[i];
        solver.solve_in_place(b);
        Field next(g, std::move(b));
        u = scaled(1.0 / l2_norm(next), next);
        lambda = dirichlet_form(u);

        // Dual-norm eigen-residual relative to sqrt(lambda) = ||u||_{H^1_0}.
        auto ku = stiffness_apply(u);
        for (std::size_t i = 0; i < n; ++i) ku[i] -= lambda * w[i] * u[i];
        residual = dual_norm(*g, ku) / std::sqrt(lambda);
        if (residual < tol) {
            for (std::size_t i = 0; i < n; ++i) {
                require(u[i] > 0.0, ErrorKind::NotConverged,
                        "principal eigenfunction lost positivity");
            }
            return EigenPair{lambda, std::move(u), it, residual};
        }
    }
    throw Error(ErrorKind::NotConverged,
                "principal eigenpair did not converge; residual " + std::to_string(residual));
}

}  // namespace normsolve
