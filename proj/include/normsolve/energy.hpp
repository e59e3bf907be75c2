#pragma once

#include <cmath>
#include <vector>

#include "normsolve/error.hpp"
#include "normsolve/grid.hpp"

namespace normsolve {

/// Strength mu and exponent p of the focusing term. mu = 0 is the linear mode.
struct EnergyParams {
    double mu = 0.0;
    double exponent_p = 0.0;
};

/// Validated parameters; p <= 0 selects the critical exponent 2N/(N-2).
inline EnergyParams make_energy_params(int dim, double mu, double p = 0.0) {
    require(dim >= 3, ErrorKind::InvalidArgument, "dimension must be at least 3");
    const double crit = 2.0 * dim / (dim - 2.0);
    if (p <= 0.0) p = crit;
    require(std::isfinite(mu) && mu >= 0.0, ErrorKind::InvalidArgument,
            "mu must be nonnegative");
    require(p > 2.0 + 4.0 / dim && p <= crit * (1.0 + 1e-15), ErrorKind::InvalidArgument,
            "exponent must lie in (2 + 4/N, 2N/(N-2)]");
    return EnergyParams{mu, p};
}

inline EnergyParams linear_mode(int dim) { return make_energy_params(dim, 0.0); }

struct GradientReport {
    Field free_grad;
    Field tangential_grad;
    double multiplier = 0.0;
    double residual_norm = 0.0;
};

inline void require_unit_mass(const Field& u, double tol = 1e-8) {
    require(std::abs(l2_norm(u) - 1.0) <= tol, ErrorKind::InvalidArgument,
            "field is not on the unit mass sphere");
}

inline double power_integral(const Field& u, double p) {
    return integrate(*u.grid, u, p);
}

inline double energy(const Field& u, const EnergyParams& params) {
    const double d = dirichlet_form(u);
    if (params.mu == 0.0) return 0.5 * d;
    return 0.5 * d - params.mu / params.exponent_p * power_integral(u, params.exponent_p);
}

inline double multiplier(const Field& u, const EnergyParams& params) {
    require_unit_mass(u);
    const double d = dirichlet_form(u);
    if (params.mu == 0.0) return d;
    return d - params.mu * power_integral(u, params.exponent_p);
}

/// Action gradient in stiffness space: K u - W (lambda u + mu |u|^{p-2} u).
inline std::vector<double> weighted_residual(const Field& u, double lambda,
                                             const EnergyParams& params) {
    auto b = stiffness_apply(u);
    const auto w = u.grid->weights();
    const double q = params.exponent_p - 2.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        double s = lambda * u[i];
        if (params.mu != 0.0) s += params.mu * std::pow(std::abs(u[i]), q) * u[i];
        b[i] -= w[i] * s;
    }
    return b;
}

/// L^2 representative -Delta u - lambda u - mu |u|^{p-2} u.
inline Field free_gradient(const Field& u, double lambda, const EnergyParams& params) {
    auto b = weighted_residual(u, lambda, params);
    const auto w = u.grid->weights();
    for (std::size_t i = 0; i < b.size(); ++i) b[i] /= w[i];
    return Field(u.grid, std::move(b));
}

/// H^1_0 representative (-Delta)^{-1} applied to the free gradient.
inline Field preconditioned_gradient(const Field& u, double lambda, const EnergyParams& params) {
    auto b = weighted_residual(u, lambda, params);
    u.grid->stiffness_solver().solve_in_place(b);
    for (double v : b) {
        require(std::isfinite(v), ErrorKind::Singular, "preconditioner solve failed");
    }
    return Field(u.grid, std::move(b));
}

inline Field tangent_project(const Field& g, const Field& u) {
    check_same_grid(g, u);
    const double c = inner(g, u);
    return combine(1.0, g, -c, u);
}

inline Field retract(const Field& u) {
    const double nrm = l2_norm(u);
    require(nrm > 0.0 && std::isfinite(nrm), ErrorKind::InvalidArgument,
            "cannot retract the zero field");
    return scaled(1.0 / nrm, u);
}

inline GradientReport gradient_report(const Field& u, const EnergyParams& params) {
    GradientReport rep;
    rep.multiplier = multiplier(u, params);
    rep.free_grad = free_gradient(u, rep.multiplier, params);
    rep.tangential_grad =
        tangent_project(preconditioned_gradient(u, rep.multiplier, params), u);
    rep.residual_norm = std::sqrt(dirichlet_form(rep.tangential_grad));
    return rep;
}

/**
 * Riemannian gradient on the mass sphere for the H^1_0 metric: the Riesz representative of the
 * energy differential projected H^1_0-orthogonally onto {v : <v, u> = 0}. It does not depend on
 * the multiplier.
 */
inline Field sobolev_gradient(const Field& u, const EnergyParams& params) {
    const auto& g = *u.grid;
    auto z = weighted_residual(u, 0.0, params);
    g.stiffness_solver().solve_in_place(z);
    std::vector<double> y(u.size());
    const auto w = g.weights();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = w[i] * u[i];
    g.stiffness_solver().solve_in_place(y);
    Field zf(u.grid, std::move(z)), yf(u.grid, std::move(y));
    const double c = inner(zf, u) / inner(yf, u);
    require(std::isfinite(c), ErrorKind::Singular, "preconditioner solve failed");
    return combine(1.0, zf, -c, yf);
}

/// H^{-1} norm of the action gradient for an arbitrary (u, lambda) pair.
inline double pair_residual(const Field& u, double lambda, const EnergyParams& params) {
    return dual_norm(*u.grid, weighted_residual(u, lambda, params));
}

}  // namespace normsolve
