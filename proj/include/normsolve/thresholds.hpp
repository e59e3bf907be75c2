#pragma once

#include <cmath>
#include <optional>

#include "normsolve/bubbles.hpp"
#include "normsolve/energy.hpp"
#include "normsolve/error.hpp"
#include "normsolve/grid.hpp"

namespace normsolve {

/// ||grad u||^2 ceiling S^{N/2} mu^{1 - N/2} of the trapping set.
inline double alpha_bar(double S, double mu, int dim) {
    require(mu > 0.0, ErrorKind::InvalidArgument, "mu must be positive");
    return std::pow(S, 0.5 * dim) * std::pow(mu, 1.0 - 0.5 * dim);
}

/// Energy quantum (1/N) S^{N/2} mu^{1 - N/2}.
inline double mp_quantum(double S, double mu, int dim) { return alpha_bar(S, mu, dim) / dim; }

struct FmaxResult {
    double s_bar = 0.0;
    double value = 0.0;
};

/// Maximum of s -> A s / 2 - B s^{2*/2} / 2* over s > 0.
inline FmaxResult fmax(double A, double B, int dim) {
    require(A > 0.0 && B > 0.0, ErrorKind::InvalidArgument, "A and B must be positive");
    require(dim >= 3, ErrorKind::InvalidArgument, "dimension must be at least 3");
    const double k = 0.5 * dim - 1.0;
    return FmaxResult{std::pow(A / B, k), std::pow(A, 0.5 * dim) / (dim * std::pow(B, k))};
}

struct ThresholdSet {
    double S = 0.0;
    double lambda1 = 0.0;
    int dim = 3;
    double mu_star = 0.0;
    double rho_star = 0.0;
    std::optional<double> lambda1_inner_ball;
};

inline ThresholdSet make_thresholds(double S, double lambda1, int dim,
                                    std::optional<double> lambda1_inner = std::nullopt) {
    require(S > 0.0 && lambda1 > 0.0, ErrorKind::InvalidArgument,
            "S and lambda1 must be positive");
    require(dim >= 3, ErrorKind::InvalidArgument, "dimension must be at least 3");
    const double base = 2.0 * std::pow(S, 0.5 * dim) / (dim * lambda1);
    ThresholdSet t;
    t.S = S;
    t.lambda1 = lambda1;
    t.dim = dim;
    t.mu_star = std::pow(base, 2.0 / (dim - 2.0));
    t.rho_star = std::sqrt(base);
    t.lambda1_inner_ball = lambda1_inner;
    return t;
}

/// Thresholds of the ball the grid discretizes; the ball is its own inner ball.
inline ThresholdSet make_thresholds(const GridPtr& g, double lambda1) {
    return make_thresholds(sobolev_constant(g->dim()), lambda1, g->dim(), lambda1);
}

// --- upper level bound -----------------------------------------------------

/// Domain of h: mu > 0, and mu < 1 for N = 4 where |ln mu| vanishes at 1.
inline bool h_defined(double mu, int dim) { return mu > 0.0 && (dim != 4 || mu < 1.0); }

/// Remainder h(mu) of the upper bound.
inline double h_term(double mu, int dim, double C, std::optional<double> lambda1_inner) {
    require(h_defined(mu, dim), ErrorKind::InvalidArgument,
            dim == 4 ? "mu must lie in (0, 1) for N = 4" : "mu must be positive");
    require(C >= 0.0, ErrorKind::InvalidArgument, "C must be nonnegative");
    if (dim == 3) {
        require(lambda1_inner.has_value(), ErrorKind::InvalidArgument,
                "N = 3 bound needs lambda1 of the inner ball");
        return 0.25 * *lambda1_inner + C * std::sqrt(mu);
    }
    if (dim == 4) return C / std::abs(std::log(mu));
    return C * std::pow(mu, 0.25 * (dim - 2.0) * (dim - 4.0));
}

/// d h / d mu.
inline double h_term_derivative(double mu, int dim, double C) {
    if (dim == 3) return 0.5 * C / std::sqrt(mu);
    if (dim == 4) {
        const double l = std::log(mu);
        return C / (mu * l * l);
    }
    const double e = 0.25 * (dim - 2.0) * (dim - 4.0);
    return C * e * std::pow(mu, e - 1.0);
}

inline double g_upper(double mu, int dim, double C, double S,
                      std::optional<double> lambda1_inner = std::nullopt) {
    return mp_quantum(S, mu, dim) + h_term(mu, dim, C, lambda1_inner);
}

inline double g_upper(double mu, const ThresholdSet& t, double C) {
    return g_upper(mu, t.dim, C, t.S, t.lambda1_inner_ball);
}

inline double g_upper_derivative(double mu, const ThresholdSet& t, double C) {
    const int N = t.dim;
    const double dq = (1.0 - 0.5 * N) * mp_quantum(t.S, mu, N) / mu;
    return dq + h_term_derivative(mu, N, C);
}

// --- classification ---------------------------------------------------------

enum class Region { inside_B, on_U, outside };

inline const char* to_string(Region r) {
    switch (r) {
        case Region::inside_B: return "inside_B";
        case Region::on_U: return "on_U";
        case Region::outside: return "outside";
    }
    return "unknown";
}

inline Region classify_level(double grad_norm_sq, double alpha) {
    if (std::abs(grad_norm_sq - alpha) <= 1e-8 * alpha) return Region::on_U;
    return grad_norm_sq < alpha ? Region::inside_B : Region::outside;
}

inline Region classify(const Field& u, const EnergyParams& params, const ThresholdSet& t) {
    require_unit_mass(u);
    return classify_level(dirichlet_form(u), alpha_bar(t.S, params.mu, t.dim));
}

// --- change of variables ----------------------------------------------------

/// mu = rho^{2* - 2} = rho^{4/(N-2)}.
inline double mu_from_rho(double rho, int dim) {
    require(rho > 0.0, ErrorKind::InvalidArgument, "rho must be positive");
    return std::pow(rho, 4.0 / (dim - 2.0));
}

inline double rho_from_mu(double mu, int dim) {
    require(mu > 0.0, ErrorKind::InvalidArgument, "mu must be positive");
    return std::pow(mu, 0.25 * (dim - 2.0));
}

/// U = rho u solves the mass-rho problem with the same lambda.
inline Field rescale_solution(const Field& u, double rho) { return scaled(rho, u); }

inline Field unscale_solution(const Field& U, double rho) { return scaled(1.0 / rho, U); }

/// Residual of -Delta U = lambda U + |U|^{2*-2} U with ||U||_2 = rho, in the H^{-1} norm.
inline double unscaled_residual(const Field& U, double lambda) {
    const int N = U.grid->dim();
    return pair_residual(U, lambda, make_energy_params(N, 1.0));
}

}  // namespace normsolve
