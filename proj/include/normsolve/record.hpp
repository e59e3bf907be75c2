#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "normsolve/energy.hpp"
#include "normsolve/error.hpp"
#include "normsolve/grid.hpp"

namespace normsolve {

enum class SolutionKind { local_min, mountain_pass };

inline const char* to_string(SolutionKind k) {
    return k == SolutionKind::local_min ? "local_min" : "mountain_pass";
}

inline SolutionKind solution_kind_from_string(const std::string& s) {
    if (s == "local_min") return SolutionKind::local_min;
    if (s == "mountain_pass") return SolutionKind::mountain_pass;
    throw Error(ErrorKind::InvalidArgument, "unknown solution kind '" + s + "'");
}

struct SolutionRecord {
    Field u;
    double mu = 0.0;
    double exponent_p = 0.0;
    double lambda = 0.0;
    double energy = 0.0;
    double residual = 0.0;
    SolutionKind kind = SolutionKind::local_min;
    double grad_norm_sq = 0.0;
    double pohozaev_residual = 0.0;
    int iterations = 0;
    /// Energy after every accepted flow step (flow solves only).
    std::vector<double> energy_history;
    /// Last few accepted iterates when requested.
    std::vector<Field> tail;

    EnergyParams params() const { return EnergyParams{mu, exponent_p}; }
};

/**
 * Relative Pohozaev defect on a ball of radius R:
 * |2 lambda M - mu P (N - 2 - 2N/p) - omega R^N u'(R)^2| / (2 |lambda| M),
 * with M = ||u||_2^2 and P = ||u||_p^p. The middle term vanishes at the critical exponent.
 */
inline double pohozaev_relative(const Field& u, double lambda, const EnergyParams& params) {
    const auto& g = *u.grid;
    const double mass = integrate(g, u, 2.0);
    const double denom = 2.0 * std::abs(lambda) * mass;
    require(denom > 1e-14 * std::max(1.0, mass), ErrorKind::Singular,
            "degenerate Pohozaev normalization: lambda is zero");
    const int N = g.dim();
    double bulk = 2.0 * lambda * mass;
    const double defect = N - 2.0 - 2.0 * N / params.exponent_p;
    if (params.mu != 0.0 && std::abs(defect) > 1e-14) {
        bulk -= params.mu * defect * integrate(g, u, params.exponent_p);
    }
    const double du = boundary_derivative(u);
    const double flux = g.sphere_area() * std::pow(g.radius(), N) * du * du;
    return std::abs(bulk - flux) / denom;
}

/// Fills the derived fields of a record from (u, lambda).
inline void finalize_record(SolutionRecord& rec) {
    const auto params = rec.params();
    rec.energy = energy(rec.u, params);
    rec.grad_norm_sq = dirichlet_form(rec.u);
    rec.residual = gradient_report(rec.u, params).residual_norm;
    rec.pohozaev_residual =
        std::abs(rec.lambda) > 1e-12 ? pohozaev_relative(rec.u, rec.lambda, params) : NAN;
}

}  // namespace normsolve
