#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "normsolve/banded.hpp"
#include "normsolve/energy.hpp"
#include "normsolve/error.hpp"
#include "normsolve/grid.hpp"
#include "normsolve/record.hpp"
#include "normsolve/thresholds.hpp"

namespace normsolve {

struct FlowOptions {
    double step = 1.0;
    double tol = 1e-8;
    int max_iters = 20000;
    /// Ceiling for ||grad u||^2; iterates must stay strictly below it.
    double trust_alpha = std::numeric_limits<double>::infinity();
    /// Number of trailing iterates kept in the record.
    int keep_tail = 0;
};

inline void validate(const FlowOptions& o) {
    require(o.step > 0.0 && o.tol > 0.0 && o.max_iters > 0 && o.trust_alpha > 0.0,
            ErrorKind::InvalidArgument, "flow options must be positive");
}

/**
 * Preconditioned projected gradient flow on the unit mass sphere.
 *
 * Each step moves along minus the H^1_0 tangential gradient, replaces the iterate by its
 * absolute value, renormalizes, and backtracks until the energy does not increase.
 * Steps that would reach the trust ceiling are halved; 30 such halvings without an
 * intervening contact-free step raise a Boundary error.
 */
inline SolutionRecord solve_local_min(const EnergyParams& params, const Field& init,
                                      const FlowOptions& opts) {
    validate(opts);
    require(all_finite(init), ErrorKind::InvalidArgument, "initial field is not finite");
    Field u = retract(absolute(init));
    require(dirichlet_form(u) < opts.trust_alpha, ErrorKind::InvalidArgument,
            "initial field lies outside the trust ceiling");

    const double eps = std::numeric_limits<double>::epsilon();
    const double max_step = 64.0 * opts.step;
    double step = opts.step;
    double e = energy(u, params);
    int boundary_streak = 0;

    SolutionRecord rec;
    rec.mu = params.mu;
    rec.exponent_p = params.exponent_p;
    rec.kind = SolutionKind::local_min;
    rec.energy_history.push_back(e);

    for (int it = 0; it < opts.max_iters; ++it) {
        const auto rep = gradient_report(u, params);
        if (rep.residual_norm < opts.tol) {
            rec.u = std::move(u);
            rec.lambda = rep.multiplier;
            rec.iterations = it;
            finalize_record(rec);
            return rec;
        }
        const double slope = -inner(rep.free_grad, rep.tangential_grad);
        const double slack = 8.0 * eps * std::max(1.0, std::abs(e));

        bool touched = false;
        bool accepted = false;
        while (!accepted) {
            require(boundary_streak < 30, ErrorKind::Boundary,
                    "iterate persistently hits the trust ceiling");
            require(step > 1e-14 * opts.step, ErrorKind::NotConverged,
                    "line search stalled at residual " + std::to_string(rep.residual_norm));
            Field trial = combine(1.0, u, -step, rep.tangential_grad);
            trial = retract(absolute(trial));
            if (dirichlet_form(trial) >= opts.trust_alpha) {
                touched = true;
                ++boundary_streak;
                step *= 0.5;
                continue;
            }
            const double et = energy(trial, params);
            if (et <= e + 1e-4 * step * slope + slack && et <= e + slack) {
                u = std::move(trial);
                e = et;
                accepted = true;
                if (!touched) boundary_streak = 0;
                step = std::min(2.0 * step, max_step);
            } else {
                step *= 0.5;
            }
        }
        rec.energy_history.push_back(e);
        if (opts.keep_tail > 0) {
            rec.tail.push_back(u);
            if (rec.tail.size() > std::size_t(opts.keep_tail)) rec.tail.erase(rec.tail.begin());
        }
    }
    throw Error(ErrorKind::NotConverged, "gradient flow exceeded the iteration cap");
}

/// Flow with the trust ceiling set to alpha_bar(mu).
inline SolutionRecord solve_local_min(const EnergyParams& params, const ThresholdSet& t,
                                      const Field& init, FlowOptions opts = {}) {
    if (params.mu > 0.0) opts.trust_alpha = alpha_bar(t.S, params.mu, t.dim);
    return solve_local_min(params, init, opts);
}

struct NewtonOptions {
    double tol = 1e-11;
    int max_steps = 25;
};

struct NewtonTrace {
    std::vector<double> residuals;
    std::vector<double> corrections;
    double condition_estimate = 0.0;
};

namespace detail {

/**
 * Bordered Newton step for F(u, lambda) = (K u - W(lambda u + mu |u|^{p-2} u), (|u|^2 - 1)/2).
 * The mass row is carried as a running sum s_i and lambda as a chain of equal copies l_i,
 * which turns the arrow-shaped system into a band matrix with bandwidth 3.
 */
inline double bordered_step(const Field& u, double lambda, const EnergyParams& params,
                            std::vector<double>& du, double& dlambda) {
    const auto& g = *u.grid;
    const std::size_t n = u.size();
    const auto& K = g.stiffness();
    const auto w = g.weights();
    const double q = params.exponent_p - 2.0;
    const auto f1 = weighted_residual(u, lambda, params);
    const double f2 = 0.5 * (integrate(g, u, 2.0) - 1.0);

    BandedLU A(3 * n, 3, 3);
    std::vector<double> rhs(3 * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ru = 3 * i, rs = 3 * i + 1, rl = 3 * i + 2;
        double dfdu = lambda;
        if (params.mu != 0.0) dfdu += params.mu * (q + 1.0) * std::pow(std::abs(u[i]), q);
        // Momentum rows divided by w_i so pivots are not dominated by the weight scaling.
        const double iw = 1.0 / w[i];
        A.add(ru, ru, K.diag[i] * iw - dfdu);
        if (i > 0) A.add(ru, ru - 3, K.lower[i - 1] * iw);
        if (i + 1 < n) A.add(ru, ru + 3, K.upper[i] * iw);
        A.add(ru, rl, -u[i]);
        rhs[ru] = -f1[i] * iw;

        A.add(rs, rs, 1.0);
        if (i > 0) A.add(rs, rs - 3, -1.0);
        A.add(rs, ru, -w[i] * u[i]);

        if (i + 1 < n) {
            A.add(rl, rl, 1.0);
            A.add(rl, rl + 3, -1.0);
        } else {
            A.add(rl, rs, 1.0);
            rhs[rl] = -f2;
        }
    }
    A.factor();
    A.solve_in_place(rhs);
    du.resize(n);
    for (std::size_t i = 0; i < n; ++i) du[i] = rhs[3 * i];
    dlambda = rhs[2];
    return A.pivot_ratio();
}

inline double newton_residual(const Field& u, double lambda, const EnergyParams& params) {
    const double f2 = 0.5 * std::abs(integrate(*u.grid, u, 2.0) - 1.0);
    return std::max(pair_residual(u, lambda, params), f2);
}

}  // namespace detail

/**
 * Newton refinement of a critical pair (u, lambda) on the mass sphere. Always takes at least
 * one step; stops once the H^{-1} residual of the pair drops below tol.
 */
inline SolutionRecord newton_refine(const Field& u0, double lambda0, const EnergyParams& params,
                                    SolutionKind kind = SolutionKind::local_min,
                                    const NewtonOptions& opts = {}, NewtonTrace* trace = nullptr) {
    require(opts.tol > 0.0 && opts.max_steps > 0, ErrorKind::InvalidArgument,
            "Newton options must be positive");
    Field u = u0;
    double lambda = lambda0;
    NewtonTrace local;
    NewtonTrace& tr = trace ? *trace : local;
    tr.residuals.assign(1, detail::newton_residual(u, lambda, params));
    tr.corrections.clear();
    const double start = tr.residuals.front();

    std::vector<double> du;
    for (int k = 1; k <= opts.max_steps; ++k) {
        double dlambda = 0.0;
        tr.condition_estimate = detail::bordered_step(u, lambda, params, du, dlambda);
        require(tr.condition_estimate > 1e-14, ErrorKind::Singular,
                "singular bordered Jacobian; pivot ratio " + std::to_string(tr.condition_estimate));
        for (std::size_t i = 0; i < u.size(); ++i) u[i] += du[i];
        lambda += dlambda;
        double dn = 0.0;
        for (double v : du) dn = std::max(dn, std::abs(v));
        tr.corrections.push_back(std::max(dn, std::abs(dlambda)));
        const double res = detail::newton_residual(u, lambda, params);
        tr.residuals.push_back(res);
        require(std::isfinite(res) && res < 1e6 * std::max(start, 1e-3), ErrorKind::NotConverged,
                "Newton iteration diverged");
        if (res < opts.tol) {
            SolutionRecord rec;
            rec.u = retract(u);
            rec.mu = params.mu;
            rec.exponent_p = params.exponent_p;
            rec.lambda = lambda;
            rec.kind = kind;
            rec.iterations = k;
            finalize_record(rec);
            return rec;
        }
    }
    throw Error(ErrorKind::NotConverged, "Newton refinement did not reach tolerance");
}

inline SolutionRecord newton_refine(const SolutionRecord& rec, const NewtonOptions& opts = {},
                                    NewtonTrace* trace = nullptr) {
    SolutionRecord out = newton_refine(rec.u, rec.lambda, rec.params(), rec.kind, opts, trace);
    out.iterations += rec.iterations;
    out.energy_history = rec.energy_history;
    return out;
}

}  // namespace normsolve
