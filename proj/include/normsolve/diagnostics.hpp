#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "normsolve/energy.hpp"
#include "normsolve/error.hpp"
#include "normsolve/grid.hpp"
#include "normsolve/record.hpp"
#include "normsolve/thresholds.hpp"

namespace normsolve {

/// Relative Pohozaev defect of a converged record on the ball discretized by g.
inline double pohozaev_residual(const SolutionRecord& rec, const RadialGrid& g) {
    check_on_grid(g, rec.u);
    return pohozaev_relative(rec.u, rec.lambda, rec.params());
}

enum class LambdaSign { positive, nonpositive };

inline const char* to_string(LambdaSign s) {
    return s == LambdaSign::positive ? "positive" : "nonpositive";
}

struct CertReport {
    double pohozaev_residual_rel = 0.0;
    LambdaSign lambda_sign = LambdaSign::nonpositive;
    bool energy_floor_ok = false;
    bool grad_cap_ok = false;
    /// E - m_mu for mountain-pass records when m_mu is known, otherwise NaN.
    double quantum_gap = NAN;
    /// quantum - m_mu, the lower bound quantum_gap is compared against.
    double quantum_margin = NAN;
    bool concentration_flag = false;

    double energy = 0.0;
    double quantum = 0.0;
    double alpha = 0.0;
    Region region = Region::outside;
    /// local_min: E < quantum and inside B. mountain_pass: E >= quantum (and <= g if C given).
    bool level_ok = false;
    std::optional<double> upper;

    bool lemma_flags_ok() const {
        return lambda_sign == LambdaSign::positive && energy_floor_ok && grad_cap_ok;
    }
};

struct CertContext {
    std::optional<double> m_mu;
    std::optional<double> g_constant;
    double level_tol = 1e-6;
};

inline CertReport certify(const SolutionRecord& rec, const ThresholdSet& t,
                          const CertContext& ctx = {}) {
    CertReport c;
    const auto params = rec.params();
    const int N = t.dim;
    c.energy = energy(rec.u, params);
    const double d = dirichlet_form(rec.u);
    c.lambda_sign = rec.lambda > 0.0 ? LambdaSign::positive : LambdaSign::nonpositive;
    c.pohozaev_residual_rel =
        std::abs(rec.lambda) > 1e-12 ? pohozaev_relative(rec.u, rec.lambda, params) : INFINITY;
    c.energy_floor_ok = c.energy >= t.lambda1 / N * (1.0 - 1e-12);
    c.grad_cap_ok = d <= N * c.energy * (1.0 + 1e-12);
    if (params.mu <= 0.0) {
        c.quantum = INFINITY;
        c.alpha = INFINITY;
        c.region = Region::inside_B;
        c.level_ok = true;
        return c;
    }
    c.quantum = mp_quantum(t.S, params.mu, N);
    c.alpha = alpha_bar(t.S, params.mu, N);
    c.region = classify_level(d, c.alpha);
    if (ctx.m_mu) c.quantum_margin = c.quantum - *ctx.m_mu;
    if (rec.kind == SolutionKind::local_min) {
        c.level_ok = c.region == Region::inside_B && c.energy < c.quantum;
    } else {
        if (ctx.m_mu) c.quantum_gap = c.energy - *ctx.m_mu;
        c.level_ok = c.energy >= c.quantum - ctx.level_tol;
        if (ctx.g_constant && h_defined(params.mu, t.dim)) {
            c.upper = g_upper(params.mu, t, *ctx.g_constant);
            c.level_ok = c.level_ok && c.energy <= *c.upper + ctx.level_tol;
        }
        if (ctx.m_mu) c.level_ok = c.level_ok && c.quantum_gap >= c.quantum_margin - ctx.level_tol;
    }
    return c;
}

// --- concentration -----------------------------------------------------------

/// Radius of the smallest centered ball holding half of ||grad u||^2.
inline double half_gradient_radius(const Field& u) {
    const auto a = u.grid->face_coefficients();
    const auto& g = *u.grid;
    const std::size_t n = u.size();
    std::vector<double> cum(n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (i + 1 < n) ? u[i] - u[i + 1] : u[i];
        s += a[i] * d * d;
        cum[i] = s;
    }
    const double h = g.spacing();
    for (std::size_t i = 0; i < n; ++i) {
        if (cum[i] >= 0.5 * s) {
            const double prev = i > 0 ? cum[i - 1] : 0.0;
            const double frac = cum[i] > prev ? (0.5 * s - prev) / (cum[i] - prev) : 1.0;
            return (i + frac) * h;
        }
    }
    return g.radius();
}

struct ConcentrationReport {
    bool flagged = false;
    double gradient_growth = 0.0;
    double threshold = 0.0;
    /// Half-gradient radius of the last iterate.
    double scale = 0.0;
    std::vector<double> scales;
    std::vector<double> multipliers;
};

/**
 * Flags bubbling along a sequence of iterates: ||grad u||^2 must grow by at least
 * 0.8 S^{N/2} mu^{1-N/2} while the half-gradient radius shrinks monotonically by a factor
 * of at least two and stays above ten grid cells' worth of resolution at the start.
 */
inline ConcentrationReport detect_concentration(const std::vector<Field>& iterates,
                                                const EnergyParams& params,
                                                const ThresholdSet& t) {
    require(iterates.size() >= 3, ErrorKind::InvalidArgument,
            "concentration detection needs at least three iterates");
    ConcentrationReport rep;
    std::vector<double> d;
    for (const auto& u : iterates) {
        d.push_back(dirichlet_form(u));
        rep.scales.push_back(half_gradient_radius(u));
        const double mass = integrate(*u.grid, u, 2.0);
        double lam = d.back();
        if (params.mu != 0.0) lam -= params.mu * power_integral(u, params.exponent_p);
        rep.multipliers.push_back(lam / mass);
    }
    rep.scale = rep.scales.back();
    rep.gradient_growth = d.back() - d.front();
    rep.threshold = params.mu > 0.0 ? 0.8 * alpha_bar(t.S, params.mu, t.dim) : INFINITY;
    bool shrinking = true;
    for (std::size_t k = 1; k < rep.scales.size(); ++k) {
        if (rep.scales[k] > rep.scales[k - 1] * (1.0 + 1e-9)) shrinking = false;
    }
    const double h = iterates.front().grid->spacing();
    const bool resolved = rep.scales.front() >= 10.0 * h;
    rep.flagged = rep.gradient_growth >= rep.threshold && shrinking && resolved &&
                  rep.scales.back() <= 0.5 * rep.scales.front();
    return rep;
}

}  // namespace normsolve
