#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "normsolve/bubbles.hpp"
#include "normsolve/diagnostics.hpp"
#include "normsolve/energy.hpp"
#include "normsolve/error.hpp"
#include "normsolve/grid.hpp"
#include "normsolve/minimizer.hpp"
#include "normsolve/record.hpp"
#include "normsolve/thresholds.hpp"

namespace normsolve {

/// Cutoff used for the bubble arc: cosine profile in dimension 3, smooth plateau otherwise.
inline CutoffSpec arc_cutoff(int dim, double radius) {
    return dim == 3 ? CutoffSpec::cosine(0.0) : default_cutoff(radius);
}

struct EndpointOptions {
    /// Upper end of the admissible mu range; nonpositive selects mu_star / 2.
    double mu_double_star = 0.0;
    std::optional<CutoffSpec> cutoff;
};

struct Endpoints {
    Field w0;
    Field w1;
    double eps1 = 0.0;
    double mu0 = 0.0;
    double mu_double_star = 0.0;
    CutoffSpec cutoff;
    double energy_w0 = 0.0;
    double energy_w1 = 0.0;
    double grad_w0 = 0.0;
    double grad_w1 = 0.0;
    bool w0_ok = false;
    bool w1_ok = false;
};

inline double resolved_mu_double_star(const ThresholdSet& t, double requested) {
    return requested > 0.0 ? requested : 0.5 * t.mu_star;
}

namespace detail {

inline bool w1_condition(const GridPtr& g, double eps, const EnergyParams& params,
                         const CutoffSpec& cutoff, double alpha) {
    const Field v = normalized_bubble(g, eps, cutoff);
    return dirichlet_form(v) > alpha && energy(v, params) < 0.0;
}

}  // namespace detail

/**
 * Endpoints of the mountain-pass geometry: w0 = v_1 below the energy quantum inside the
 * trapping set, and w1 = v_{eps1} outside it with negative energy. eps1 is the largest
 * resolvable eps with both properties, located by a geometric scan and bisection.
 */
inline Endpoints build_endpoints(const GridPtr& g, const EnergyParams& params,
                                 const ThresholdSet& t, const EndpointOptions& opts = {}) {
    require(params.mu > 0.0, ErrorKind::InvalidArgument, "mountain pass needs mu > 0");
    require(std::abs(params.exponent_p - g->critical_exponent()) < 1e-12,
            ErrorKind::InvalidArgument, "mountain pass geometry needs the critical exponent");
    Endpoints ep;
    ep.mu_double_star = resolved_mu_double_star(t, opts.mu_double_star);
    require(params.mu < ep.mu_double_star, ErrorKind::Infeasible,
            "mu must lie below mu** = " + std::to_string(ep.mu_double_star));
    ep.cutoff = opts.cutoff.value_or(arc_cutoff(g->dim(), g->radius()));
    ep.mu0 = std::min(2.0 * params.mu, ep.mu_double_star);
    const double alpha = alpha_bar(t.S, params.mu, t.dim);
    const double alpha_w1 = alpha_bar(t.S, 0.5 * ep.mu0, t.dim);

    ep.w0 = normalized_bubble(g, 1.0, ep.cutoff);
    ep.energy_w0 = energy(ep.w0, params);
    ep.grad_w0 = dirichlet_form(ep.w0);
    ep.w0_ok = ep.grad_w0 < alpha && ep.energy_w0 < mp_quantum(t.S, params.mu, t.dim);
    require(ep.w0_ok, ErrorKind::Infeasible, "w0 = v_1 violates the trapping-set conditions");

    const double eps_min = 3.0 * g->spacing();
    double hi = 1.0;
    double lo = -1.0;
    for (double e = 1.0; e >= eps_min; e *= 0.9) {
        if (detail::w1_condition(g, e, params, ep.cutoff, alpha_w1)) {
            lo = e;
            break;
        }
        hi = e;
    }
    if (lo < 0.0 && detail::w1_condition(g, eps_min, params, ep.cutoff, alpha_w1)) lo = eps_min;
    require(lo > 0.0, ErrorKind::UnderResolved,
            "no resolvable eps1 exists on this grid; mu is too small, refine the grid");
    for (int k = 0; k < 60 && hi - lo > 1e-12 * hi; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (detail::w1_condition(g, mid, params, ep.cutoff, alpha_w1)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ep.eps1 = lo;
    ep.w1 = normalized_bubble(g, ep.eps1, ep.cutoff);
    ep.energy_w1 = energy(ep.w1, params);
    ep.grad_w1 = dirichlet_form(ep.w1);
    ep.w1_ok = ep.grad_w1 > alpha_w1 && ep.grad_w1 > alpha && ep.energy_w1 < 0.0;
    require(ep.w1_ok, ErrorKind::Infeasible, "w1 violates the outside-set conditions");
    return ep;
}

struct PathOnSphere {
    std::vector<Field> points;
    /// Arc parameters eps_hat(t_k) of the initial bubble arc; empty once the path moved.
    std::vector<double> eps;
    CutoffSpec cutoff;
    double mesh_bound = 0.25;

    std::size_t segments() const { return points.empty() ? 0 : points.size() - 1; }
};

inline double max_segment(const PathOnSphere& p) {
    double m = 0.0;
    for (std::size_t k = 0; k + 1 < p.points.size(); ++k) {
        m = std::max(m, l2_distance(p.points[k], p.points[k + 1]));
    }
    return m;
}

/// Bubble arc eps_hat(t) = 1 - (1 - eps1) t sampled at t = k/m, k = 0..m.
inline PathOnSphere initial_path(const Endpoints& ep, int m, double mesh_bound = 0.25) {
    require(m >= 16, ErrorKind::InvalidArgument, "path needs at least 16 segments");
    require(mesh_bound > 0.0, ErrorKind::InvalidArgument, "mesh bound must be positive");
    const GridPtr& g = ep.w0.grid;
    PathOnSphere p;
    p.mesh_bound = mesh_bound;
    p.cutoff = ep.cutoff;
    for (int k = 0; k <= m; ++k) {
        if (k == 0) {
            p.points.push_back(ep.w0);
            p.eps.push_back(1.0);
        } else if (k == m) {
            p.points.push_back(ep.w1);
            p.eps.push_back(ep.eps1);
        } else {
            const double t = double(k) / m;
            const double e = 1.0 - (1.0 - ep.eps1) * t;
            p.points.push_back(normalized_bubble(g, e, ep.cutoff));
            p.eps.push_back(e);
        }
    }
    return p;
}

/**
 * Resamples an untouched bubble arc at equal L^2 arclength, keeping the point count and the
 * endpoints. The arc itself is unchanged; only its parametrization is.
 */
inline void equidistribute_arc(PathOnSphere& p) {
    require(p.eps.size() == p.points.size() && p.points.size() >= 2, ErrorKind::InvalidArgument,
            "path is not a pristine bubble arc");
    const GridPtr& g = p.points.front().grid;
    const double e0 = p.eps.front(), e1 = p.eps.back();
    const std::size_t m = p.points.size() - 1;
    const std::size_t fine = 40 * m;
    std::vector<double> le(fine + 1), s(fine + 1, 0.0);
    Field prev = p.points.front();
    for (std::size_t j = 0; j <= fine; ++j) {
        le[j] = std::log(e0) + (std::log(e1) - std::log(e0)) * double(j) / fine;
        if (j == 0) continue;
        Field cur = j == fine ? p.points.back() : normalized_bubble(g, std::exp(le[j]), p.cutoff);
        s[j] = s[j - 1] + l2_distance(prev, cur);
        prev = std::move(cur);
    }
    std::size_t j = 0;
    for (std::size_t k = 1; k < m; ++k) {
        const double target = s.back() * double(k) / m;
        while (j + 1 < fine && s[j + 1] < target) ++j;
        const double a = s[j + 1] > s[j] ? (target - s[j]) / (s[j + 1] - s[j]) : 0.0;
        const double eps = std::exp(le[j] + a * (le[j + 1] - le[j]));
        p.points[k] = normalized_bubble(g, eps, p.cutoff);
        p.eps[k] = eps;
    }
}

inline std::vector<double> path_energies(const PathOnSphere& p, const EnergyParams& params) {
    std::vector<double> e;
    e.reserve(p.points.size());
    for (const auto& u : p.points) e.push_back(energy(u, params));
    return e;
}

/// sup over resolvable eps in (0, 1] of E(v_eps): dense logarithmic scan plus golden refinement.
inline double bubble_arc_sup(const GridPtr& g, const EnergyParams& params,
                             const CutoffSpec& cutoff) {
    const double lo = std::log(3.0 * g->spacing());
    auto f = [&](double x) { return energy(normalized_bubble(g, std::exp(x), cutoff), params); };
    const int samples = 160;
    int best = 0;
    double best_val = -INFINITY;
    for (int k = 0; k <= samples; ++k) {
        const double x = lo * (1.0 - double(k) / samples);
        const double v = f(x);
        if (v > best_val) {
            best_val = v;
            best = k;
        }
    }
    const double dx = -lo / samples;
    double a = std::max(lo, lo * (1.0 - double(best) / samples) - dx);
    double b = std::min(0.0, lo * (1.0 - double(best) / samples) + dx);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 60 && b - a > 1e-10; ++it) {
        if (f1 > f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - gr * (b - a); f1 = f(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + gr * (b - a); f2 = f(x2);
        }
    }
    return std::max({best_val, f1, f2});
}

/// Shape factor multiplying C in h(mu).
inline double h_shape(double mu, int dim) {
    if (dim == 3) return std::sqrt(mu);
    if (dim == 4) return 1.0 / std::abs(std::log(mu));
    return std::pow(mu, 0.25 * (dim - 2.0) * (dim - 4.0));
}

/// Smallest C >= 0 for which g(mu) dominates the bubble-arc supremum at every calibration mu.
inline double calibrate_g_constant(const GridPtr& g, const ThresholdSet& t,
                                   const std::vector<double>& mu_grid,
                                   std::optional<CutoffSpec> cutoff = std::nullopt) {
    require(!mu_grid.empty(), ErrorKind::InvalidArgument, "calibration grid is empty");
    const CutoffSpec c = cutoff.value_or(arc_cutoff(g->dim(), g->radius()));
    double C = 0.0;
    for (double mu : mu_grid) {
        require(h_defined(mu, g->dim()), ErrorKind::InvalidArgument,
                "calibration mu outside the domain of h");
        const auto params = make_energy_params(g->dim(), mu);
        const double sup = bubble_arc_sup(g, params, c);
        const double base = g_upper(mu, t.dim, 0.0, t.S, t.lambda1_inner_ball);
        C = std::max(C, (sup - base) / h_shape(mu, t.dim));
    }
    return C;
}

// --- minimax descent -----------------------------------------------------------

struct SweepSummary {
    int sweep = 0;
    double max_energy = 0.0;
    int climbing_index = 0;
    double climbing_residual = 0.0;
};

struct MinimaxOptions {
    /// Stop once the climbing image's tangential gradient norm drops below tol.
    double tol = 1e-6;
    int max_sweeps = 20000;
    /// Plain string sweeps before the climbing image is switched on.
    int string_sweeps = 100;
    double step = 0.3;
    /// Largest L^2 displacement of a point in one sweep.
    double max_move = 0.02;
    /// Upper bound C of h(mu); absent disables the upper level check.
    std::optional<double> g_constant;
    NewtonOptions newton;
    /// Sweeps between climbing-image snapshots fed to concentration detection.
    int snapshot_every = 50;
    int snapshot_window = 6;
    /// Called after every sweep summary is recorded.
    std::function<void(const SweepSummary&)> on_sweep;
};

struct BoundChecks {
    double lower = 0.0;
    std::optional<double> upper;
    bool lower_ok = false;
    bool upper_ok = false;
};

struct MinimaxReport {
    double c_estimate = 0.0;
    double initial_max = 0.0;
    std::optional<SolutionRecord> saddle;
    std::vector<SweepSummary> path_history;
    BoundChecks bound_checks;
    PathOnSphere path;
    int sweeps = 0;
    double climbing_residual = 0.0;
    bool bubbling = false;
    std::optional<ConcentrationReport> concentration;
    std::string refine_error;
};

inline BoundChecks bound_checks(double c, double mu, const ThresholdSet& t,
                                std::optional<double> C, double slack = 1e-6) {
    BoundChecks b;
    b.lower = mp_quantum(t.S, mu, t.dim);
    b.lower_ok = c >= b.lower - slack;
    if (C && h_defined(mu, t.dim)) {
        b.upper = g_upper(mu, t, *C);
        b.upper_ok = c <= *b.upper + slack;
    }
    return b;
}

namespace detail {

/// Redistributes points k in [first, last] uniformly in L^2 arclength; endpoints stay put.
inline void redistribute(std::vector<Field>& pts, std::size_t first, std::size_t last) {
    if (last <= first + 1) return;
    std::vector<double> s(last - first + 1, 0.0);
    for (std::size_t k = first + 1; k <= last; ++k) {
        s[k - first] = s[k - first - 1] + l2_distance(pts[k - 1], pts[k]);
    }
    const double total = s.back();
    if (!(total > 0.0)) return;
    std::vector<Field> out;
    std::size_t j = 0;
    for (std::size_t k = first + 1; k < last; ++k) {
        const double target = total * double(k - first) / double(last - first);
        while (j + 1 < s.size() - 1 && s[j + 1] < target) ++j;
        const double len = s[j + 1] - s[j];
        const double a = len > 0.0 ? (target - s[j]) / len : 0.0;
        out.push_back(retract(combine(1.0 - a, pts[first + j], a, pts[first + j + 1])));
    }
    for (std::size_t k = first + 1; k < last; ++k) pts[k] = std::move(out[k - first - 1]);
}

/// Upwind path tangent at interior point k (higher-energy neighbour), projected to the sphere.
inline Field path_tangent(const std::vector<Field>& pts, const std::vector<double>& e,
                          std::size_t k) {
    const Field fwd = combine(1.0, pts[k + 1], -1.0, pts[k]);
    const Field bwd = combine(1.0, pts[k], -1.0, pts[k - 1]);
    Field tau;
    if (e[k + 1] > e[k] && e[k] > e[k - 1]) {
        tau = fwd;
    } else if (e[k + 1] < e[k] && e[k] < e[k - 1]) {
        tau = bwd;
    } else {
        const double dmax = std::max(std::abs(e[k + 1] - e[k]), std::abs(e[k - 1] - e[k]));
        const double dmin = std::min(std::abs(e[k + 1] - e[k]), std::abs(e[k - 1] - e[k]));
        if (e[k + 1] > e[k - 1]) {
            tau = combine(dmax, fwd, dmin, bwd);
        } else {
            tau = combine(dmin, fwd, dmax, bwd);
        }
    }
    return tangent_project(tau, pts[k]);
}

}  // namespace detail

/**
 * Elastic-path minimax on the mass sphere with a climbing image.
 *
 * Interior points follow minus the H^1_0 Riemannian gradient with its component along the
 * path tangent removed; after the string phase the highest point instead has that component
 * reversed. Points below both endpoint energies are not moved. Points are folded to |u|, retracted, and redistributed by L^2 arclength every
 * sweep (separately on both sides of the climbing image).
 */
inline MinimaxReport minimax_descent(PathOnSphere path, const EnergyParams& params,
                                     const ThresholdSet& t, const MinimaxOptions& opts = {}) {
    require(path.points.size() >= 17, ErrorKind::InvalidArgument, "path needs m >= 16");
    require(opts.tol > 0.0 && opts.step > 0.0 && opts.max_sweeps > 0, ErrorKind::InvalidArgument,
            "minimax options must be positive");
    require(params.mu > 0.0, ErrorKind::InvalidArgument, "mountain pass needs mu > 0");
    for (const auto& u : path.points) require_unit_mass(u, 1e-10);
    if (path.eps.size() == path.points.size()) equidistribute_arc(path);
    require(max_segment(path) < path.mesh_bound, ErrorKind::InvalidArgument,
            "initial path is coarser than the mesh bound; raise m");

    const std::size_t m = path.points.size() - 1;
    const double alpha = alpha_bar(t.S, params.mu, t.dim);
    const double quantum = mp_quantum(t.S, params.mu, t.dim);
    const Field w0 = path.points.front();
    const Field w1 = path.points.back();
    const double e0 = energy(w0, params);
    const double e1 = energy(w1, params);
    require(dirichlet_form(w0) < alpha && e0 < quantum, ErrorKind::InvalidArgument,
            "path start violates the trapping-set conditions");
    require(dirichlet_form(w1) > alpha && e1 < 0.0, ErrorKind::InvalidArgument,
            "path end violates the outside-set conditions");

    MinimaxReport rep;
    auto& pts = path.points;
    auto e = path_energies(path, params);
    // Points below both endpoint levels cannot carry the maximum and would only slide
    // toward concentration, so they are left where redistribution puts them.
    const double floor = std::max(e0, e1);
    rep.initial_max = *std::max_element(e.begin(), e.end());
    std::vector<Field> snapshots;

    std::size_t ci = 0;
    double ci_res = INFINITY;
    bool done = false;
    int sweep = 0;
    for (; sweep < opts.max_sweeps; ++sweep) {
        const bool climbing = sweep >= opts.string_sweeps;
        if (!climbing || sweep == opts.string_sweeps) {
            ci = std::size_t(std::max_element(e.begin() + 1, e.end() - 1) - e.begin());
        }
        std::vector<Field> next(pts);
        for (std::size_t k = 1; k < m; ++k) {
            if (k != ci && e[k] < floor) continue;
            const Field grad = sobolev_gradient(pts[k], params);
            if (k == ci) ci_res = gradient_report(pts[k], params).residual_norm;
            const Field tau = detail::path_tangent(pts, e, k);
            const double tt = dirichlet_form(tau);
            const double proj = tt > 0.0 ? dirichlet_form(grad, tau) / tt : 0.0;
            const double along = (climbing && k == ci) ? 2.0 * proj : proj;
            Field d = combine(-1.0, grad, along, tau);
            const double len = l2_norm(d);
            const double s = len * opts.step > opts.max_move ? opts.max_move / len : opts.step;
            next[k] = retract(absolute(combine(1.0, pts[k], s, d)));
        }
        rep.path_history.push_back({sweep, e[ci], int(ci), ci_res});
        if (opts.on_sweep) opts.on_sweep(rep.path_history.back());
        if (climbing && ci_res < opts.tol) {
            done = true;
            break;
        }
        pts.swap(next);
        if (climbing) {
            detail::redistribute(pts, 0, ci);
            detail::redistribute(pts, ci, m);
        } else {
            detail::redistribute(pts, 0, m);
        }
        require(max_segment(path) < path.mesh_bound, ErrorKind::NotConverged,
                "path mesh degenerated: consecutive distance above the mesh bound");
        e = path_energies(path, params);
        require(e.front() == e0 && e.back() == e1, ErrorKind::NotConverged,
                "path endpoints moved");

        if (climbing && opts.snapshot_every > 0 && sweep % opts.snapshot_every == 0) {
            snapshots.push_back(pts[ci]);
            if (int(snapshots.size()) > opts.snapshot_window) snapshots.erase(snapshots.begin());
            if (int(snapshots.size()) == opts.snapshot_window) {
                auto cr = detect_concentration(snapshots, params, t);
                if (cr.flagged) {
                    rep.bubbling = true;
                    rep.concentration = cr;
                    break;
                }
            }
        }
    }
    rep.sweeps = sweep;
    rep.climbing_residual = ci_res;
    rep.c_estimate = *std::max_element(e.begin(), e.end());
    rep.bound_checks = bound_checks(rep.c_estimate, params.mu, t, opts.g_constant);
    path.eps.clear();
    if (rep.bubbling) {
        rep.path = std::move(path);
        return rep;
    }
    require(done, ErrorKind::NotConverged,
            "minimax descent exceeded the sweep cap; climbing residual " + std::to_string(ci_res));
    try {
        SolutionRecord seed;
        seed.u = pts[ci];
        seed.mu = params.mu;
        seed.exponent_p = params.exponent_p;
        seed.kind = SolutionKind::mountain_pass;
        seed.lambda = multiplier(seed.u, params);
        seed.iterations = sweep;
        rep.saddle = newton_refine(seed, opts.newton);
    } catch (const Error& err) {
        rep.refine_error = err.what();
    }
    rep.path = std::move(path);
    return rep;
}

// --- c_mu curve -------------------------------------------------------------------

struct CurveOptions {
    int path_points = 33;
    double mu_double_star = 0.0;
    FlowOptions flow;
    MinimaxOptions minimax;
    NewtonOptions newton;
    /// delta_0 of the N = 3 slope factor; nonpositive selects 1.01 * 3 lambda_1 / (4 S^{3/2}).
    double delta0 = 0.0;
    /// Worker threads; nonpositive reads NORMSOLVE_THREADS, then hardware concurrency.
    int threads = 0;
};

struct CurveRow {
    double mu = 0.0;
    double m_mu = NAN;
    double c_mu = NAN;
    double saddle_energy = NAN;
    double quantum = 0.0;
    double g_mu = NAN;
    double lambda_min = NAN;
    double lambda_mp = NAN;
    double slope = NAN;
    double slope_bound = NAN;
    bool slope_ok = false;
    bool slope_conditioned = false;
    bool sandwich_ok = false;
    bool bubbling = false;
    std::string error;

    bool ok() const { return error.empty() && !bubbling; }
    std::string flags() const;
};

inline std::string CurveRow::flags() const {
    std::string f;
    auto add = [&](const char* s) {
        if (!f.empty()) f += '|';
        f += s;
    };
    if (!error.empty()) add("error");
    if (bubbling) add("bubbling");
    if (sandwich_ok) add("sandwich");
    if (slope_conditioned) add(slope_ok ? "slope_ok" : "slope_fail");
    if (f.empty()) add("none");
    return f;
}

struct CurveTable {
    std::vector<CurveRow> rows;
    double g_constant = 0.0;
    double delta0 = 0.0;
    bool monotone = false;
    bool sandwich = false;
    int conditioned_rows = 0;
    double slope_fraction = 0.0;
};

/// delta(mu) of the derivative bound.
inline double delta_mu(double mu, int dim, double delta0) {
    if (dim == 3) return delta0 * std::sqrt(mu);
    if (dim == 4) return mu / std::sqrt(std::abs(std::log(mu)));
    return std::pow(mu, 0.5 * dim - 0.5);
}

inline int worker_count(int requested, std::size_t jobs) {
    int n = requested;
    if (n <= 0) {
        if (const char* env = std::getenv("NORMSOLVE_THREADS")) n = std::atoi(env);
    }
    if (n <= 0) n = int(std::max(1u, std::thread::hardware_concurrency()));
    return std::max(1, std::min<int>(n, int(jobs)));
}

/// Local minimum and mountain-pass level at one mu.
inline CurveRow curve_row(const GridPtr& g, const ThresholdSet& t, double mu, double C,
                          const CurveOptions& opts) {
    CurveRow row;
    row.mu = mu;
    row.quantum = mp_quantum(t.S, mu, t.dim);
    if (h_defined(mu, t.dim)) row.g_mu = g_upper(mu, t, C);
    try {
        const auto params = make_energy_params(t.dim, mu);
        EndpointOptions eo;
        eo.mu_double_star = opts.mu_double_star;
        const auto ep = build_endpoints(g, params, t, eo);
        const auto flow = solve_local_min(params, t, ep.w0, opts.flow);
        const auto mn = newton_refine(flow, opts.newton);
        row.m_mu = mn.energy;
        row.lambda_min = mn.lambda;
        MinimaxOptions mo = opts.minimax;
        mo.g_constant = C;
        const auto rep =
            minimax_descent(initial_path(ep, opts.path_points), params, t, mo);
        row.c_mu = rep.c_estimate;
        row.bubbling = rep.bubbling;
        if (rep.saddle) {
            row.saddle_energy = rep.saddle->energy;
            row.lambda_mp = rep.saddle->lambda;
        } else if (!rep.bubbling) {
            row.error = "saddle refinement failed: " + rep.refine_error;
        }
        row.sandwich_ok = row.m_mu < row.quantum && row.c_mu >= row.quantum - 1e-6 &&
                          (!std::isfinite(row.g_mu) || row.c_mu <= row.g_mu + 1e-6);
    } catch (const Error& err) {
        row.error = std::string(to_string(err.kind())) + ": " + err.what();
    }
    return row;
}

/**
 * m_mu and c_mu over an increasing mu grid. Rows run in parallel; failures stay in their row.
 * The slope check compares central differences of c_mu with (1 + delta(mu)) |g'(mu)| on rows
 * whose two neighbours converged.
 */
inline CurveTable cmu_curve(const GridPtr& g, const ThresholdSet& t,
                            const std::vector<double>& mu_grid, const CurveOptions& opts = {},
                            std::optional<double> g_constant = std::nullopt) {
    require(mu_grid.size() >= 3, ErrorKind::InvalidArgument, "curve needs at least three mu");
    const double mss = resolved_mu_double_star(t, opts.mu_double_star);
    for (std::size_t i = 0; i < mu_grid.size(); ++i) {
        require(mu_grid[i] > 0.0 && mu_grid[i] < mss, ErrorKind::InvalidArgument,
                "curve mu must lie in (0, mu**)");
        if (i > 0) {
            require(mu_grid[i] > mu_grid[i - 1], ErrorKind::InvalidArgument,
                    "mu grid must be increasing");
        }
    }
    CurveTable tab;
    if (g_constant) {
        tab.g_constant = *g_constant;
    } else {
        std::vector<double> cal;
        for (double mu : mu_grid) {
            if (h_defined(mu, t.dim)) cal.push_back(mu);
        }
        tab.g_constant = cal.empty() ? 0.0 : calibrate_g_constant(g, t, cal);
    }
    tab.delta0 = opts.delta0 > 0.0
                     ? opts.delta0
                     : 1.01 * 0.75 * t.lambda1_inner_ball.value_or(t.lambda1) /
                           std::pow(t.S, 1.5);
    tab.rows.resize(mu_grid.size());

    const int workers = worker_count(opts.threads, mu_grid.size());
    std::mutex mtx;
    std::size_t next = 0;
    auto work = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> lock(mtx);
                if (next >= mu_grid.size()) return;
                i = next++;
            }
            tab.rows[i] = curve_row(g, t, mu_grid[i], tab.g_constant, opts);
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();

    tab.monotone = true;
    tab.sandwich = true;
    for (std::size_t i = 0; i < tab.rows.size(); ++i) {
        const auto& r = tab.rows[i];
        if (!r.ok() || !r.sandwich_ok) tab.sandwich = false;
        if (i > 0 && !(r.c_mu <= tab.rows[i - 1].c_mu + 1e-6)) tab.monotone = false;
    }
    int satisfied = 0;
    for (std::size_t i = 1; i + 1 < tab.rows.size(); ++i) {
        auto& r = tab.rows[i];
        const auto& a = tab.rows[i - 1];
        const auto& b = tab.rows[i + 1];
        if (!(r.ok() && a.ok() && b.ok()) || !h_defined(r.mu, t.dim)) continue;
        r.slope = (b.c_mu - a.c_mu) / (b.mu - a.mu);
        r.slope_bound =
            (1.0 + delta_mu(r.mu, t.dim, tab.delta0)) * std::abs(g_upper_derivative(r.mu, t, tab.g_constant));
        r.slope_conditioned = std::isfinite(r.slope);
        if (!r.slope_conditioned) continue;
        ++tab.conditioned_rows;
        r.slope_ok = std::abs(r.slope) <= r.slope_bound;
        if (r.slope_ok) ++satisfied;
    }
    tab.slope_fraction = tab.conditioned_rows > 0 ? double(satisfied) / tab.conditioned_rows : 0.0;
    return tab;
}

}  // namespace normsolve
