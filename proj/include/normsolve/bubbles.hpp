#pragma once

#include <boost/math/quadrature/gauss.hpp>

#include <array>
#include <cmath>
#include <mutex>
#include <numbers>
#include <optional>
#include <vector>

#include "normsolve/energy.hpp"
#include "normsolve/error.hpp"
#include "normsolve/grid.hpp"

namespace normsolve {

enum class CutoffKind { smooth_plateau, cosine_N3, none };

inline const char* to_string(CutoffKind k) {
    switch (k) {
        case CutoffKind::smooth_plateau: return "smooth_plateau";
        case CutoffKind::cosine_N3: return "cosine_N3";
        case CutoffKind::none: return "none";
    }
    return "unknown";
}

/**
 * Radial cutoff eta. smooth_plateau is 1 up to plateau_radius and falls to 0 at R with
 * a quintic smoothstep (C^2). cosine_N3 is 1 up to tau and cos(pi (r - tau) / (2 (R - tau)))
 * after it. none is eta = 1 (used for truncated-domain checks).
 */
struct CutoffSpec {
    CutoffKind kind = CutoffKind::smooth_plateau;
    double plateau_radius = 0.0;
    double tau = 0.0;

    static CutoffSpec plateau(double radius) { return {CutoffKind::smooth_plateau, radius, 0.0}; }
    static CutoffSpec cosine(double tau = 0.0) { return {CutoffKind::cosine_N3, 0.0, tau}; }
    static CutoffSpec uncut() { return {CutoffKind::none, 0.0, 0.0}; }
};

inline CutoffSpec default_cutoff(double radius) { return CutoffSpec::plateau(0.8 * radius); }

inline void validate_cutoff(const CutoffSpec& c, int dim, double radius) {
    switch (c.kind) {
        case CutoffKind::smooth_plateau:
            require(c.plateau_radius > 0.0 && c.plateau_radius < radius,
                    ErrorKind::InvalidArgument, "plateau radius must lie in (0, R)");
            break;
        case CutoffKind::cosine_N3:
            require(dim == 3, ErrorKind::InvalidArgument, "cosine cutoff is only defined for N = 3");
            require(c.tau >= 0.0 && c.tau < radius, ErrorKind::InvalidArgument,
                    "cosine offset tau must lie in [0, R)");
            break;
        case CutoffKind::none:
            break;
    }
}

/// eta(r) and eta'(r) on [0, R].
inline std::array<double, 2> cutoff_value(const CutoffSpec& c, double radius, double r) {
    switch (c.kind) {
        case CutoffKind::smooth_plateau: {
            if (r <= c.plateau_radius) return {1.0, 0.0};
            if (r >= radius) return {0.0, 0.0};
            const double width = radius - c.plateau_radius;
            const double t = (r - c.plateau_radius) / width;
            const double t2 = t * t;
            const double value = 1.0 - t2 * t * (10.0 - 15.0 * t + 6.0 * t2);
            const double slope = -30.0 * t2 * (1.0 - t) * (1.0 - t) / width;
            return {value, slope};
        }
        case CutoffKind::cosine_N3: {
            if (r <= c.tau) return {1.0, 0.0};
            const double k = 0.5 * std::numbers::pi / (radius - c.tau);
            return {std::cos(k * (r - c.tau)), -k * std::sin(k * (r - c.tau))};
        }
        case CutoffKind::none:
            return {1.0, 0.0};
    }
    return {0.0, 0.0};
}

inline double bubble_prefactor(int dim) {
    return std::pow(double(dim) * (dim - 2.0), 0.25 * (dim - 2.0));
}

/// Uncut profile [N(N-2) eps^2]^{(N-2)/4} (eps^2 + r^2)^{-(N-2)/2} and its r-derivative.
inline std::array<double, 2> bubble_core(int dim, double eps, double r) {
    const double a = 0.5 * (dim - 2.0);
    const double q = eps * eps + r * r;
    const double value = bubble_prefactor(dim) * std::pow(eps, a) * std::pow(q, -a);
    return {value, -2.0 * a * r * value / q};
}

inline Field bubble(const GridPtr& g, double eps, const CutoffSpec& cutoff) {
    require(eps > 0.0 && std::isfinite(eps), ErrorKind::InvalidArgument, "eps must be positive");
    validate_cutoff(cutoff, g->dim(), g->radius());
    require(eps >= 3.0 * g->spacing(), ErrorKind::UnderResolved,
            "under-resolved bubble: eps is below three grid spacings");
    const int dim = g->dim();
    const double R = g->radius();
    return make_field(g, [&](double r) {
        return cutoff_value(cutoff, R, r)[0] * bubble_core(dim, eps, r)[0];
    });
}

inline Field normalized_bubble(const GridPtr& g, double eps, const CutoffSpec& cutoff) {
    return retract(bubble(g, eps, cutoff));
}

// --- Sobolev constant -------------------------------------------------------

namespace detail {

/// Integral over [T, inf) of r^{-m} (1 + r^{-2})^{-N} via its binomial series in r^{-2}.
inline double power_tail(int dim, double m, double T) {
    require(T >= 2.0, ErrorKind::InvalidArgument,
            "truncation radius too small to certify the tail bound");
    double sum = 0.0;
    double binom = 1.0;
    for (int k = 0; k < 400; ++k) {
        const double term = binom * std::pow(T, 1.0 - m - 2.0 * k) / (m + 2.0 * k - 1.0);
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) return sum;
        binom *= -(dim + k) / double(k + 1);
    }
    throw Error(ErrorKind::NotConverged, "Sobolev tail series did not converge");
}

template <class F>
double geometric_panels(F&& f, double T) {
    using GL = boost::math::quadrature::gauss<double, 30>;
    double s = GL::integrate(f, 0.0, 0.5);
    double a = 0.5;
    while (a < T) {
        const double b = std::min(1.25 * a, T);
        s += GL::integrate(f, a, b);
        a = b;
    }
    return s;
}

}  // namespace detail

/// Rayleigh quotient ||grad U||^2 / ||U||_{2*}^2 of U(r) = (1 + (r/s)^2)^{-(N-2)/2},
/// integrated on [0, T] with the analytic power-law tail beyond T.
inline double sobolev_quotient(int dim, double dilation = 1.0, double truncation = 1e3) {
    require(dim >= 3, ErrorKind::InvalidArgument, "dimension must be at least 3");
    require(dilation > 0.0, ErrorKind::InvalidArgument, "dilation must be positive");
    const double N = dim;
    const double s = dilation;
    const double T = truncation * s;
    auto grad = [&](double r) {
        const double x = r / s;
        return (N - 2) * (N - 2) * std::pow(x, 2.0) / (s * s) * std::pow(r, N - 1) *
               std::pow(1.0 + x * x, -N);
    };
    auto crit = [&](double r) {
        const double x = r / s;
        return std::pow(r, N - 1) * std::pow(1.0 + x * x, -N);
    };
    // Beyond T (in units of s) both integrands are pure power laws times (1 + x^{-2})^{-N}.
    const double grad_tail =
        (N - 2) * (N - 2) * std::pow(s, N - 2) * detail::power_tail(dim, N - 1, truncation);
    const double crit_tail = std::pow(s, N) * detail::power_tail(dim, N + 1, truncation);
    const double g = detail::geometric_panels(grad, T) + grad_tail;
    const double c = detail::geometric_panels(crit, T) + crit_tail;
    const double omega = unit_sphere_area(dim);
    return omega * g / std::pow(omega * c, (N - 2) / N);
}

/// Best Sobolev constant S of D^{1,2}(R^N) into L^{2*}(R^N), cached per dimension.
inline double sobolev_constant(int dim) {
    require(dim >= 3, ErrorKind::InvalidArgument, "dimension must be at least 3");
    static std::mutex mutex;
    static std::vector<std::optional<double>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    if (cache.size() <= std::size_t(dim)) cache.resize(dim + 1);
    if (!cache[dim]) cache[dim] = sobolev_quotient(dim);
    return *cache[dim];
}

// --- Struwe asymptotics ----------------------------------------------------

struct BubbleRecord {
    double epsilon = 0.0;
    double grad_norm_sq = 0.0;
    double crit_norm = 0.0;
    double mass_sq = 0.0;
};

/// Norms of the cut-off bubble integrated from the analytic profile, Gauss-Legendre per grid cell.
inline BubbleRecord bubble_norms(const RadialGrid& g, double eps, const CutoffSpec& cutoff) {
    require(eps > 0.0, ErrorKind::InvalidArgument, "eps must be positive");
    validate_cutoff(cutoff, g.dim(), g.radius());
    require(eps >= 3.0 * g.spacing(), ErrorKind::UnderResolved,
            "under-resolved bubble: eps is below three grid spacings");
    using GL = boost::math::quadrature::gauss<double, 7>;
    const int dim = g.dim();
    const double R = g.radius();
    const double h = g.spacing();
    const double pcrit = g.critical_exponent();
    double grad = 0.0, crit = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double a = i * h;
        const double b = (i + 1) * h;
        grad += GL::integrate([&](double r) {
            const auto eta = cutoff_value(cutoff, R, r);
            const auto core = bubble_core(dim, eps, r);
            const double d = eta[1] * core[0] + eta[0] * core[1];
            return d * d * std::pow(r, dim - 1);
        }, a, b);
        crit += GL::integrate([&](double r) {
            const double u = cutoff_value(cutoff, R, r)[0] * bubble_core(dim, eps, r)[0];
            return std::pow(std::abs(u), pcrit) * std::pow(r, dim - 1);
        }, a, b);
        mass += GL::integrate([&](double r) {
            const double u = cutoff_value(cutoff, R, r)[0] * bubble_core(dim, eps, r)[0];
            return u * u * std::pow(r, dim - 1);
        }, a, b);
    }
    const double omega = g.sphere_area();
    return BubbleRecord{eps, omega * grad, omega * crit, omega * mass};
}

struct StruweTable {
    std::vector<BubbleRecord> records;
    double grad_slope = 0.0;
    double crit_slope = 0.0;
    double mass_slope = 0.0;
};

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t m = x.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

inline StruweTable struwe_table(const RadialGrid& g, const CutoffSpec& cutoff,
                                const std::vector<double>& eps_list) {
    for (std::size_t i = 1; i < eps_list.size(); ++i) {
        require(eps_list[i] < eps_list[i - 1], ErrorKind::InvalidArgument,
                "eps list must be strictly decreasing");
    }
    StruweTable table;
    for (double eps : eps_list) {
        if (eps < 3.0 * g.spacing()) continue;
        table.records.push_back(bubble_norms(g, eps, cutoff));
    }
    require(table.records.size() >= 4, ErrorKind::UnderResolved,
            "fewer than 4 resolvable eps values; cannot fit a slope");

    const int dim = g.dim();
    const double level = std::pow(sobolev_constant(dim), 0.5 * dim);
    std::vector<double> e, dg, dc, m;
    for (const auto& rec : table.records) {
        e.push_back(rec.epsilon);
        dg.push_back(std::abs(rec.grad_norm_sq - level));
        dc.push_back(std::abs(rec.crit_norm - level));
        m.push_back(dim == 4 ? rec.mass_sq / std::abs(std::log(rec.epsilon)) : rec.mass_sq);
    }
    table.grad_slope = loglog_slope(e, dg);
    table.crit_slope = loglog_slope(e, dc);
    table.mass_slope = loglog_slope(e, m);
    return table;
}

/// Leading coefficient a of y = a x + b x^2 fitted by least squares.
inline double linear_coefficient(const std::vector<double>& x, const std::vector<double>& y) {
    double s11 = 0.0, s12 = 0.0, s22 = 0.0, t1 = 0.0, t2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = x[i], b = x[i] * x[i];
        s11 += a * a;
        s12 += a * b;
        s22 += b * b;
        t1 += a * y[i];
        t2 += b * y[i];
    }
    return (t1 * s22 - t2 * s12) / (s11 * s22 - s12 * s12);
}

/// N = 3: ratio of the eps-linear coefficients of the gradient deviation and of the mass.
inline double gradient_mass_ratio(const StruweTable& table, int dim) {
    require(dim == 3, ErrorKind::InvalidArgument, "the linear mass law holds only for N = 3");
    const double level = std::pow(sobolev_constant(3), 1.5);
    std::vector<double> e, d, m;
    for (const auto& rec : table.records) {
        e.push_back(rec.epsilon);
        d.push_back(rec.grad_norm_sq - level);
        m.push_back(rec.mass_sq);
    }
    return linear_coefficient(e, d) / linear_coefficient(e, m);
}

/// pi^2 / (4 (R - tau)^2): the quotient of int eta'^2 and int eta^2 over the cosine arc.
inline double cosine_ratio_target(const CutoffSpec& cutoff, double radius) {
    const double width = radius - cutoff.tau;
    return std::numbers::pi * std::numbers::pi / (4.0 * width * width);
}

}  // namespace normsolve
