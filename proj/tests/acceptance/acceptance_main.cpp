#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "normsolve/normsolve.hpp"

using namespace normsolve;
constexpr double kPi = std::numbers::pi;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

struct Case {
    GridPtr g;
    EigenPair eig;
    ThresholdSet t;
};

Case make_case(int dim, std::size_t n) {
    auto g = make_radial_grid(dim, 1.0, n);
    auto eig = principal_eigenpair(g);
    auto t = make_thresholds(g, eig.lambda1);
    return Case{g, eig, t};
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

template <class F>
double golden_max(F&& f, double a, double b) {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 300 && (b - a) > 1e-15 * (1.0 + std::abs(a)); ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    return f(0.5 * (a + b));
}

Field smooth_random(const GridPtr& g, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    double c[4];
    for (double& v : c) v = normal(rng);
    c[0] = std::abs(c[0]) + 1.0;
    const double R = g->radius();
    return make_field(g, [&](double r) {
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += c[k] * std::cos((k + 0.5) * kPi * r / R) / (1.0 + k);
        return s;
    });
}

Outcome eigenvalue() {
    double lam[3];
    int k = 0;
    for (std::size_t n : {1024u, 2048u, 4096u}) lam[k++] = principal_eigenpair(make_radial_grid(3, 1.0, n)).lambda1;
    const double err = std::abs(lam[2] - kPi * kPi);
    const double ratio = (lam[0] - lam[1]) / (lam[1] - lam[2]);
    return {err < 1e-3 && std::abs(ratio - 4.0) <= 0.3,
            fmt("|lambda1 - pi^2| = %.3e at n=4096, doubling ratio %.4f", err, ratio)};
}

Outcome fmax_oracle() {
    std::mt19937_64 rng(20261019);
    std::uniform_real_distribution<double> uni(0.1, 10.0);
    const int dims[] = {3, 4, 5, 6};
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const int dim = dims[i % 4];
        const double A = uni(rng), B = uni(rng);
        const double p = 2.0 * dim / (dim - 2.0);
        auto f = [&](double s) { return A * s / 2.0 - B * std::pow(s, p / 2.0) / p; };
        const auto r = fmax(A, B, dim);
        const double numeric = golden_max(f, 0.0, 4.0 * r.s_bar + 1.0);
        worst = std::max(worst, std::abs(r.value - numeric) / std::max(1.0, std::abs(numeric)));
    }
    return {worst < 1e-8, fmt("worst deviation %.3e over 100 cases", worst)};
}

Outcome sobolev_limit() {
    const std::vector<double> eps{0.1, 0.05, 0.025};
    double worst = 0.0;
    std::ostringstream os;
    for (int dim : {3, 4, 5}) {
        auto g = make_radial_grid(dim, 1.0, 8192);
        std::vector<double> q;
        for (double e : eps) q.push_back(bubble_norms(*g, e, default_cutoff(1.0)).grad_norm_sq);
        const double f = std::pow(2.0, dim - 2.0);
        const double a = (f * q[1] - q[0]) / (f - 1.0);
        const double b = (f * q[2] - q[1]) / (f - 1.0);
        const double limit = b + (b - a) / (2.0 * f - 1.0);
        const double target = std::pow(sobolev_constant(dim), 0.5 * dim);
        const double rel = std::abs(limit / target - 1.0);
        worst = std::max(worst, rel);
        os << " N=" << dim << ":" << fmt("%.2e", rel);
    }
    return {worst < 0.01, "relative error vs S^(N/2)" + os.str()};
}

Outcome struwe_slopes() {
    const std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
    bool ok = true;
    std::ostringstream os;
    for (int dim : {3, 4, 5}) {
        const auto t = struwe_table(*make_radial_grid(dim, 1.0, 8192), default_cutoff(1.0), eps);
        const double mass_target = dim == 3 ? 1.0 : 2.0;
        ok = ok && std::abs(t.grad_slope - (dim - 2.0)) <= 0.25 && std::abs(t.crit_slope - dim) <= 0.25 &&
             std::abs(t.mass_slope - mass_target) <= 0.25;
        os << fmt(" N=%d:(%.3f,%.3f,%.3f)", dim, t.grad_slope, t.crit_slope, t.mass_slope);
    }
    return {ok, "slopes (grad,crit,mass)" + os.str()};
}

Outcome cosine_ratio() {
    auto g = make_radial_grid(3, 1.0, 8192);
    const auto cutoff = CutoffSpec::cosine(0.0);
    const auto t = struwe_table(*g, cutoff, {0.2, 0.1, 0.05, 0.025});
    const double ratio = gradient_mass_ratio(t, 3) / cosine_ratio_target(cutoff, 1.0);
    return {std::abs(ratio - 1.0) <= 0.05, fmt("ratio / (pi^2/4) = %.4f", ratio)};
}

struct MinCase {
    Case c;
    EnergyParams params;
    SolutionRecord rec;
};

MinCase local_min_case(int dim) {
    MinCase m{make_case(dim, 2048), {}, {}};
    m.params = make_energy_params(dim, m.c.t.mu_star / 4.0);
    NewtonOptions no;
    no.tol = 1e-11;
    m.rec = newton_refine(solve_local_min(m.params, m.c.t, m.c.eig.phi1), no);
    return m;
}

Outcome local_minimizers() {
    bool ok = true;
    std::ostringstream os;
    for (int dim : {3, 4, 5}) {
        const auto m = local_min_case(dim);
        const auto& r = m.rec;
        const double alpha = alpha_bar(m.c.t.S, m.params.mu, dim);
        const double quantum = mp_quantum(m.c.t.S, m.params.mu, dim);
        bool positive = true;
        for (double v : r.u.values) positive = positive && v > 0.0;
        const bool good = r.residual < 1e-11 && r.grad_norm_sq < alpha && r.energy < quantum && r.lambda > 0.0 &&
                          r.pohozaev_residual < 1e-4 && positive;
        ok = ok && good;
        os << fmt(" N=%d:E=%.6f,lambda=%.4f,res=%.1e,poh=%.1e%s", dim, r.energy, r.lambda, r.residual,
                  r.pohozaev_residual, good ? "" : "(fail)");
    }
    return {ok, os.str().substr(1)};
}

Outcome mountain_pass() {
    bool ok = true;
    std::ostringstream os;
    for (int dim : {3, 4, 5}) {
        const auto m = local_min_case(dim);
        const double mu = m.params.mu;
        const double C = calibrate_g_constant(m.c.g, m.c.t, {mu});
        MinimaxOptions opts;
        opts.g_constant = C;
        const auto ep = build_endpoints(m.c.g, m.params, m.c.t);
        const auto rep = minimax_descent(initial_path(ep, 33), m.params, m.c.t, opts);
        const double quantum = mp_quantum(m.c.t.S, mu, dim);
        const double g = g_upper(mu, m.c.t, C);
        if (!rep.saddle) {
            ok = false;
            os << fmt(" N=%d:no saddle (%s)", dim, rep.bubbling ? "bubbling" : rep.refine_error.c_str());
            continue;
        }
        const auto& sd = *rep.saddle;
        const double gap = sd.energy - m.rec.energy;
        const double margin = quantum - m.rec.energy;
        const bool good = rep.c_estimate >= quantum - 1e-6 && rep.c_estimate <= g + 1e-6 &&
                          sd.energy >= quantum - 1e-6 && sd.energy <= g + 1e-6 && margin > 0.0 &&
                          gap >= margin - 1e-6 && l2_distance(sd.u, m.rec.u) > 1e-3 && sd.lambda > 0.0 &&
                          sd.grad_norm_sq <= dim * sd.energy;
        ok = ok && good;
        os << fmt(" N=%d:[%.6f<=c=%.6f<=%.6f],gap=%.4f,lambda=%.4f,C=%.3g%s", dim, quantum, sd.energy, g, gap,
                  sd.lambda, C, good ? "" : "(fail)");
    }
    return {ok, os.str().substr(1)};
}

Outcome curve_properties() {
    const auto c = make_case(3, 2048);
    const double a = c.t.mu_star / 64.0, b = c.t.mu_star / 4.0;
    std::vector<double> mus;
    for (int i = 0; i < 12; ++i) mus.push_back(a * std::pow(b / a, (i + 0.5) / 12.0));
    const auto tab = cmu_curve(c.g, c.t, mus, CurveOptions{});
    int ok_rows = 0;
    for (const auto& r : tab.rows) ok_rows += r.ok();
    const bool pass = ok_rows == 12 && tab.monotone && tab.sandwich && tab.conditioned_rows > 0 &&
                      tab.slope_fraction >= 0.5;
    return {pass, fmt("%d/12 rows solved, monotone=%d, sandwich=%d, slope fraction %.2f over %d rows, C=%.3g",
                      ok_rows, tab.monotone, tab.sandwich, tab.slope_fraction, tab.conditioned_rows,
                      tab.g_constant)};
}

Outcome change_of_variables() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(0.05, 3.0);
    double worst = 0.0;
    for (int dim : {3, 4, 5, 6}) {
        for (int i = 0; i < 25; ++i) {
            const double rho = uni(rng);
            worst = std::max(worst, std::abs(rho_from_mu(mu_from_rho(rho, dim), dim) - rho) / rho);
        }
    }
    const auto c = make_case(3, 1024);
    const double rho = 0.5;
    const auto params = make_energy_params(3, mu_from_rho(rho, 3));
    NewtonOptions no;
    no.tol = 1e-11;
    const auto rec = newton_refine(solve_local_min(params, c.t, c.eig.phi1), no);
    const double scaled_res = pair_residual(rec.u, rec.lambda, params);
    const double unscaled = unscaled_residual(rescale_solution(rec.u, rho), rec.lambda);
    const bool pass = worst <= 1e-15 && scaled_res < 1e-11 && unscaled < 1e-11;
    return {pass, fmt("round-trip error %.2e, residual scaled %.2e unscaled %.2e", worst, scaled_res, unscaled)};
}

Outcome gradient_fd() {
    std::mt19937_64 rng(11);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const int dim = 3 + i % 3;
        auto g = make_radial_grid(dim, 1.0, 512);
        const auto params = make_energy_params(dim, 0.8);
        const Field u = smooth_random(g, rng);
        const Field h = smooth_random(g, rng);
        const double lambda = 2.5;
        auto action = [&](const Field& v) { return energy(v, params) - 0.5 * lambda * integrate(*g, v, 2.0); };
        const double t = 1e-5;
        const double fd = (action(combine(1.0, u, t, h)) - action(combine(1.0, u, -t, h))) / (2 * t);
        const double exact = inner(free_gradient(u, lambda, params), h);
        worst = std::max(worst, std::abs(fd - exact) / std::abs(exact));
    }
    return {worst < 1e-5, fmt("worst relative error %.2e over 50 pairs", worst)};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "eigenvalue", 1.0, eigenvalue},
        {2, "fmax-oracle", 1.0, fmax_oracle},
        {3, "sobolev-limit", 10.0, sobolev_limit},
        {4, "struwe-exponents", 30.0, struwe_slopes},
        {5, "cosine-ratio", 30.0, cosine_ratio},
        {6, "local-minimizer", 180.0, local_minimizers},
        {7, "mountain-pass", 1800.0, mountain_pass},
        {8, "curve", 3600.0, curve_properties},
        {9, "change-of-variables", 1.0, change_of_variables},
        {10, "gradient-fd", 5.0, gradient_fd},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_budget = secs <= c.budget_s;
        const bool pass = o.pass && in_budget;
        failures += !pass;
        std::printf("%s criterion %d (%s) %.2fs%s: %s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs,
                    in_budget ? "" : " over budget", o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
