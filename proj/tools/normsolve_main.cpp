#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "normsolve/normsolve.hpp"

using namespace normsolve;
namespace fs = std::filesystem;

namespace {

struct Flags {
    std::string config;
    std::optional<int> dim;
    std::optional<double> radius;
    std::optional<std::size_t> n;
    std::optional<double> mu;
    std::optional<double> rho;
    std::optional<double> p;
    std::optional<double> tol;
    std::optional<int> path_points;
    std::string mu_grid;
    std::string out;
    std::string format;
    std::string snapshot;
};

RunConfig build_config(const Flags& f) {
    RunConfig c;
    if (!f.config.empty()) {
        std::ifstream in(f.config);
        require(bool(in), ErrorKind::InvalidArgument, "cannot open config '" + f.config + "'");
        apply_config(c, parse_config(in));
    }
    if (f.dim) c.dim = *f.dim;
    if (f.radius) c.radius = *f.radius;
    if (f.n) c.n = *f.n;
    if (f.mu) {
        c.mu = *f.mu;
        c.rho.reset();
    }
    if (f.rho) {
        c.rho = *f.rho;
        c.mu.reset();
    }
    if (f.p) c.p = *f.p;
    if (f.tol) c.tol = *f.tol;
    if (f.path_points) c.path_points = *f.path_points;
    if (!f.mu_grid.empty()) c.mu_grid = parse_mu_grid(f.mu_grid);
    if (!f.out.empty()) c.out_dir = f.out;
    if (!f.format.empty()) apply_config(c, {{"format", f.format}});
    if (!f.snapshot.empty()) c.snapshot = f.snapshot;
    c.validate();
    return c;
}

struct Setup {
    GridPtr g;
    EigenPair eig;
    ThresholdSet t;
};

Setup setup(const RunConfig& c) {
    Setup s;
    s.g = make_radial_grid(c.dim, c.radius, c.n);
    s.eig = principal_eigenpair(s.g);
    s.t = make_thresholds(s.g, s.eig.lambda1);
    return s;
}

std::string out_path(const RunConfig& c, const std::string& name) {
    fs::create_directories(c.out_dir);
    return (fs::path(c.out_dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    require(bool(f), ErrorKind::InvalidArgument, "cannot write '" + path + "'");
    f << text;
}

Json thresholds_json(const RunConfig& c, const Setup& s) {
    Json j;
    j["dim"] = c.dim;
    j["radius"] = c.radius;
    j["n"] = c.n;
    j["S"] = s.t.S;
    j["lambda1"] = s.t.lambda1;
    j["mu_star"] = s.t.mu_star;
    j["rho_star"] = s.t.rho_star;
    if (c.mu || c.rho) {
        const double mu = c.resolved_mu();
        j["mu"] = mu;
        if (mu > 0.0) {
            j["alpha_bar"] = alpha_bar(s.t.S, mu, c.dim);
            j["mp_quantum"] = mp_quantum(s.t.S, mu, c.dim);
        }
    }
    return j;
}

int cmd_thresholds(const RunConfig& c) {
    const auto s = setup(c);
    const Json j = thresholds_json(c, s);
    if (c.format == EmitFormat::json) {
        write_text(out_path(c, "thresholds.json"), j.dump(2) + "\n");
    } else {
        std::string csv = "key,value\n";
        for (const auto& [k, v] : j.items()) csv += k + "," + format_real(v.get<double>()) + "\n";
        write_text(out_path(c, "thresholds.csv"), csv);
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_bubbles(const RunConfig& c) {
    const auto g = make_radial_grid(c.dim, c.radius, c.n);
    const CutoffSpec cutoff = default_cutoff(c.radius);
    const auto tab = struwe_table(*g, cutoff, {0.2, 0.1, 0.05, 0.025});
    Json j;
    j["dim"] = c.dim;
    j["n"] = c.n;
    j["cutoff"] = to_string(cutoff.kind);
    j["grad_slope"] = tab.grad_slope;
    j["crit_slope"] = tab.crit_slope;
    j["mass_slope"] = tab.mass_slope;
    j["rows"] = tab.records.size();
    if (c.format == EmitFormat::json) {
        Json rows = Json::array();
        for (const auto& r : tab.records) {
            rows.push_back({{"epsilon", r.epsilon}, {"grad_norm_sq", r.grad_norm_sq},
                            {"crit_norm", r.crit_norm}, {"mass_sq", r.mass_sq}});
        }
        Json full = j;
        full["rows"] = rows;
        write_text(out_path(c, "struwe.json"), full.dump(2) + "\n");
    } else {
        std::ostringstream os;
        write_struwe_csv(os, tab);
        write_text(out_path(c, "struwe.csv"), os.str());
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

Json solution_summary(const RunConfig& c, const SolutionRecord& rec, const CertReport& cert) {
    Json j = to_json(rec);
    j["rho"] = rho_from_mu(rec.mu, c.dim);
    const Field U = rescale_solution(rec.u, rho_from_mu(rec.mu, c.dim));
    j["unscaled_residual"] = unscaled_residual(U, rec.lambda);
    j["scaled_residual"] = pair_residual(rec.u, rec.lambda, rec.params());
    j["certificate"] = to_json(cert);
    return j;
}

int cmd_solve_min(const RunConfig& c) {
    const auto s = setup(c);
    const double mu = c.resolved_mu();
    const auto params = make_energy_params(c.dim, mu, c.p);
    FlowOptions fo;
    fo.tol = c.tol;
    const auto flow = solve_local_min(params, s.t, s.eig.phi1, fo);
    NewtonOptions no;
    no.tol = c.newton_tol;
    const auto rec = newton_refine(flow, no);
    save_snapshot(out_path(c, "local_min.snap"), rec);
    const auto cert = certify(rec, s.t);
    Json j = solution_summary(c, rec, cert);
    j["mu_input"] = c.mu ? "mu" : "rho";
    write_text(out_path(c, "local_min.json"), j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    return cert.lemma_flags_ok() && cert.level_ok ? 0 : 1;
}

int cmd_solve_mp(const RunConfig& c) {
    const auto s = setup(c);
    const double mu = c.resolved_mu();
    const auto params = make_energy_params(c.dim, mu, c.p);
    EndpointOptions eo;
    eo.mu_double_star = c.mu_double_star;
    const auto ep = build_endpoints(s.g, params, s.t, eo);
    MinimaxOptions mo;
    mo.tol = c.mp_tol;
    mo.newton.tol = c.newton_tol;
    if (h_defined(mu, c.dim)) mo.g_constant = calibrate_g_constant(s.g, s.t, {mu});
    const auto rep = minimax_descent(initial_path(ep, c.path_points), params, s.t, mo);
    const auto mn = newton_refine(solve_local_min(params, s.t, ep.w0));
    Json j;
    j["mu"] = mu;
    j["eps1"] = ep.eps1;
    j["c_estimate"] = rep.c_estimate;
    j["sweeps"] = rep.sweeps;
    j["bubbling"] = rep.bubbling;
    j["m_mu"] = mn.energy;
    j["quantum"] = rep.bound_checks.lower;
    j["lower_ok"] = rep.bound_checks.lower_ok;
    j["upper"] = rep.bound_checks.upper ? json_real(*rep.bound_checks.upper) : Json(nullptr);
    j["upper_ok"] = rep.bound_checks.upper_ok;
    bool ok = rep.bound_checks.lower_ok && (!rep.bound_checks.upper || rep.bound_checks.upper_ok);
    if (rep.saddle) {
        save_snapshot(out_path(c, "mountain_pass.snap"), *rep.saddle);
        const auto cert = certify(*rep.saddle, s.t, {mn.energy, mo.g_constant, 1e-6});
        j["saddle"] = solution_summary(c, *rep.saddle, cert);
        ok = ok && cert.lemma_flags_ok() && cert.level_ok;
    } else {
        j["saddle"] = nullptr;
        j["refine_error"] = rep.refine_error;
        ok = false;
    }
    write_text(out_path(c, "mountain_pass.json"), j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    return ok ? 0 : 1;
}

int cmd_curve(const RunConfig& c) {
    const auto s = setup(c);
    std::vector<double> grid = c.mu_grid;
    if (grid.empty()) {
        const double a = s.t.mu_star / 64.0, b = s.t.mu_star / 4.0;
        for (int i = 0; i < 12; ++i) grid.push_back(a * std::pow(b / a, (i + 0.5) / 12.0));
    }
    CurveOptions co;
    co.path_points = c.path_points;
    co.mu_double_star = c.mu_double_star;
    co.flow.tol = c.tol;
    co.minimax.tol = c.mp_tol;
    co.newton.tol = c.newton_tol;
    co.threads = c.threads;
    const auto tab = cmu_curve(s.g, s.t, grid, co);
    if (c.format == EmitFormat::json) {
        write_text(out_path(c, "curve.json"), to_json(tab).dump(2) + "\n");
    } else {
        std::ostringstream os;
        write_curve_csv(os, tab);
        write_text(out_path(c, "curve.csv"), os.str());
    }
    Json j = to_json(tab);
    j.erase("rows");
    j["rows"] = tab.rows.size();
    std::cout << j.dump(2) << "\n";
    return tab.monotone && tab.sandwich ? 0 : 1;
}

int cmd_check(const RunConfig& c) {
    require(!c.snapshot.empty(), ErrorKind::InvalidArgument, "check needs --snapshot FILE");
    const auto snap = load_snapshot(c.snapshot);
    auto rec = snap.record;
    const double stored = rec.energy;
    finalize_record(rec);
    const auto eig = principal_eigenpair(snap.grid);
    const auto t = make_thresholds(snap.grid, eig.lambda1);
    const auto cert = certify(rec, t);
    Json j = to_json(cert);
    j["kind"] = to_string(rec.kind);
    j["stored_energy"] = stored;
    j["residual"] = json_real(rec.residual);
    std::cout << j.dump(2) << "\n";
    return cert.lemma_flags_ok() && cert.level_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Normalized solutions of critical semilinear problems on a ball"};
    app.require_subcommand(1);
    Flags f;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", f.config, "flat key = value config file");
        sub->add_option("--dim", f.dim, "space dimension N >= 3");
        sub->add_option("--radius", f.radius, "ball radius");
        sub->add_option("--n", f.n, "radial cells");
        auto* mu = sub->add_option("--mu", f.mu, "nonlinearity strength");
        auto* rho = sub->add_option("--rho", f.rho, "prescribed mass (mu = rho^(4/(N-2)))");
        mu->excludes(rho);
        sub->add_option("--p", f.p, "exponent, default critical");
        sub->add_option("--tol", f.tol, "flow tolerance");
        sub->add_option("--path-points", f.path_points, "path segments m");
        sub->add_option("--mu-grid", f.mu_grid, "curve grid a:b:k");
        sub->add_option("--out", f.out, "output directory");
        sub->add_option("--format", f.format, "csv or json");
        sub->add_option("--snapshot", f.snapshot, "snapshot to certify");
    };
    std::vector<std::pair<CLI::App*, int (*)(const RunConfig&)>> subs = {
        {app.add_subcommand("thresholds", "constants table"), cmd_thresholds},
        {app.add_subcommand("bubbles", "Struwe expansion table"), cmd_bubbles},
        {app.add_subcommand("solve-min", "local minimizer"), cmd_solve_min},
        {app.add_subcommand("solve-mp", "mountain-pass solution"), cmd_solve_mp},
        {app.add_subcommand("curve", "c_mu over a mu grid"), cmd_curve},
        {app.add_subcommand("check", "certify a snapshot"), cmd_check},
    };
    for (auto& [sub, fn] : subs) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    RunConfig cfg;
    try {
        cfg = build_config(f);
    } catch (const Error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }
    for (auto& [sub, fn] : subs) {
        if (!sub->parsed()) continue;
        try {
            return fn(cfg);
        } catch (const Error& e) {
            Json j;
            j["error"] = to_string(e.kind());
            j["message"] = e.what();
            j["subcommand"] = sub->get_name();
            std::cout << j.dump(2) << "\n";
            return 1;
        } catch (const std::exception& e) {
            Json j;
            j["error"] = "io";
            j["message"] = e.what();
            std::cout << j.dump(2) << "\n";
            return 1;
        }
    }
    return 2;
}
