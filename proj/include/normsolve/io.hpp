#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "normsolve/diagnostics.hpp"
#include "normsolve/error.hpp"
#include "normsolve/grid.hpp"
#include "normsolve/mountainpass.hpp"
#include "normsolve/record.hpp"

namespace normsolve {

/// Shortest text that reads back to the same double (at most 17 significant digits).
inline std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_real(const std::string& s, const std::string& what) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e) {
        if (s == "nan") return NAN;
        throw Error(ErrorKind::InvalidArgument, "cannot parse " + what + " '" + s + "'");
    }
    return v;
}

// --- snapshots ---------------------------------------------------------------

struct Snapshot {
    GridPtr grid;
    SolutionRecord record;
};

/// Header `normsolve-v1 N R n mu lambda energy kind`, then one node value per line.
inline void write_snapshot(std::ostream& os, const SolutionRecord& rec) {
    const auto& g = *rec.u.grid;
    os << "normsolve-v1 " << g.dim() << ' ' << format_real(g.radius()) << ' ' << g.size() << ' '
       << format_real(rec.mu) << ' ' << format_real(rec.lambda) << ' ' << format_real(rec.energy)
       << ' ' << to_string(rec.kind) << '\n';
    for (double v : rec.u.values) os << format_real(v) << '\n';
}

inline void save_snapshot(const std::string& path, const SolutionRecord& rec) {
    std::ofstream f(path);
    require(bool(f), ErrorKind::InvalidArgument, "cannot open '" + path + "' for writing");
    write_snapshot(f, rec);
    require(bool(f), ErrorKind::InvalidArgument, "failed writing '" + path + "'");
}

/// Reads a snapshot onto a fresh grid; the exponent is the critical one of that dimension.
inline Snapshot read_snapshot(std::istream& is) {
    std::string magic, kind, R, mu, lambda, en;
    int dim = 0;
    std::size_t n = 0;
    require(bool(is >> magic) && magic == "normsolve-v1", ErrorKind::InvalidArgument,
            "not a normsolve-v1 snapshot");
    require(bool(is >> dim >> R >> n >> mu >> lambda >> en >> kind), ErrorKind::InvalidArgument,
            "truncated snapshot header");
    Snapshot s;
    s.grid = make_radial_grid(dim, parse_real(R, "radius"), n);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::string tok;
        require(bool(is >> tok), ErrorKind::InvalidArgument, "snapshot has too few node values");
        v[i] = parse_real(tok, "node value");
    }
    std::string extra;
    require(!(is >> extra), ErrorKind::InvalidArgument, "snapshot has trailing data");
    auto& r = s.record;
    r.u = Field(s.grid, std::move(v));
    r.mu = parse_real(mu, "mu");
    r.exponent_p = s.grid->critical_exponent();
    r.lambda = parse_real(lambda, "lambda");
    r.kind = solution_kind_from_string(kind);
    r.energy = parse_real(en, "energy");
    return s;
}

inline Snapshot load_snapshot(const std::string& path) {
    std::ifstream f(path);
    require(bool(f), ErrorKind::InvalidArgument, "cannot open snapshot '" + path + "'");
    return read_snapshot(f);
}

// --- configuration ------------------------------------------------------------

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Flat `key = value` file; `#` starts a comment. Later assignments override earlier ones.
inline std::map<std::string, std::string> parse_config(std::istream& is) {
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos, ErrorKind::InvalidArgument,
                "config line " + std::to_string(lineno) + " is not key = value");
        const std::string key = trim(line.substr(0, eq));
        require(!key.empty(), ErrorKind::InvalidArgument,
                "config line " + std::to_string(lineno) + " has an empty key");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

/// `a:b:k` gives k evenly spaced values from a to b inclusive.
inline std::vector<double> parse_mu_grid(const std::string& spec) {
    const auto c1 = spec.find(':');
    const auto c2 = c1 == std::string::npos ? c1 : spec.find(':', c1 + 1);
    require(c2 != std::string::npos, ErrorKind::InvalidArgument,
            "mu grid must have the form a:b:k");
    const double a = parse_real(spec.substr(0, c1), "mu grid start");
    const double b = parse_real(spec.substr(c1 + 1, c2 - c1 - 1), "mu grid end");
    const double kf = parse_real(spec.substr(c2 + 1), "mu grid count");
    require(kf >= 2.0 && kf == std::floor(kf), ErrorKind::InvalidArgument,
            "mu grid count must be an integer >= 2");
    require(a > 0.0 && b > a, ErrorKind::InvalidArgument, "mu grid needs 0 < a < b");
    const int k = int(kf);
    std::vector<double> out(k);
    for (int i = 0; i < k; ++i) out[i] = a + (b - a) * i / (k - 1);
    return out;
}

enum class EmitFormat { csv, json };

struct RunConfig {
    int dim = 3;
    double radius = 1.0;
    std::size_t n = 2048;
    std::optional<double> mu;
    std::optional<double> rho;
    /// Nonpositive selects the critical exponent.
    double p = 0.0;
    double tol = 1e-8;
    double newton_tol = 1e-11;
    double mp_tol = 1e-6;
    int path_points = 33;
    double mu_double_star = 0.0;
    std::vector<double> mu_grid;
    std::string out_dir = ".";
    EmitFormat format = EmitFormat::csv;
    int threads = 0;
    std::string snapshot;

    /// mu itself, or rho^{4/(N-2)} when rho was given.
    double resolved_mu() const {
        require(mu.has_value() != rho.has_value(), ErrorKind::InvalidArgument,
                "exactly one of mu and rho must be given");
        return mu ? *mu : mu_from_rho(*rho, dim);
    }

    void validate() const {
        require(dim >= 3, ErrorKind::InvalidArgument, "dim must be at least 3");
        require(radius > 0.0, ErrorKind::InvalidArgument, "radius must be positive");
        require(n >= 16, ErrorKind::InvalidArgument, "n must be at least 16");
        require(!(mu && rho), ErrorKind::InvalidArgument, "mu and rho are exclusive");
        require(!mu || *mu >= 0.0, ErrorKind::InvalidArgument, "mu must be nonnegative");
        require(!rho || *rho > 0.0, ErrorKind::InvalidArgument, "rho must be positive");
        require(tol > 0.0 && newton_tol > 0.0 && mp_tol > 0.0, ErrorKind::InvalidArgument,
                "tolerances must be positive");
        require(path_points >= 16, ErrorKind::InvalidArgument, "path-points must be >= 16");
    }
};

/// Applies recognized keys of a parsed config file; unknown keys are rejected.
inline void apply_config(RunConfig& c, const std::map<std::string, std::string>& kv) {
    for (const auto& [k, v] : kv) {
        if (k == "dim") {
            c.dim = int(parse_real(v, k));
        } else if (k == "radius") {
            c.radius = parse_real(v, k);
        } else if (k == "n") {
            c.n = std::size_t(parse_real(v, k));
        } else if (k == "mu") {
            c.mu = parse_real(v, k);
        } else if (k == "rho") {
            c.rho = parse_real(v, k);
        } else if (k == "p") {
            c.p = parse_real(v, k);
        } else if (k == "tol") {
            c.tol = parse_real(v, k);
        } else if (k == "newton_tol") {
            c.newton_tol = parse_real(v, k);
        } else if (k == "mp_tol") {
            c.mp_tol = parse_real(v, k);
        } else if (k == "path_points") {
            c.path_points = int(parse_real(v, k));
        } else if (k == "mu_double_star") {
            c.mu_double_star = parse_real(v, k);
        } else if (k == "mu_grid") {
            c.mu_grid = parse_mu_grid(v);
        } else if (k == "out") {
            c.out_dir = v;
        } else if (k == "format") {
            require(v == "csv" || v == "json", ErrorKind::InvalidArgument,
                    "format must be csv or json");
            c.format = v == "csv" ? EmitFormat::csv : EmitFormat::json;
        } else if (k == "threads") {
            c.threads = int(parse_real(v, k));
        } else if (k == "snapshot") {
            c.snapshot = v;
        } else {
            throw Error(ErrorKind::InvalidArgument, "unknown config key '" + k + "'");
        }
    }
}

// --- tables -------------------------------------------------------------------

inline void write_curve_csv(std::ostream& os, const CurveTable& tab) {
    os << "mu,m_mu,c_mu,quantum,g_mu,lambda_min,lambda_mp,flags\n";
    for (const auto& r : tab.rows) {
        os << format_real(r.mu) << ',' << format_real(r.m_mu) << ',' << format_real(r.c_mu) << ','
           << format_real(r.quantum) << ',' << format_real(r.g_mu) << ','
           << format_real(r.lambda_min) << ',' << format_real(r.lambda_mp) << ',' << r.flags()
           << '\n';
    }
}

inline void write_struwe_csv(std::ostream& os, const StruweTable& tab) {
    os << "epsilon,grad_norm_sq,crit_norm,mass_sq\n";
    for (const auto& r : tab.records) {
        os << format_real(r.epsilon) << ',' << format_real(r.grad_norm_sq) << ','
           << format_real(r.crit_norm) << ',' << format_real(r.mass_sq) << '\n';
    }
}

using Json = nlohmann::ordered_json;

/// NaN and infinities become null.
inline Json json_real(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json(const CertReport& c) {
    Json j;
    j["pohozaev_residual_rel"] = json_real(c.pohozaev_residual_rel);
    j["lambda_sign"] = to_string(c.lambda_sign);
    j["energy_floor_ok"] = c.energy_floor_ok;
    j["grad_cap_ok"] = c.grad_cap_ok;
    j["quantum_gap"] = json_real(c.quantum_gap);
    j["quantum_margin"] = json_real(c.quantum_margin);
    j["concentration_flag"] = c.concentration_flag;
    j["energy"] = json_real(c.energy);
    j["quantum"] = json_real(c.quantum);
    j["alpha_bar"] = json_real(c.alpha);
    j["region"] = to_string(c.region);
    j["level_ok"] = c.level_ok;
    j["upper"] = c.upper ? json_real(*c.upper) : Json(nullptr);
    return j;
}

inline Json to_json(const SolutionRecord& r) {
    Json j;
    j["kind"] = to_string(r.kind);
    j["mu"] = json_real(r.mu);
    j["exponent_p"] = json_real(r.exponent_p);
    j["lambda"] = json_real(r.lambda);
    j["energy"] = json_real(r.energy);
    j["residual"] = json_real(r.residual);
    j["grad_norm_sq"] = json_real(r.grad_norm_sq);
    j["pohozaev_residual"] = json_real(r.pohozaev_residual);
    j["iterations"] = r.iterations;
    return j;
}

inline Json to_json(const CurveTable& tab) {
    Json j;
    j["g_constant"] = json_real(tab.g_constant);
    j["delta0"] = json_real(tab.delta0);
    j["monotone"] = tab.monotone;
    j["sandwich"] = tab.sandwich;
    j["conditioned_rows"] = tab.conditioned_rows;
    j["slope_fraction"] = json_real(tab.slope_fraction);
    Json rows = Json::array();
    for (const auto& r : tab.rows) {
        Json x;
        x["mu"] = json_real(r.mu);
        x["m_mu"] = json_real(r.m_mu);
        x["c_mu"] = json_real(r.c_mu);
        x["saddle_energy"] = json_real(r.saddle_energy);
        x["quantum"] = json_real(r.quantum);
        x["g_mu"] = json_real(r.g_mu);
        x["lambda_min"] = json_real(r.lambda_min);
        x["lambda_mp"] = json_real(r.lambda_mp);
        x["slope"] = json_real(r.slope);
        x["slope_bound"] = json_real(r.slope_bound);
        x["flags"] = r.flags();
        x["error"] = r.error;
        rows.push_back(std::move(x));
    }
    j["rows"] = std::move(rows);
    return j;
}

}  // namespace normsolve
