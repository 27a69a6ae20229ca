#include "shelab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "shelab/experiments.hpp"
#include "shelab/malliavin.hpp"
#include "shelab/parallel.hpp"
#include "shelab/sewing.hpp"
#include "shelab/solver.hpp"
#include "shelab/torus_heat.hpp"

namespace shelab {

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // Shorten when a shorter representation round-trips.
    for (int prec = 1; prec < 17; ++prec) {
        char cand[40];
        std::snprintf(cand, sizeof cand, "%.*g", prec, v);
        if (std::strtod(cand, nullptr) == v) return cand;
    }
    return buf;
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": empty key");
        if (key.find('.') == std::string::npos && !section.empty())
            key = section + "." + key;
        cfg.kv_[key] = value;
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

bool KeyValueConfig::has(const std::string& key) const {
    return kv_.count(key) != 0;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
    kv_[key] = value;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

std::string KeyValueConfig::require_string(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end())
        throw ConfigError("missing required config key: " + key);
    return it->second;
}

double KeyValueConfig::get_double(const std::string& key,
                                  double fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || *end != '\0')
        throw ConfigError("config key " + key + ": not a number: '" +
                          it->second + "'");
    return v;
}

std::size_t KeyValueConfig::get_size(const std::string& key,
                                     std::size_t fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    char* end = nullptr;
    const auto v = std::strtoull(it->second.c_str(), &end, 10);
    if (end == it->second.c_str() || *end != '\0')
        throw ConfigError("config key " + key + ": not a nonnegative "
                          "integer: '" + it->second + "'");
    return static_cast<std::size_t>(v);
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key,
                                      std::uint64_t fallback) const {
    return static_cast<std::uint64_t>(get_size(key, fallback));
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key " + key + ": not a boolean: '" + v + "'");
}

std::vector<double>
KeyValueConfig::get_double_list(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return {};
    std::vector<double> out;
    std::istringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0')
            throw ConfigError("config key " + key +
                              ": bad list element: '" + tok + "'");
        out.push_back(v);
    }
    return out;
}

std::string KeyValueConfig::canonical() const {
    std::string out;
    for (const auto& [k, v] : kv_) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

std::uint64_t KeyValueConfig::hash() const {
    const std::string text = canonical();
    std::uint64_t h = 0xCBF29CE484222325ull; // FNV-1a 64
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

namespace {

// ---------------------------------------------------------------------
// shared construction helpers

SolverConfig make_solver_config(const KeyValueConfig& cfg,
                                std::size_t default_n_x = 128,
                                std::size_t default_n_t = 16384,
                                const std::string& default_sigma = "one") {
    SolverConfig sc;
    sc.n_x = cfg.get_size("solver.n_x", default_n_x);
    sc.n_t = cfg.get_size("solver.n_t", default_n_t);
    sc.horizon = cfg.get_double("solver.horizon", 0.25);
    if (!Fft::is_pow2(sc.n_x))
        throw ConfigError("solver.n_x must be a power of two");
    if (sc.n_t == 0 || !(sc.horizon > 0.0))
        throw ConfigError("solver.n_t and solver.horizon must be positive");
    const std::string sig = cfg.get_string("solver.sigma", default_sigma);
    sc.sigma = make_sigma_by_name(sig, cfg.get_double("solver.sigma_a", 0.75),
                                  cfg.get_double("solver.sigma_b", 0.25));

    const std::string drift_name =
        cfg.get_string("drift.name", "none");
    if (drift_name != "none") {
        DistributionalDrift b = make_drift_by_name(
            drift_name, cfg.get_double("drift.weight", 1.0));
        if (cfg.has("drift.alpha"))
            b.alpha_nominal = cfg.get_double("drift.alpha", b.alpha_nominal);
        double eps = cfg.get_double("drift.eps", 0.0);
        if (eps <= 0.0)
            eps = mollification_scale(
                static_cast<int>(cfg.get_size("drift.mollify_level", 2)));
        sc.drift = mollify(b, eps);
    }
    return sc;
}

DistributionalDrift drift_from_config(const KeyValueConfig& cfg,
                                      const std::string& fallback_name) {
    DistributionalDrift b = make_drift_by_name(
        cfg.get_string("drift.name", fallback_name),
        cfg.get_double("drift.weight", 1.0));
    if (cfg.has("drift.alpha"))
        b.alpha_nominal = cfg.get_double("drift.alpha", b.alpha_nominal);
    return b;
}

EnsembleConfig make_ensemble(const KeyValueConfig& cfg,
                             std::size_t default_replicates) {
    EnsembleConfig ens;
    ens.replicates = cfg.get_size("ensemble.replicates", default_replicates);
    ens.base_seed = cfg.get_u64("ensemble.seed", 20260826ull);
    ens.workers = cfg.get_size("parallel.workers", 1);
    if (ens.replicates == 0)
        throw ConfigError("ensemble.replicates must be positive");
    return ens;
}

std::vector<double> dyadic_list(const KeyValueConfig& cfg,
                                const std::string& key, int lo_exp,
                                int hi_exp) {
    std::vector<double> v = cfg.get_double_list(key);
    if (!v.empty()) return v;
    for (int e = lo_exp; e >= hi_exp; --e) v.push_back(std::pow(2.0, -e));
    return v;
}

FieldState zero_field(std::size_t n_x) {
    FieldState f;
    f.values.assign(n_x, 0.0);
    return f;
}

FieldState profile_field(std::size_t n_x, double amp, bool sine) {
    FieldState f;
    f.values.resize(n_x);
    for (std::size_t j = 0; j < n_x; ++j) {
        const double x = static_cast<double>(j) / static_cast<double>(n_x);
        f.values[j] = sine ? amp * std::sin(2.0 * M_PI * x) : amp;
    }
    return f;
}

// ---------------------------------------------------------------------
// artifact writers

std::ofstream open_out(const std::string& dir, const std::string& name) {
    const std::string path = dir + "/" + name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write artifact: " + path);
    return out;
}

void write_samples_csv(const std::string& dir, const std::string& name,
                       const SampledRate& r,
                       const char* scale_col = "scale") {
    auto out = open_out(dir, name);
    out << scale_col << ",replicate,value\n";
    for (std::size_t q = 0; q < r.scales.size(); ++q)
        for (std::size_t i = 0; i < r.samples[q].size(); ++i)
            out << format_double(r.scales[q]) << ',' << i << ','
                << format_double(r.samples[q][i]) << '\n';
}

void append_rate_rows(std::ostream& out, const std::string& label,
                      const RateReport& fit) {
    for (std::size_t q = 0; q < fit.scales.size(); ++q)
        out << label << ',' << format_double(fit.scales[q]) << ','
            << format_double(fit.values[q]) << ','
            << format_double(fit.stderrs[q]) << '\n';
    out << label << ",slope," << format_double(fit.slope) << ','
        << format_double(fit.slope_stderr) << '\n';
}

void write_svg_loglog(const std::string& dir, const std::string& name,
                      const RateReport& fit, const std::string& title) {
    if (fit.scales.empty()) return;
    const double W = 640, H = 480, m = 60;
    double lx0 = 1e300, lx1 = -1e300, ly0 = 1e300, ly1 = -1e300;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < fit.scales.size(); ++i) {
        if (!(fit.scales[i] > 0.0) || !(fit.values[i] > 0.0)) continue;
        const double lx = std::log10(fit.scales[i]);
        const double ly = std::log10(fit.values[i]);
        pts.emplace_back(lx, ly);
        lx0 = std::min(lx0, lx);
        lx1 = std::max(lx1, lx);
        ly0 = std::min(ly0, ly);
        ly1 = std::max(ly1, ly);
    }
    if (pts.empty()) return;
    if (lx1 - lx0 < 1e-9) lx1 = lx0 + 1.0;
    if (ly1 - ly0 < 1e-9) ly1 = ly0 + 1.0;
    auto X = [&](double lx) { return m + (lx - lx0) / (lx1 - lx0) * (W - 2 * m); };
    auto Y = [&](double ly) { return H - m - (ly - ly0) / (ly1 - ly0) * (H - 2 * m); };

    auto out = open_out(dir, name);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
        << "\" height=\"" << H << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"monospace\">" << title
        << " (slope " << format_double(fit.slope) << ")</text>\n"
        << "<line x1=\"" << m << "\" y1=\"" << H - m << "\" x2=\"" << W - m
        << "\" y2=\"" << H - m << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m
        << "\" y2=\"" << H - m << "\" stroke=\"black\"/>\n";
    // fitted line in log10 coordinates
    const double ln10 = std::log(10.0);
    auto fit_ly = [&](double lx) {
        return (fit.intercept + fit.slope * lx * ln10) / ln10;
    };
    out << "<line x1=\"" << X(lx0) << "\" y1=\"" << Y(fit_ly(lx0))
        << "\" x2=\"" << X(lx1) << "\" y2=\"" << Y(fit_ly(lx1))
        << "\" stroke=\"steelblue\" stroke-width=\"1.5\"/>\n";
    for (const auto& [lx, ly] : pts)
        out << "<circle cx=\"" << X(lx) << "\" cy=\"" << Y(ly)
            << "\" r=\"4\" fill=\"crimson\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"" << H - 20
        << "\" text-anchor=\"middle\" font-family=\"monospace\">log10 "
           "scale</text>\n</svg>\n";
}

// ---------------------------------------------------------------------
// experiment runners; each returns true when its thresholds hold

bool run_validate_kernels(const KeyValueConfig& cfg, const std::string& dir,
                          std::ostream& log) {
    const double eps = cfg.get_double("kernels.eps", 0.5);
    std::vector<double> t_grid = cfg.get_double_list("kernels.t_grid");
    if (t_grid.empty()) t_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
    std::vector<double> x_grid = cfg.get_double_list("kernels.x_grid");
    if (x_grid.empty()) x_grid = {0.0, 0.15, 0.35, 0.75};
    std::vector<double> xb_grid = cfg.get_double_list("kernels.xbar_grid");
    if (xb_grid.empty()) xb_grid = {0.01, 0.2, 0.5, 0.9};
    const std::size_t quad = cfg.get_size("kernels.quad_points", 512);
    const double max_ratio = cfg.get_double("kernels.max_ratio", 10.0);

    const KernelEstimateReport rep =
        validate_kernel_estimates(eps, t_grid, x_grid, xb_grid, quad);

    auto rates = open_out(dir, "rates.csv");
    rates << "name,value\n"
          << "sup_ratio_l1_space," << format_double(rep.sup_ratio_l1_space)
          << "\nsup_ratio_sq_space," << format_double(rep.sup_ratio_sq_space)
          << "\nsup_ratio_sq_time," << format_double(rep.sup_ratio_sq_time)
          << '\n';
    {
        auto raw = open_out(dir, "raw.csv");
        raw << "name,value\n"
            << "sup_ratio_l1_space," << format_double(rep.sup_ratio_l1_space)
            << "\nsup_ratio_sq_space,"
            << format_double(rep.sup_ratio_sq_space) << "\nsup_ratio_sq_time,"
            << format_double(rep.sup_ratio_sq_time) << '\n';
    }
    log << "kernel estimate ratios: " << rep.sup_ratio_l1_space << ", "
        << rep.sup_ratio_sq_space << ", " << rep.sup_ratio_sq_time << "\n";
    return std::isfinite(rep.sup_ratio_l1_space) &&
           std::isfinite(rep.sup_ratio_sq_space) &&
           std::isfinite(rep.sup_ratio_sq_time) &&
           rep.sup_ratio_l1_space < max_ratio &&
           rep.sup_ratio_sq_space < max_ratio &&
           rep.sup_ratio_sq_time < max_ratio;
}

bool run_simulate(const KeyValueConfig& cfg, const std::string& dir,
                  std::ostream& log) {
    SolverConfig sc = make_solver_config(cfg);
    sc.output_stride = cfg.get_size("solver.output_stride",
                                    std::max<std::size_t>(1, sc.n_t / 64));
    const EnsembleConfig ens = make_ensemble(cfg, 1);
    const NoiseGrid noise =
        sample_noise(sc.n_t, sc.n_x, sc.horizon, ens.base_seed, 0);
    const FieldState u0 = zero_field(sc.n_x);
    const SolutionPath path = solve_she(sc, u0, noise, 0.0, sc.horizon);
    export_path_csv(path, dir + "/raw.csv");

    double sup_u = 0, sup_d = 0, sup_v = 0;
    const auto& uT = path.u.back().values;
    const auto& dT = path.D.back().values;
    const auto& vT = path.V.back().values;
    for (std::size_t j = 0; j < sc.n_x; ++j) {
        sup_u = std::max(sup_u, std::abs(uT[j]));
        sup_d = std::max(sup_d, std::abs(dT[j]));
        sup_v = std::max(sup_v, std::abs(vT[j]));
    }
    auto rates = open_out(dir, "rates.csv");
    rates << "name,value\nsup_u_T," << format_double(sup_u) << "\nsup_D_T,"
          << format_double(sup_d) << "\nsup_V_T," << format_double(sup_v)
          << '\n';
    log << "simulate: sup|u(T)| = " << sup_u << "\n";
    return std::isfinite(sup_u);
}

bool run_driftless_rate(const KeyValueConfig& cfg, const std::string& dir,
                        std::ostream& log) {
    KeyValueConfig c = cfg;
    if (!c.has("drift.name")) c.set("drift.name", "bounded");
    const SolverConfig sc = make_solver_config(c);
    const EnsembleConfig ens = make_ensemble(cfg, 1000);
    const std::vector<double> gaps = dyadic_list(cfg, "rate.gaps", 10, 7);
    const double t_eval = cfg.get_double("rate.t_eval", sc.horizon / 2.0);
    const std::size_t x_index = cfg.get_size("rate.x_index", sc.n_x / 2);
    const double p = cfg.get_double("rate.p", 2.0);

    const SampledRate r = exp_driftless_rate(sc, zero_field(sc.n_x), gaps,
                                             t_eval, x_index, p, ens);
    write_samples_csv(dir, "raw.csv", r, "gap");
    auto rates = open_out(dir, "rates.csv");
    rates << "report,scale,value,stderr\n";
    if (r.degenerate_zero) {
        rates << "driftless-rate,max_abs_error,"
              << format_double(r.max_abs_sample) << ",0\n";
        log << "driftless-rate: degenerate zero error (max |e| = "
            << r.max_abs_sample << ")\n";
        return r.max_abs_sample < 1e-8;
    }
    append_rate_rows(rates, "driftless-rate", r.fit);
    if (cfg.get_bool("output.plot", true))
        write_svg_loglog(dir, "plot.svg", r.fit, "driftless approximation");

    double alpha = 0.0;
    if (sc.drift) alpha = sc.drift->base().alpha_nominal;
    const double target = cfg.get_double("rate.target", 1.0 + alpha / 4.0);
    const double tol = cfg.get_double("rate.tolerance", 0.15);
    log << "driftless-rate: slope " << r.fit.slope << " target " << target
        << " +- " << tol << "\n";
    return std::abs(r.fit.slope - target) <= tol;
}

bool run_holder(const KeyValueConfig& cfg, const std::string& dir,
                std::ostream& log) {
    SolverConfig sc = make_solver_config(cfg, 256);
    const EnsembleConfig ens = make_ensemble(cfg, 1000);
    const FieldKind kind =
        field_kind_by_name(cfg.get_string("holder.field", "V"));
    const double t0 = cfg.get_double("holder.t0", sc.horizon / 2.0);
    const std::vector<double> tg =
        dyadic_list(cfg, "holder.temporal_gaps", 10, 7);
    const std::vector<double> sg =
        dyadic_list(cfg, "holder.spatial_gaps", 6, 2);
    const std::size_t x_index = cfg.get_size("holder.x_index", sc.n_x / 2);
    const double p = cfg.get_double("holder.p", 2.0);

    const HolderProfile prof = exp_holder_profile(
        sc, zero_field(sc.n_x), kind, t0, x_index, tg, sg, p, ens);

    {
        auto raw = open_out(dir, "raw.csv");
        raw << "kind,scale,replicate,value\n";
        for (std::size_t q = 0; q < tg.size(); ++q)
            for (std::size_t i = 0; i < prof.temporal.samples[q].size(); ++i)
                raw << "temporal," << format_double(tg[q]) << ',' << i << ','
                    << format_double(prof.temporal.samples[q][i]) << '\n';
        for (std::size_t q = 0; q < sg.size(); ++q)
            for (std::size_t i = 0; i < prof.spatial.samples[q].size(); ++i)
                raw << "spatial," << format_double(sg[q]) << ',' << i << ','
                    << format_double(prof.spatial.samples[q][i]) << '\n';
    }
    auto rates = open_out(dir, "rates.csv");
    rates << "report,scale,value,stderr\n";
    append_rate_rows(rates, "temporal", prof.temporal.fit);
    append_rate_rows(rates, "spatial", prof.spatial.fit);
    if (cfg.get_bool("output.plot", true)) {
        write_svg_loglog(dir, "plot_temporal.svg", prof.temporal.fit,
                         "temporal increments");
        write_svg_loglog(dir, "plot_spatial.svg", prof.spatial.fit,
                         "spatial increments");
    }

    const double tt = cfg.get_double("holder.temporal_target", 0.25);
    const double st = cfg.get_double("holder.spatial_target", 0.5);
    const double tol = cfg.get_double("holder.tolerance", 0.05);
    log << "holder: temporal " << prof.temporal.fit.slope << " spatial "
        << prof.spatial.fit.slope << "\n";
    return std::abs(prof.temporal.fit.slope - tt) <= tol &&
           std::abs(prof.spatial.fit.slope - st) <= tol;
}

bool run_stability(const KeyValueConfig& cfg, const std::string& dir,
                   std::ostream& log) {
    KeyValueConfig c = cfg;
    if (!c.has("drift.name")) c.set("drift.name", "bounded");
    if (!c.has("solver.sigma")) c.set("solver.sigma", "cosine");
    const SolverConfig sc = make_solver_config(c);
    const EnsembleConfig ens = make_ensemble(cfg, 256);
    const std::size_t n_levels = cfg.get_size("stability.levels", 4);
    const double delta0 = cfg.get_double("stability.delta0", 0.5);

    std::vector<StabilityLevel> levels;
    for (std::size_t l = 0; l < n_levels; ++l) {
        StabilityLevel lvl;
        lvl.cfg1 = lvl.cfg2 = sc;
        lvl.u01 = zero_field(sc.n_x);
        const double delta = delta0 * std::pow(0.5, static_cast<double>(l));
        lvl.u02 = profile_field(sc.n_x, delta, true);
        lvl.discrepancy = delta;
        levels.push_back(std::move(lvl));
    }
    std::vector<ProbePair> probes{{sc.horizon / 4.0, sc.horizon / 2.0},
                                  {sc.horizon / 2.0, 3.0 * sc.horizon / 4.0},
                                  {sc.horizon / 4.0, 3.0 * sc.horizon / 4.0}};
    std::vector<std::size_t> xs{0, sc.n_x / 4, sc.n_x / 2, 3 * sc.n_x / 4};
    const double p = cfg.get_double("stability.p", 2.0);

    const StabilityReport rep = exp_stability(levels, probes, xs, p, ens);
    {
        auto raw = open_out(dir, "raw.csv");
        raw << "level,discrepancy,bracket,stderr\n";
        for (std::size_t l = 0; l < rep.brackets.size(); ++l)
            raw << l << ',' << format_double(rep.discrepancies[l]) << ','
                << format_double(rep.brackets[l]) << ','
                << format_double(rep.bracket_stderrs[l]) << '\n';
    }
    auto rates = open_out(dir, "rates.csv");
    rates << "report,scale,value,stderr\n";
    append_rate_rows(rates, "stability", rep.decay_fit);
    if (cfg.get_bool("output.plot", true))
        write_svg_loglog(dir, "plot.svg", rep.decay_fit,
                         "S-bracket vs discrepancy");
    const double min_slope = cfg.get_double("stability.min_slope", 0.9);
    log << "stability: decay slope " << rep.decay_fit.slope << "\n";
    return rep.decay_fit.slope >= min_slope;
}

bool run_four_point(const KeyValueConfig& cfg, const std::string& dir,
                    std::ostream& log) {
    KeyValueConfig c = cfg;
    if (!c.has("drift.name")) c.set("drift.name", "bounded");
    if (!c.has("solver.sigma")) c.set("solver.sigma", "cosine");
    const SolverConfig sc = make_solver_config(c);
    const EnsembleConfig ens = make_ensemble(cfg, 512);
    const double a = cfg.get_double("fourpoint.a", sc.horizon / 2.0);
    const double t_eval =
        cfg.get_double("fourpoint.t_eval", 3.0 * sc.horizon / 4.0);
    const std::vector<double> gaps = dyadic_list(cfg, "fourpoint.gaps", 9, 6);
    const std::size_t x_index =
        cfg.get_size("fourpoint.x_index", sc.n_x / 2);
    const double p = cfg.get_double("fourpoint.p", 2.0);
    const double u0_gap = cfg.get_double("fourpoint.u0_gap", 0.1);

    const SampledRate r = four_point_estimate(
        sc, sc, zero_field(sc.n_x), profile_field(sc.n_x, u0_gap, false),
        gaps, a, t_eval, x_index, p, ens);
    write_samples_csv(dir, "raw.csv", r, "gap");
    auto rates = open_out(dir, "rates.csv");
    rates << "report,scale,value,stderr\n";
    if (r.degenerate_zero) {
        rates << "four-point,max_abs," << format_double(r.max_abs_sample)
              << ",0\n";
        return r.max_abs_sample < 1e-8;
    }
    append_rate_rows(rates, "four-point", r.fit);
    if (cfg.get_bool("output.plot", true))
        write_svg_loglog(dir, "plot.svg", r.fit, "four-point estimate");
    const double target = cfg.get_double("fourpoint.target", 0.5);
    const double tol = cfg.get_double("fourpoint.tolerance", 0.15);
    log << "four-point: slope " << r.fit.slope << "\n";
    return std::abs(r.fit.slope - target) <= tol;
}

bool run_sequence(const KeyValueConfig& cfg, const std::string& dir,
                  std::ostream& log) {
    KeyValueConfig c = cfg;
    // V-part convergence is only informative for nonconstant sigma.
    if (!c.has("solver.sigma")) c.set("solver.sigma", "cosine");
    const SolverConfig sc = make_solver_config(c);
    const EnsembleConfig ens = make_ensemble(cfg, 128);
    const DistributionalDrift b = drift_from_config(cfg, "half-holder");
    const std::size_t n_lo = cfg.get_size("sequence.n_lo", 1);
    const std::size_t n_hi = cfg.get_size("sequence.n_hi", 7);
    const double t_eval = cfg.get_double("sequence.t_eval", sc.horizon / 2.0);
    const double p = cfg.get_double("sequence.p", 2.0);

    const SequenceReport rep =
        exp_sequence_convergence(sc, zero_field(sc.n_x), b, n_lo, n_hi,
                                 t_eval, p, ens);
    {
        auto raw = open_out(dir, "raw.csv");
        raw << "level,eps,d_gap,d_stderr,v_gap,v_stderr,drift_dist\n";
        for (std::size_t l = 0; l < rep.d_gaps.size(); ++l)
            raw << rep.levels[l] << ',' << format_double(rep.eps[l]) << ','
                << format_double(rep.d_gaps[l]) << ','
                << format_double(rep.d_stderrs[l]) << ','
                << format_double(rep.v_gaps[l]) << ','
                << format_double(rep.v_stderrs[l]) << ','
                << format_double(rep.drift_dists[l]) << '\n';
    }
    auto rates = open_out(dir, "rates.csv");
    rates << "name,value\n"
          << "d_monotone," << (rep.d_monotone ? 1 : 0) << '\n'
          << "v_monotone," << (rep.v_monotone ? 1 : 0) << '\n'
          << "d_ratio_spread," << format_double(rep.d_ratio_spread) << '\n'
          << "v_ratio_spread," << format_double(rep.v_ratio_spread) << '\n';
    const double max_spread = cfg.get_double("sequence.max_spread", 3.0);
    log << "sequence: d_monotone=" << rep.d_monotone
        << " v_monotone=" << rep.v_monotone
        << " spreads=" << rep.d_ratio_spread << "/" << rep.v_ratio_spread
        << "\n";
    return rep.d_monotone && rep.v_monotone &&
           rep.d_ratio_spread < max_spread &&
           rep.v_ratio_spread < max_spread;
}

bool run_malliavin(const KeyValueConfig& cfg, const std::string& dir,
                   std::ostream& log) {
    const std::string mode = cfg.get_string("malliavin.mode", "positive");
    KeyValueConfig c = cfg;
    if (!c.has("solver.sigma"))
        c.set("solver.sigma", mode == "positive" ? "one" : "cosine");
    SolverConfig sc = make_solver_config(c);
    sc.drift.reset(); // the derivative is simulated on the driftless flow
    const bool positive = mode == "positive";
    const EnsembleConfig ens = make_ensemble(cfg, positive ? 1 : 256);
    std::vector<double> t_grid = cfg.get_double_list("malliavin.t_grid");
    if (t_grid.empty())
        for (int e = 10; e >= 4; --e) t_grid.push_back(std::pow(2.0, -e));
    const std::size_t x_index =
        cfg.get_size("malliavin.x_index", sc.n_x / 2);
    const double p = cfg.get_double("malliavin.p", 2.0);
    const std::size_t resamples = cfg.get_size("malliavin.bootstrap", 1000);
    const double max_ci = cfg.get_double("malliavin.max_ci_width", 0.3);
    const bool combo = mode == "combo";

    const double dt = sc.horizon / static_cast<double>(sc.n_t);
    std::vector<std::vector<double>> h_samples(t_grid.size());
    for (auto& cell : h_samples) cell.assign(ens.replicates, 0.0);

    parallel_for(ens.replicates, ens.workers, [&](std::size_t i) {
        for (std::size_t q = 0; q < t_grid.size(); ++q) {
            const double t = t_grid[q];
            const auto steps =
                static_cast<std::size_t>(std::llround(t / dt));
            if (steps < 16)
                throw ConfigError("malliavin.t_grid: t below 16 dt");
            SolverConfig sub = sc;
            sub.n_t = steps;
            sub.horizon = t;
            sub.output_stride = 1;
            const NoiseGrid noise =
                sample_noise(steps, sc.n_x, t, ens.base_seed,
                             i * t_grid.size() + q);
            auto h_of = [&](const FieldState& u0) {
                const SolutionPath path =
                    solve_driftless(sub, u0, 0.0, noise, t);
                return simulate_first_derivative(path, sub, noise, t,
                                                 x_index);
            };
            if (!combo) {
                h_samples[q][i] = h_norm(h_of(zero_field(sc.n_x)));
            } else {
                const MalliavinField f1 = h_of(zero_field(sc.n_x));
                const MalliavinField f2 = h_of(profile_field(sc.n_x, 1.0,
                                                             false));
                h_samples[q][i] =
                    h_norm(combo_derivative({0.5, 0.5}, {f1, f2}));
            }
        }
    });

    {
        auto raw = open_out(dir, "raw.csv");
        raw << "t,replicate,h_norm\n";
        for (std::size_t q = 0; q < t_grid.size(); ++q)
            for (std::size_t i = 0; i < ens.replicates; ++i)
                raw << format_double(t_grid[q]) << ',' << i << ','
                    << format_double(h_samples[q][i]) << '\n';
    }

    const MomentBoundReport rep = estimate_moment_bounds(
        t_grid, h_samples, p, positive, resamples, max_ci, ens.base_seed);

    auto rates = open_out(dir, "rates.csv");
    rates << "report,scale,value,stderr\n";
    append_rate_rows(rates, mode, rep.fit);
    rates << mode << ",ci_lo," << format_double(rep.ci.lo) << ",0\n"
          << mode << ",ci_hi," << format_double(rep.ci.hi) << ",0\n"
          << mode << ",reliable," << (rep.reliable ? 1 : 0) << ",0\n";
    if (cfg.get_bool("output.plot", true))
        write_svg_loglog(dir, "plot.svg", rep.fit,
                         "Malliavin moment vs t (" + mode + ")");

    log << "malliavin(" << mode << "): slope " << rep.fit.slope << " CI ["
        << rep.ci.lo << ", " << rep.ci.hi << "]\n";
    if (positive) {
        const double target = cfg.get_double("malliavin.target", p / 4.0);
        const double tol = cfg.get_double("malliavin.tolerance", 0.05);
        return std::abs(rep.fit.slope - target) <= tol;
    }
    const double floor_slope =
        cfg.get_double("malliavin.min_slope", -(p / 4.0) - 0.15);
    return rep.reliable && rep.fit.slope >= floor_slope;
}

bool run_sewing(const KeyValueConfig& cfg, const std::string& dir,
                std::ostream& log) {
    KeyValueConfig c = cfg;
    if (!c.has("drift.name")) c.set("drift.name", "bounded");
    const SolverConfig sc = make_solver_config(c, 64, 4096);
    const EnsembleConfig ens = make_ensemble(cfg, 128);
    const double t_eval = cfg.get_double("sewing.t_eval", sc.horizon / 2.0);
    const double s0 = cfg.get_double("sewing.s", sc.horizon / 4.0);
    const std::vector<double> scales = dyadic_list(cfg, "sewing.scales", 8, 5);
    const std::size_t x_index = cfg.get_size("sewing.x_index", sc.n_x / 2);
    const std::size_t M = cfg.get_size("sewing.M", 16);
    const std::size_t M_outer = cfg.get_size("sewing.M_outer", 8);
    const std::size_t depth_reps = cfg.get_size("sewing.depth_replicates", 32);
    std::vector<std::size_t> depths;
    for (double d : dyadic_list(cfg, "sewing.depths", -2, -5))
        depths.push_back(static_cast<std::size_t>(std::llround(
            std::log2(d)))); // allows "sewing.depths = 4,8,16,32"
    if (!sc.drift) throw ConfigError("sewing requires a drift");

    const FieldState u0 = zero_field(sc.n_x);
    GermFactory factory = [&](std::size_t i) {
        NoiseGrid noise =
            sample_noise(sc.n_t, sc.n_x, sc.horizon, ens.base_seed, i);
        Germ germ = drift_germ(sc, u0, *sc.drift, t_eval, x_index);
        return std::make_pair(std::move(germ), std::move(noise));
    };

    SewingReport exps = measure_germ_exponents(factory, scales, s0,
                                               ens.replicates, M, M_outer,
                                               ens.workers);
    SewingReport depth = sewing_depth_study(factory, 0.0, t_eval, depths,
                                            depth_reps, M, ens.workers);

    {
        auto raw = open_out(dir, "raw.csv");
        raw << "depth,replicate,sum\n";
        for (std::size_t d = 0; d < depth.depths.size(); ++d)
            for (std::size_t i = 0; i < depth.sums[d].size(); ++i)
                raw << depth.depths[d] << ',' << i << ','
                    << format_double(depth.sums[d][i]) << '\n';
    }
    auto rates = open_out(dir, "rates.csv");
    rates << "report,scale,value,stderr\n";
    append_rate_rows(rates, "x1", exps.x1_fit);
    if (!exps.x2_no_signal)
        append_rate_rows(rates, "x2", exps.x2_fit);
    else
        rates << "x2,no_signal,1,0\n";
    for (std::size_t g = 0; g < depth.cauchy_gaps.size(); ++g)
        rates << "cauchy_gap," << depth.depths[g] << ','
              << format_double(depth.cauchy_gaps[g]) << ",0\n";
    if (cfg.get_bool("output.plot", true))
        write_svg_loglog(dir, "plot.svg", exps.x1_fit, "germ x1 exponent");

    const double min_x1 = cfg.get_double("sewing.min_x1", 0.75);
    bool gaps_decay = !depth.cauchy_gaps.empty();
    for (std::size_t g = 0; g + 1 < depth.cauchy_gaps.size(); ++g)
        if (!(depth.cauchy_gaps[g + 1] < depth.cauchy_gaps[g]))
            gaps_decay = false;
    log << "sewing: x1 " << exps.x1_fit.slope << " (no_signal x2: "
        << exps.x2_no_signal << "); gaps decay: " << gaps_decay << "\n";
    return exps.x1_fit.slope >= min_x1 && gaps_decay;
}

using Runner = bool (*)(const KeyValueConfig&, const std::string&,
                        std::ostream&);

const std::map<std::string, Runner>& runners() {
    static const std::map<std::string, Runner> table = {
        {"validate-kernels", run_validate_kernels},
        {"simulate", run_simulate},
        {"driftless-rate", run_driftless_rate},
        {"holder", run_holder},
        {"stability", run_stability},
        {"four-point", run_four_point},
        {"sequence", run_sequence},
        {"malliavin", run_malliavin},
        {"sewing", run_sewing},
    };
    return table;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

int run_experiment(const KeyValueConfig& config, const std::string& out_dir,
                   bool assert_mode, std::ostream& log) {
    std::string name;
    bool pass = false;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        name = config.require_string("experiment.name");
        const auto it = runners().find(name);
        if (it == runners().end())
            throw ConfigError("unknown experiment: " + name);
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec) throw IoError("cannot create output dir: " + out_dir);
        pass = it->second(config, out_dir, log);
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const IoError& e) {
        log << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        log << "config error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    try {
        nlohmann::json manifest;
        char hash_hex[17];
        std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                      static_cast<unsigned long long>(config.hash()));
        manifest["experiment"] = name;
        manifest["config_hash"] = hash_hex;
        manifest["config_canonical"] = config.canonical();
        manifest["wall_time_s"] = wall;
        manifest["timestamp_utc"] = utc_timestamp();
        manifest["thresholds_ok"] = pass;
        manifest["artifact_version"] = "1.0.0";
        std::ofstream out(out_dir + "/manifest.json", std::ios::binary);
        if (!out) throw IoError("cannot write manifest");
        out << manifest.dump(2) << '\n';
    } catch (const std::exception& e) {
        log << "i/o error: " << e.what() << "\n";
        return kExitIo;
    }

    if (assert_mode && !pass) {
        log << "assert: thresholds failed for " << name << "\n";
        return kExitAssert;
    }
    return kExitOk;
}

} // namespace shelab
