// Acceptance gate: one criterion per invocation, one PASS/FAIL line on
// stdout. Exit code 0 iff the criterion holds. Usage:
//   acceptance <c1|...|c10> [path-to-cli-binary]
// (the CLI binary path is required by c10 only).

#include <cctype>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "shelab/besov.hpp"
#include "shelab/experiments.hpp"
#include "shelab/malliavin.hpp"
#include "shelab/noise.hpp"
#include "shelab/sewing.hpp"
#include "shelab/solver.hpp"
#include "shelab/stats.hpp"
#include "shelab/torus_heat.hpp"

using namespace shelab;
namespace fs = std::filesystem;

namespace {
constexpr double kPi = std::numbers::pi;

std::string g_cli_binary; // set from argv for c10

FieldState constant_field(std::size_t n, double c) {
    FieldState f;
    f.values.assign(n, c);
    return f;
}

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << " [FAILED: " << what << "]";
        }
    }
    template <typename T>
    void note(const std::string& name, T value) {
        detail << " " << name << "=" << value;
    }
};

// --- c1: kernel suite -------------------------------------------------------

bool c1_kernels(Check& ck) {
    const std::size_t n = 2048;
    TorusGrid g(n);
    double worst_norm = 0.0;
    for (double t : {1e-4, 1e-2, 1.0}) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            sum += heat_kernel_torus(t, 0.37, g.points[j]);
        worst_norm = std::max(worst_norm, std::abs(sum * g.dx() - 1.0));
    }
    ck.note("normalization_err", worst_norm);
    ck.require(worst_norm < 1e-6, "kernel normalization < 1e-6");

    // Semigroup composition P_s P_t = P_{s+t} on a generic field.
    std::vector<double> field(n);
    for (std::size_t j = 0; j < n; ++j)
        field[j] = Philox4x32::normal(1, 0, j);
    const auto once = apply_semigroup(g, field, 0.05);
    const auto twice =
        apply_semigroup(g, apply_semigroup(g, field, 0.02), 0.03);
    double comp_err = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        comp_err = std::max(comp_err, std::abs(once[j] - twice[j]));
    ck.note("composition_err", comp_err);
    ck.require(comp_err < 1e-8, "semigroup composition < 1e-8");

    // Eigenfunction decay: cos(2 pi x) shrinks by exp(-4 pi^2 t).
    std::vector<double> mode(n);
    for (std::size_t j = 0; j < n; ++j)
        mode[j] = std::cos(2.0 * kPi * g.points[j]);
    const double t = 0.04;
    const auto decayed = apply_semigroup(g, mode, t);
    const double lambda = std::exp(-4.0 * kPi * kPi * t);
    double eig_err = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        eig_err = std::max(eig_err, std::abs(decayed[j] - lambda * mode[j]));
    ck.note("eigen_decay_err", eig_err);
    ck.require(eig_err < 1e-8, "eigenfunction decay < 1e-8");
    return ck.ok;
}

// --- c2: linear-case exactness ----------------------------------------------

std::vector<std::complex<double>> naive_dft(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t m = 0; m < n; ++m) {
        std::complex<double> acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double ph = -2.0 * kPi * static_cast<double>(m * j) /
                              static_cast<double>(n);
            acc += v[j] * std::complex<double>(std::cos(ph), std::sin(ph));
        }
        out[m] = acc;
    }
    return out;
}

double mode_decay(std::size_t m, std::size_t n, double dt) {
    const double mt = (m <= n / 2)
                          ? static_cast<double>(m)
                          : static_cast<double>(m) - static_cast<double>(n);
    return std::exp(-(2.0 * kPi * mt) * (2.0 * kPi * mt) * dt);
}

bool c2_linear(Check& ck) {
    // Pathwise exactness against a naive per-mode recursion, n_x = 32.
    {
        SolverConfig cfg;
        cfg.n_x = 32;
        cfg.n_t = 256;
        cfg.horizon = 0.25;
        cfg.sigma = make_sigma_constant(0.6);
        cfg.output_stride = cfg.n_t;
        const auto noise =
            sample_noise(cfg.n_t, cfg.n_x, cfg.horizon, 31337, 0);
        FieldState u0;
        u0.values.resize(cfg.n_x);
        for (std::size_t j = 0; j < cfg.n_x; ++j)
            u0.values[j] = std::cos(2.0 * kPi * static_cast<double>(j) / 32.0);
        const auto path = solve_she(cfg, u0, noise, 0.0, cfg.horizon);
        auto spec = naive_dft(u0.values);
        for (std::size_t k = 0; k < cfg.n_t; ++k) {
            std::vector<double> forcing(cfg.n_x);
            for (std::size_t j = 0; j < cfg.n_x; ++j)
                forcing[j] = 0.6 * noise.at(k, j) / cfg.dx();
            const auto fspec = naive_dft(forcing);
            for (std::size_t m = 0; m < cfg.n_x; ++m)
                spec[m] =
                    mode_decay(m, cfg.n_x, cfg.dt()) * (spec[m] + fspec[m]);
        }
        double err = 0.0;
        const auto& u_final = path.u_at(cfg.horizon).values;
        for (std::size_t j = 0; j < cfg.n_x; ++j) {
            std::complex<double> acc = 0.0;
            for (std::size_t m = 0; m < cfg.n_x; ++m) {
                const double ph = 2.0 * kPi * static_cast<double>(m * j) /
                                  static_cast<double>(cfg.n_x);
                acc += spec[m] *
                       std::complex<double>(std::cos(ph), std::sin(ph));
            }
            err = std::max(err, std::abs(u_final[j] - acc.real() / 32.0));
        }
        ck.note("pathwise_err", err);
        ck.require(err < 1e-10, "per-mode recursion match < 1e-10");
    }

    // Monte-Carlo variance at (t, x) against the exact recursion oracle.
    {
        SolverConfig cfg;
        cfg.n_x = 64;
        cfg.n_t = 256;
        cfg.horizon = 1.0 / 16.0; // dt = dx^2
        cfg.sigma = make_sigma_one();
        cfg.output_stride = cfg.n_t;
        const auto u0 = constant_field(cfg.n_x, 0.0);
        const std::size_t reps = 10000;
        std::vector<double> vals(reps);
        for (std::size_t i = 0; i < reps; ++i) {
            const auto noise =
                sample_noise(cfg.n_t, cfg.n_x, cfg.horizon, 777, i);
            const auto path = solve_she(cfg, u0, noise, 0.0, cfg.horizon);
            vals[i] = path.u_at(cfg.horizon).values[17];
        }
        const double mc_var = sample_variance(vals);

        // Per-mode variance recursion: v_m <- lam^2 (v_m + dt / dx); the
        // point variance is (1/n^2) sum_m v_m * n * dt/dx... assembled
        // from E|W_hat|^2 = n dt dx.
        double oracle = 0.0;
        for (std::size_t m = 0; m < cfg.n_x; ++m) {
            double v = 0.0;
            const double lam2 =
                mode_decay(m, cfg.n_x, cfg.dt()) * mode_decay(m, cfg.n_x, cfg.dt());
            const double forcing_var =
                static_cast<double>(cfg.n_x) * cfg.dt() * cfg.dx() /
                (cfg.dx() * cfg.dx());
            for (std::size_t k = 0; k < cfg.n_t; ++k)
                v = lam2 * (v + forcing_var);
            oracle += v;
        }
        oracle /= static_cast<double>(cfg.n_x * cfg.n_x);
        // Gaussian variance estimator: stderr = var * sqrt(2 / (n - 1)).
        const double se = oracle * std::sqrt(2.0 / static_cast<double>(reps - 1));
        ck.note("mc_var", mc_var);
        ck.note("oracle_var", oracle);
        ck.note("z", (mc_var - oracle) / se);
        ck.require(std::abs(mc_var - oracle) < 5.0 * se,
                   "MC variance within 5 stderr of the recursion oracle");
    }
    return ck.ok;
}

// --- c3: regularity exponents -----------------------------------------------

bool c3_regularity(Check& ck) {
    SolverConfig cfg;
    cfg.n_x = 256;
    cfg.n_t = 16384; // dt = dx^2 on horizon 1/4
    cfg.horizon = 0.25;
    cfg.sigma = make_sigma_one();
    cfg.output_stride = 1;
    const auto u0 = constant_field(cfg.n_x, 0.0);
    EnsembleConfig ens;
    ens.replicates = 1000;
    ens.base_seed = 303;
    ens.workers = 0;
    const std::vector<double> temporal = {1.0 / 1024, 1.0 / 512, 1.0 / 256,
                                          1.0 / 128};
    const std::vector<double> spatial = {1.0 / 64, 1.0 / 32, 1.0 / 16,
                                         1.0 / 8, 1.0 / 4};
    const auto prof = exp_holder_profile(cfg, u0, FieldKind::V, 0.125, 128,
                                         temporal, spatial, 2.0, ens);
    ck.note("temporal_slope", prof.temporal.fit.slope);
    ck.note("spatial_slope", prof.spatial.fit.slope);
    ck.require(std::abs(prof.temporal.fit.slope - 0.25) <= 0.05,
               "temporal slope in 0.25 +- 0.05");
    ck.require(std::abs(prof.spatial.fit.slope - 0.5) <= 0.05,
               "spatial slope in 0.5 +- 0.05");
    return ck.ok;
}

// --- c4: driftless approximation rate ---------------------------------------

bool c4_driftless(Check& ck) {
    SolverConfig cfg;
    cfg.n_x = 128;
    cfg.n_t = 16384;
    cfg.horizon = 0.25;
    cfg.sigma = make_sigma_cosine(); // mu = 1/2
    cfg.output_stride = 1;
    const auto u0 = constant_field(cfg.n_x, 0.0);
    EnsembleConfig ens;
    ens.replicates = 1000;
    ens.base_seed = 404;
    ens.workers = 0;
    const std::vector<double> gaps = {1.0 / 1024, 1.0 / 512, 1.0 / 256,
                                      1.0 / 128};
    const double t_eval = 0.125;
    const std::size_t x_index = 64;

    {
        SolverConfig bounded = cfg;
        bounded.drift = mollify(make_bounded_drift(1.0), 1e-4);
        const auto r =
            exp_driftless_rate(bounded, u0, gaps, t_eval, x_index, 2.0, ens);
        ck.note("bounded_slope", r.fit.slope);
        ck.require(std::abs(r.fit.slope - 1.0) <= 0.15,
                   "bounded drift slope in 1.0 +- 0.15");
    }
    {
        SolverConfig rough = cfg;
        rough.drift = mollify(make_half_holder_drift(1.0), 1e-4);
        const auto r =
            exp_driftless_rate(rough, u0, gaps, t_eval, x_index, 2.0, ens);
        ck.note("half_holder_slope", r.fit.slope);
        ck.require(std::abs(r.fit.slope - 0.875) <= 0.15,
                   "alpha = -1/2 drift slope in 0.875 +- 0.15");
    }
    {
        EnsembleConfig small = ens;
        small.replicates = 100;
        const auto r =
            exp_driftless_rate(cfg, u0, gaps, t_eval, x_index, 2.0, small);
        ck.note("zero_drift_max_abs", r.max_abs_sample);
        ck.require(r.degenerate_zero && r.max_abs_sample < 1e-8,
                   "b = 0 error < 1e-8 at every gap");
    }
    return ck.ok;
}

// --- c5: Malliavin moment bounds --------------------------------------------

std::vector<double> malliavin_h_norms(const SigmaFunction& sigma, double t,
                                      std::size_t reps, std::uint64_t stream0) {
    SolverConfig cfg;
    cfg.n_x = 128;
    cfg.horizon = t;
    cfg.n_t = std::max<std::size_t>(
        4, static_cast<std::size_t>(std::llround(t * 128.0 * 128.0)));
    cfg.sigma = sigma;
    cfg.output_stride = 1;
    const auto u0 = constant_field(cfg.n_x, 0.0);
    std::vector<double> out(reps);
    for (std::size_t i = 0; i < reps; ++i) {
        const auto noise =
            sample_noise(cfg.n_t, cfg.n_x, cfg.horizon, 505, stream0 + i);
        const auto path = solve_she(cfg, u0, noise, 0.0, t);
        const auto field =
            simulate_first_derivative(path, cfg, noise, t, cfg.n_x / 2);
        out[i] = h_norm(field);
    }
    return out;
}

bool c5_malliavin(Check& ck) {
    const std::vector<double> t_grid = {1.0 / 1024, 1.0 / 512, 1.0 / 256,
                                        1.0 / 128, 1.0 / 64, 1.0 / 32,
                                        1.0 / 16};

    // Positive moment, sigma == 1 (deterministic: a single replicate is
    // the full law).
    {
        std::vector<std::vector<double>> cells;
        for (double t : t_grid)
            cells.push_back(malliavin_h_norms(make_sigma_one(), t, 1, 0));
        const auto rep =
            estimate_moment_bounds(t_grid, cells, 2.0, true, 100, 0.3, 1);
        ck.note("positive_slope", rep.fit.slope);
        ck.require(std::abs(rep.fit.slope - 0.5) <= 0.05,
                   "positive p = 2 slope in 0.5 +- 0.05");
    }

    // Negative moment, nonconstant sigma with mu = 1/2.
    {
        const std::size_t reps = 256;
        std::vector<std::vector<double>> cells;
        for (std::size_t q = 0; q < t_grid.size(); ++q)
            cells.push_back(malliavin_h_norms(make_sigma_cosine(0.75, 0.25),
                                              t_grid[q], reps,
                                              1000 * (q + 1)));
        const auto rep =
            estimate_moment_bounds(t_grid, cells, 2.0, false, 400, 0.3, 2);
        ck.note("negative_slope", rep.fit.slope);
        ck.note("ci_width", rep.ci.width());
        ck.require(rep.reliable, "bootstrap CI width <= 0.3");
        ck.require(rep.fit.slope >= -0.65, "negative p = 2 slope >= -0.65");
    }

    // Adaptedness zero block, exact.
    {
        SolverConfig cfg;
        cfg.n_x = 128;
        cfg.n_t = 256;
        cfg.horizon = 1.0 / 64.0;
        cfg.sigma = make_sigma_cosine();
        cfg.output_stride = 1;
        const auto u0 = constant_field(cfg.n_x, 0.0);
        const auto noise =
            sample_noise(cfg.n_t, cfg.n_x, cfg.horizon, 17, 9);
        const auto path = solve_she(cfg, u0, noise, 0.0, cfg.horizon);
        const double t = cfg.horizon / 2.0;
        const auto field =
            simulate_first_derivative(path, cfg, noise, t, 3);
        const std::size_t kT = path.stamp_index(t);
        double block = 0.0;
        for (std::size_t k = kT; k < field.n_theta; ++k)
            for (std::size_t j = 0; j < field.n_x; ++j)
                block = std::max(block, std::abs(field.at(k, j)));
        ck.note("zero_block", block);
        ck.require(block == 0.0, "adaptedness zero block exact");
    }
    return ck.ok;
}

// --- c6: stability ------------------------------------------------------

bool c6_stability(Check& ck) {
    SolverConfig base;
    base.n_x = 64;
    base.n_t = 4096;
    base.horizon = 0.25;
    base.sigma = make_sigma_cosine();
    base.drift = mollify(make_bounded_drift(1.0), 1e-3);
    base.output_stride = 1;
    const auto u0 = constant_field(base.n_x, 0.0);
    const std::vector<ProbePair> probes = {{1.0 / 16, 1.0 / 8},
                                           {1.0 / 8, 3.0 / 16},
                                           {3.0 / 16, 1.0 / 4}};
    const std::vector<std::size_t> xs = {0, 16, 32, 48};
    EnsembleConfig ens;
    ens.replicates = 128;
    ens.base_seed = 606;
    ens.workers = 0;

    // Identical inputs with shared noise: exact collapse.
    {
        const auto est = estimate_s_bracket(base, base, u0, u0, probes, xs,
                                            0.5, 2.0, ens);
        ck.note("identical_bracket", est.value);
        ck.require(est.value < 1e-10, "identical-inputs bracket < 1e-10");
    }

    // Discrepancy halving across 4 levels.
    std::vector<StabilityLevel> levels;
    for (int l = 0; l < 4; ++l) {
        StabilityLevel lev;
        lev.cfg1 = base;
        lev.cfg2 = base;
        lev.u01 = u0;
        lev.u02 = u0;
        const double amp = 0.5 * std::pow(0.5, l);
        for (std::size_t j = 0; j < base.n_x; ++j)
            lev.u02.values[j] +=
                amp * std::sin(2.0 * kPi * static_cast<double>(j) /
                               static_cast<double>(base.n_x));
        lev.discrepancy = amp;
        levels.push_back(std::move(lev));
    }
    const auto rep = exp_stability(levels, probes, xs, 2.0, ens);
    ck.note("decay_slope", rep.decay_fit.slope);
    ck.require(rep.decay_fit.slope >= 0.9, "log-log decay slope >= 0.9");
    return ck.ok;
}

// --- c7: four-point estimate ----------------------------------------------

bool c7_four_point(Check& ck) {
    SolverConfig cfg;
    cfg.n_x = 64;
    cfg.n_t = 16384;
    cfg.horizon = 0.25;
    cfg.sigma = make_sigma_cosine();
    cfg.drift = mollify(make_half_holder_drift(1.0), 1e-4);
    cfg.output_stride = 1;
    const auto u01 = constant_field(cfg.n_x, 0.0);
    FieldState u02 = u01;
    for (std::size_t j = 0; j < cfg.n_x; ++j)
        u02.values[j] += 0.1;
    const double a = 0.125, t_eval = 0.1875;
    const std::size_t x_index = 32;
    const std::vector<double> gaps = {1.0 / 512, 1.0 / 256, 1.0 / 128,
                                      1.0 / 64};
    EnsembleConfig ens;
    ens.replicates = 256;
    ens.base_seed = 707;
    ens.workers = 0;

    // Collapse case: identical systems vanish identically.
    {
        EnsembleConfig tiny = ens;
        tiny.replicates = 100;
        const auto r = four_point_estimate(cfg, cfg, u01, u01, gaps, a,
                                           t_eval, x_index, 2.0, tiny);
        ck.note("collapse_max_abs", r.max_abs_sample);
        ck.require(r.degenerate_zero && r.max_abs_sample < 1e-10,
                   "collapse case exactly 0");
    }
    {
        const auto r = four_point_estimate(cfg, cfg, u01, u02, gaps, a,
                                           t_eval, x_index, 2.0, ens);
        ck.note("four_point_slope", r.fit.slope);
        ck.require(std::abs(r.fit.slope - 0.5) <= 0.15,
                   "exponent in a - s within 0.5 +- 0.15");
    }
    return ck.ok;
}

// --- c8: sequence convergence ----------------------------------------------

bool c8_sequence(Check& ck) {
    SolverConfig cfg;
    cfg.n_x = 64;
    cfg.n_t = 4096;
    cfg.horizon = 0.25;
    cfg.sigma = make_sigma_cosine();
    cfg.output_stride = cfg.n_t;
    const auto u0 = constant_field(cfg.n_x, 0.0);
    const auto b = make_half_holder_drift(1.0);
    EnsembleConfig ens;
    ens.replicates = 128;
    ens.base_seed = 808;
    ens.workers = 0;
    const auto rep =
        exp_sequence_convergence(cfg, u0, b, 1, 6, cfg.horizon, 2.0, ens);
    ck.note("d_monotone", rep.d_monotone);
    ck.note("v_monotone", rep.v_monotone);
    ck.note("d_ratio_spread", rep.d_ratio_spread);
    ck.note("v_ratio_spread", rep.v_ratio_spread);
    ck.require(rep.d_monotone, "D-gaps monotone decreasing over n = 1..6");
    ck.require(rep.v_monotone, "V-gaps monotone decreasing over n = 1..6");
    ck.require(rep.d_ratio_spread < 3.0, "D gap/drift-distance ratio < x3");
    ck.require(rep.v_ratio_spread < 3.0, "V gap/drift-distance ratio < x3");
    return ck.ok;
}

// --- c9: sewing harness ------------------------------------------------------

bool c9_sewing(Check& ck) {
    // Additive germ telescopes exactly.
    {
        Germ germ;
        germ.name = "additive";
        germ.evaluator = [](double s, double t, const NoiseGrid&, std::size_t,
                            std::uint64_t) {
            auto f = [](double r) { return std::sin(5.0 * r) + r; };
            return f(t) - f(s);
        };
        const auto noise = sample_noise(64, 8, 0.25, 1, 0);
        auto f = [](double r) { return std::sin(5.0 * r) + r; };
        double worst = 0.0;
        for (std::size_t depth : {0u, 2u, 5u}) {
            const double sum =
                riemann_sum(germ, 0.0, 0.25, depth, noise, 2, 3);
            worst = std::max(worst, std::abs(sum - (f(0.25) - f(0.0))));
        }
        ck.note("telescope_err", worst);
        ck.require(worst < 1e-12, "additive germ telescopes exactly");
    }

    SolverConfig cfg;
    cfg.n_x = 64;
    cfg.n_t = 4096;
    cfg.horizon = 0.25;
    cfg.sigma = make_sigma_cosine();
    cfg.drift = mollify(make_bounded_drift(1.0), 1e-3);
    cfg.output_stride = 1;
    const auto u0 = constant_field(cfg.n_x, 0.0);
    const double t_eval = 0.125;
    const std::size_t x_index = 32;
    GermFactory factory = [&](std::size_t i) {
        const auto noise =
            sample_noise(cfg.n_t, cfg.n_x, cfg.horizon, 909, i);
        return std::make_pair(drift_germ(cfg, u0, *cfg.drift, t_eval, x_index),
                              noise);
    };

    // First exponent x1 over dyadic scales.
    {
        const std::vector<double> scales = {1.0 / 256, 1.0 / 128, 1.0 / 64,
                                            1.0 / 32};
        const auto rep = measure_germ_exponents(factory, scales, 1.0 / 16.0,
                                                100, 16, 8, 0);
        ck.note("x1_slope", rep.x1_fit.slope);
        ck.require(rep.x1_fit.slope >= 0.75, "drift-germ x1 >= 0.75");
    }

    // Cauchy gaps of the dyadic Riemann sums decay geometrically; the
    // bootstrap upper 95% bound of each gap ratio must stay below 1.
    {
        const auto rep = sewing_depth_study(factory, 1.0 / 16.0, 1.0 / 8.0,
                                            {2, 3, 4, 5}, 32, 16, 0);
        bool decaying = rep.cauchy_gaps.size() == 3;
        for (double r : rep.gap_ratios) decaying = decaying && (r < 1.0);
        // Bootstrap the gap ratios over replicates.
        double worst_hi = 0.0;
        const std::size_t reps = rep.sums.front().size();
        for (std::size_t l = 0; l + 2 < rep.depths.size(); ++l) {
            std::vector<double> ratios;
            for (std::size_t bs = 0; bs < 400; ++bs) {
                double g0 = 0.0, g1 = 0.0;
                for (std::size_t i = 0; i < reps; ++i) {
                    const auto pick = static_cast<std::size_t>(
                        Philox4x32::uniform(99, l, bs * reps + i) *
                        static_cast<double>(reps));
                    const std::size_t idx = std::min(pick, reps - 1);
                    const double d0 =
                        rep.sums[l + 1][idx] - rep.sums[l][idx];
                    const double d1 =
                        rep.sums[l + 2][idx] - rep.sums[l + 1][idx];
                    g0 += d0 * d0;
                    g1 += d1 * d1;
                }
                if (g0 > 0.0) ratios.push_back(std::sqrt(g1 / g0));
            }
            worst_hi = std::max(worst_hi, quantile(ratios, 0.95));
        }
        ck.note("gap_ratio_hi95", worst_hi);
        ck.require(decaying && worst_hi < 1.0,
                   "Cauchy gaps decay geometrically (bootstrap 95%)");
    }
    return ck.ok;
}

// --- c10: determinism ---------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::vector<std::string>& args) {
    std::string cmd = g_cli_binary;
    for (const auto& a : args) cmd += " " + a;
    cmd += " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

bool c10_determinism(Check& ck) {
    if (g_cli_binary.empty()) {
        ck.require(false, "CLI binary path required as second argument");
        return false;
    }
    const fs::path root = fs::temp_directory_path() / "shelab_acceptance_c10";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::vector<std::string> common = {
        "driftless-rate", "--replicates", "16",
        "--set", "solver.n_x=32", "--set", "solver.n_t=2048",
        "--set", "rate.gaps=0.03125,0.0625", "--set", "output.plot=false"};

    auto with = [&](const std::string& out,
                    std::vector<std::string> extra) {
        std::vector<std::string> args = common;
        args.push_back("--out");
        args.push_back((root / out).string());
        for (auto& e : extra) args.push_back(std::move(e));
        return run_cli(args);
    };

    bool ok = true;
    ok = with("a", {"--workers", "1"}) == 0 && ok;
    ok = with("b", {"--workers", "4"}) == 0 && ok;
    ck.require(ok, "CLI runs exit 0");
    if (ok) {
        const bool worker_match =
            slurp(root / "a" / "raw.csv") == slurp(root / "b" / "raw.csv");
        ck.note("workers_identical", worker_match);
        ck.require(worker_match, "workers = 1 vs 4 raw.csv identical");

        const int rc = run_cli({"--from-manifest",
                                (root / "a" / "manifest.json").string(),
                                "--out", (root / "c").string()});
        ck.require(rc == 0, "re-run from manifest exits 0");
        const bool rerun_match =
            slurp(root / "a" / "raw.csv") == slurp(root / "c" / "raw.csv");
        ck.note("rerun_identical", rerun_match);
        ck.require(rerun_match, "manifest re-run raw.csv byte-identical");
    }
    fs::remove_all(root);
    return ck.ok;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <c1..c10> [cli-binary]\n";
        return 2;
    }
    if (argc >= 3) g_cli_binary = argv[2];
    const std::map<std::string, std::pair<std::string,
                                          std::function<bool(Check&)>>>
        criteria = {
            {"c1", {"kernel suite", c1_kernels}},
            {"c2", {"linear-case exactness", c2_linear}},
            {"c3", {"regularity exponents", c3_regularity}},
            {"c4", {"driftless approximation rate", c4_driftless}},
            {"c5", {"Malliavin moment bounds", c5_malliavin}},
            {"c6", {"stability", c6_stability}},
            {"c7", {"four-point estimate", c7_four_point}},
            {"c8", {"sequence convergence", c8_sequence}},
            {"c9", {"sewing harness", c9_sewing}},
            {"c10", {"determinism", c10_determinism}},
        };
    const auto it = criteria.find(argv[1]);
    if (it == criteria.end()) {
        std::cerr << "unknown criterion: " << argv[1] << "\n";
        return 2;
    }
    Check ck;
    bool ok = false;
    try {
        ok = it->second.second(ck);
    } catch (const std::exception& e) {
        ck.detail << " [EXCEPTION: " << e.what() << "]";
        ok = false;
    }
    std::cout << static_cast<char>(std::toupper(argv[1][0]))
              << (argv[1] + 1) << " " << it->second.first << ":"
              << ck.detail.str() << " " << (ok ? "PASS" : "FAIL")
              << std::endl;
    return ok ? 0 : 1;
}
