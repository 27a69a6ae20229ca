#include "shelab/sewing.hpp"

#include <cmath>
#include <stdexcept>

#include "shelab/parallel.hpp"
#include "shelab/torus_heat.hpp"

namespace shelab {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::size_t grid_steps(double span, double dt, const char* what) {
    const double raw = span / dt;
    const auto n = static_cast<long long>(std::llround(raw));
    if (n < 0 || std::abs(raw - static_cast<double>(n)) > 1e-9)
        throw std::invalid_argument(std::string(what) +
                                    ": endpoint not on the time grid");
    return static_cast<std::size_t>(n);
}

} // namespace

std::uint64_t mix_reseed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                         std::uint64_t c) {
    return splitmix(splitmix(splitmix(splitmix(base) ^ a) ^ b) ^ c);
}

double riemann_sum(const Germ& germ, double a, double b, std::size_t depth,
                   const NoiseGrid& noise, std::size_t M,
                   std::uint64_t reseed_base) {
    if (!(b >= a)) throw std::invalid_argument("riemann_sum: need b >= a");
    if (M == 0) throw std::invalid_argument("riemann_sum: need M >= 1");
    const std::size_t n = std::size_t{1} << depth;
    const double h = (b - a) / static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = a + static_cast<double>(i) * h;
        const double t = (i + 1 == n) ? b : s + h;
        try {
            acc += germ.evaluator(s, t, noise, M, mix_reseed(reseed_base, i));
        } catch (const std::exception& e) {
            throw std::runtime_error("riemann_sum: germ failed on [" +
                                     std::to_string(s) + ", " +
                                     std::to_string(t) + "]: " + e.what());
        }
    }
    return acc;
}

Germ drift_germ(const SolverConfig& cfg, const FieldState& u0,
                const MollifiedDrift& b, double t_eval,
                std::size_t x_index) {
    if (x_index >= cfg.n_x)
        throw std::invalid_argument("drift_germ: x_index out of range");
    if (!(t_eval > 0.0) || t_eval > cfg.horizon + 1e-12)
        throw std::invalid_argument("drift_germ: t_eval outside (0, T]");

    Germ germ;
    germ.name = "drift[" + b.base().name + "]";
    germ.eps1 = b.base().alpha_nominal / 4.0 + 0.5; // target x1 - 1/2
    germ.eps2 = 0.0;

    const TorusGrid grid(cfg.n_x);
    const double x_pt = grid.points[x_index];
    auto table = b.table();

    germ.evaluator = [cfg, u0, t_eval, x_pt, table](
                         double s, double t, const NoiseGrid& noise,
                         std::size_t M, std::uint64_t reseed_base) {
        if (!(s <= t) || t > t_eval + 1e-12)
            throw std::invalid_argument("drift_germ: need s <= t <= t_eval");
        if (noise.n_x != cfg.n_x ||
            std::abs(noise.dt() - cfg.dt()) > 1e-12 * cfg.dt())
            throw std::invalid_argument("drift_germ: noise resolution "
                                        "mismatch");
        const double dt = cfg.dt();
        const double dx = cfg.dx();
        const std::size_t n_steps = grid_steps(t - s, dt, "drift_germ");
        const std::size_t k_s = grid_steps(s, dt, "drift_germ");
        if (n_steps == 0) return 0.0;

        // Work on a truncated copy of the noise covering [0, t] only;
        // futures then need to resample just the rows in [s, t), not the
        // whole horizon (split_at semantics, restricted).
        NoiseGrid local = noise;
        local.n_t = k_s + n_steps;
        local.horizon = t;
        local.increments.resize(local.n_t * local.n_x);
        SolverConfig local_cfg = cfg;
        local_cfg.n_t = local.n_t;
        local_cfg.horizon = t;

        // Base solution up to s on THIS noise (the evaluator may be handed
        // a resampled noise, so stamps from any precomputed path would be
        // stale). Only the state at s is stored.
        FieldState at_s = u0;
        at_s.time = 0.0;
        if (s > 0.0) {
            SolverConfig base_cfg = local_cfg;
            base_cfg.output_stride = k_s;
            const SolutionPath base =
                solve_she(base_cfg, u0, local, 0.0, s);
            at_s = base.u_at(s);
        }

        // Kernel rows at the step midpoints: tau = t_eval - r >= dt/2.
        const TorusGrid grid(cfg.n_x);
        const double x_here = x_pt;
        std::vector<double> rows(n_steps * cfg.n_x);
        for (std::size_t k = 0; k < n_steps; ++k) {
            const double r_mid = s + (static_cast<double>(k) + 0.5) * dt;
            const double tau = t_eval - r_mid;
            for (std::size_t j = 0; j < cfg.n_x; ++j)
                rows[k * cfg.n_x + j] =
                    heat_kernel_torus(tau, x_here, grid.points[j]);
        }

        SolverConfig shadow_cfg = local_cfg;
        shadow_cfg.drift.reset();
        shadow_cfg.output_stride = 1;

        // Reusable future grid: only the rows in [s, t) change per draw,
        // with the same cell-index convention as split_at, so each future
        // matches what a full-grid resample would produce.
        NoiseGrid fut = local;
        const double sd = std::sqrt(dt * dx);
        const std::size_t c_lo = k_s * cfg.n_x;
        const std::size_t c_hi = (k_s + n_steps) * cfg.n_x;
        double acc = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            const std::uint64_t reseed = mix_reseed(reseed_base, 0x5EEDu, m);
            for (std::size_t c = c_lo; c < c_hi; ++c)
                fut.increments[c] =
                    sd * Philox4x32::normal(reseed, fut.stream_id, c);
            const SolutionPath psi =
                solve_driftless(shadow_cfg, at_s, s, fut, t);
            double integral = 0.0;
            for (std::size_t k = 0; k < n_steps; ++k) {
                const auto& u_k = psi.u[k].values; // left endpoint of step k
                const double* row = &rows[k * cfg.n_x];
                double inner = 0.0;
                for (std::size_t j = 0; j < cfg.n_x; ++j)
                    inner += row[j] * (*table)(u_k[j]);
                integral += inner;
            }
            acc += integral * dt * dx;
        }
        return acc / static_cast<double>(M);
    };
    return germ;
}

SewingReport measure_germ_exponents(const GermFactory& factory,
                                    const std::vector<double>& scales,
                                    double s, std::size_t replicates,
                                    std::size_t M, std::size_t M_outer,
                                    std::size_t workers) {
    if (replicates < 100)
        throw std::invalid_argument(
            "measure_germ_exponents: ensemble below 100 replicates refused");
    if (scales.size() < 2)
        throw std::invalid_argument("measure_germ_exponents: need >= 2 scales");
    if (M == 0 || M_outer == 0)
        throw std::invalid_argument("measure_germ_exponents: need M >= 1");

    const std::size_t ns = scales.size();
    std::vector<std::vector<double>> a_samples(ns),
        da_samples(ns);
    for (auto& v : a_samples) v.assign(replicates, 0.0);
    for (auto& v : da_samples) v.assign(replicates, 0.0);

    parallel_for(replicates, workers, [&](std::size_t i) {
        auto [germ, noise] = factory(i);
        for (std::size_t q = 0; q < ns; ++q) {
            const double h = scales[q];
            const double t = s + h;
            const double mid = s + h / 2.0;
            const std::uint64_t ns_base = mix_reseed(0xA5E41u, i, q);
            const double a_st =
                germ.evaluator(s, t, noise, M, mix_reseed(ns_base, 1));
            const double a_sm =
                germ.evaluator(s, mid, noise, M, mix_reseed(ns_base, 2));
            // E^s A_{mid,t}: average the germ over resampled futures of
            // the noise on (s, mid] (and beyond; only (s, mid] matters
            // for the germ's base state at mid).
            double es_a_mt = 0.0;
            for (std::size_t mo = 0; mo < M_outer; ++mo) {
                const NoiseGrid resampled =
                    split_at(noise, s, mix_reseed(ns_base, 3, mo));
                es_a_mt += germ.evaluator(mid, t, resampled, M,
                                          mix_reseed(ns_base, 4, mo));
            }
            es_a_mt /= static_cast<double>(M_outer);
            a_samples[q][i] = a_st;
            da_samples[q][i] = a_st - a_sm - es_a_mt;
        }
    });

    SewingReport rep;
    rep.s = s;
    rep.scales = scales;
    rep.replicates = replicates;
    rep.a_norms.resize(ns);
    rep.a_stderrs.resize(ns);
    rep.da_norms.resize(ns);
    rep.da_stderrs.resize(ns);
    for (std::size_t q = 0; q < ns; ++q) {
        const auto a_est = mc_lp_norm(a_samples[q], 2.0);
        rep.a_norms[q] = a_est.value;
        rep.a_stderrs[q] = a_est.stderr_;
        const auto d_est = mc_lp_norm(da_samples[q], 2.0);
        rep.da_norms[q] = d_est.value;
        rep.da_stderrs[q] = d_est.stderr_;
    }
    rep.x1_fit = fit_rate(scales, rep.a_norms, rep.a_stderrs);

    // x2: trust the fit only when the dA norms carry signal. A norm
    // within three standard errors of zero at half or more of the scales
    // means the estimate is dominated by the E^s resampling noise.
    std::size_t weak = 0;
    bool fit_possible = true;
    for (std::size_t q = 0; q < ns; ++q) {
        if (!(rep.da_norms[q] > 0.0)) fit_possible = false;
        if (rep.da_norms[q] <= 3.0 * rep.da_stderrs[q]) ++weak;
    }
    rep.x2_no_signal = !fit_possible || 2 * weak >= ns;
    if (fit_possible)
        rep.x2_fit = fit_rate(scales, rep.da_norms, rep.da_stderrs);
    return rep;
}

SewingReport sewing_depth_study(const GermFactory& factory, double a,
                                double b,
                                const std::vector<std::size_t>& depths,
                                std::size_t replicates, std::size_t M,
                                std::size_t workers) {
    if (depths.size() < 2)
        throw std::invalid_argument("sewing_depth_study: need >= 2 depths");
    if (replicates == 0)
        throw std::invalid_argument("sewing_depth_study: empty ensemble");

    SewingReport rep;
    rep.depths = depths;
    rep.replicates = replicates;
    rep.sums.assign(depths.size(), std::vector<double>(replicates, 0.0));

    parallel_for(replicates, workers, [&](std::size_t i) {
        auto [germ, noise] = factory(i);
        for (std::size_t d = 0; d < depths.size(); ++d)
            rep.sums[d][i] = riemann_sum(germ, a, b, depths[d], noise, M,
                                         mix_reseed(0xDEB7u, i, depths[d]));
    });

    for (std::size_t d = 0; d + 1 < depths.size(); ++d) {
        std::vector<double> diff(replicates);
        for (std::size_t i = 0; i < replicates; ++i)
            diff[i] = rep.sums[d + 1][i] - rep.sums[d][i];
        rep.cauchy_gaps.push_back(mc_lp_norm(diff, 2.0).value);
    }
    for (std::size_t d = 0; d + 1 < rep.cauchy_gaps.size(); ++d) {
        const double g0 = rep.cauchy_gaps[d];
        rep.gap_ratios.push_back(g0 > 0.0 ? rep.cauchy_gaps[d + 1] / g0
                                          : 0.0);
    }
    return rep;
}

} // namespace shelab
