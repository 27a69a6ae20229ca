#include "shelab/malliavin.hpp"

#include <cmath>
#include <stdexcept>

#include "shelab/torus_heat.hpp"

namespace shelab {

MalliavinField simulate_first_derivative(const SolutionPath& path,
                                         const SolverConfig& cfg,
                                         const NoiseGrid& noise, double t,
                                         std::size_t x_index) {
    if (path.stride != 1)
        throw std::invalid_argument(
            "simulate_first_derivative: path must be stored at stride 1");
    if (cfg.drift.has_value())
        throw std::invalid_argument(
            "simulate_first_derivative: only the driftless flow is "
            "differentiated");
    if (path.noise_seed != noise.seed ||
        path.noise_stream != noise.stream_id || path.noise_n_t != noise.n_t)
        throw std::invalid_argument(
            "simulate_first_derivative: noise fingerprint mismatch");
    if (x_index >= path.n_x)
        throw std::invalid_argument(
            "simulate_first_derivative: x_index out of range");
    if (noise.n_x != path.n_x)
        throw std::invalid_argument(
            "simulate_first_derivative: noise/path resolution mismatch");

    const double dt = path.dt;
    const double dx = 1.0 / static_cast<double>(path.n_x);
    const std::size_t kT = path.stamp_index(t); // steps since span_start
    const std::size_t n_theta = path.times.size() - 1;
    // Noise row backing the step from times[k] to times[k+1].
    const auto k0 = static_cast<std::size_t>(
        std::llround(path.span_start / noise.dt()));

    MalliavinField field;
    field.n_theta = std::max<std::size_t>(n_theta, kT);
    field.n_x = path.n_x;
    field.dt = dt;
    field.dx = dx;
    field.span_start = path.span_start;
    field.t = t;
    field.x_index = x_index;
    field.values.assign(field.n_theta * field.n_x, 0.0);

    if (kT == 0) return field; // theta grid is empty: D u(s, x) == 0

    // Adjoint sweep: G_k[j] = d u(t, x) / d u^k_j, seeded at the target
    // and pulled back through one linearised step at a time. P_dt is
    // symmetric, so its transpose is itself.
    std::vector<double> grad(path.n_x, 0.0);
    grad[x_index] = 1.0;
    SemigroupStepper sg(path.n_x, dt);

    const auto& sigma = cfg.sigma;
    for (std::size_t k = kT; k-- > 0;) {
        sg.step(grad); // grad now holds r_k = P_dt G_{k+1}
        const auto& u_k = path.u[k].values;
        const double* w = noise.row(k0 + k);
        double* out = &field.values[k * field.n_x];
        for (std::size_t j = 0; j < path.n_x; ++j) {
            out[j] = grad[j] * sigma.value(u_k[j]) / dx;
            grad[j] *= 1.0 + sigma.deriv1(u_k[j]) * w[j] / dx;
        }
    }
    return field;
}

double h_norm(const MalliavinField& field) {
    double acc = 0.0;
    for (double v : field.values) acc += v * v;
    return std::sqrt(acc * field.dt * field.dx);
}

MalliavinField combo_derivative(const std::vector<double>& weights,
                                const std::vector<MalliavinField>& fields) {
    if (weights.empty() || weights.size() != fields.size())
        throw std::invalid_argument(
            "combo_derivative: weights/fields size mismatch");
    double total = 0.0;
    for (double c : weights) total += c;
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument(
            "combo_derivative: weights must sum to 1 within 1e-12");

    MalliavinField out = fields.front();
    for (double& v : out.values) v *= weights.front();
    for (std::size_t i = 1; i < fields.size(); ++i) {
        const auto& f = fields[i];
        if (f.n_theta != out.n_theta || f.n_x != out.n_x ||
            f.dt != out.dt || f.span_start != out.span_start ||
            f.t != out.t || f.x_index != out.x_index)
            throw std::invalid_argument(
                "combo_derivative: fields live on different grids");
        for (std::size_t m = 0; m < out.values.size(); ++m)
            out.values[m] += weights[i] * f.values[m];
    }
    return out;
}

MomentBoundReport estimate_moment_bounds(
    const std::vector<double>& t_grid,
    const std::vector<std::vector<double>>& h_samples, double p,
    bool positive, std::size_t bootstrap_resamples, double max_ci_width,
    std::uint64_t seed) {
    if (t_grid.size() < 2)
        throw std::invalid_argument("estimate_moment_bounds: need >= 2 times");
    if (h_samples.size() != t_grid.size())
        throw std::invalid_argument(
            "estimate_moment_bounds: grid/sample size mismatch");
    if (!(p > 0.0))
        throw std::invalid_argument("estimate_moment_bounds: need p > 0");

    MomentBoundReport rep;
    rep.p = p;
    rep.positive = positive;
    rep.max_ci_width = max_ci_width;

    // Transform each h-norm sample into the moment integrand h^{+-p};
    // the fit then targets E[h^{+-p}] directly.
    std::vector<std::vector<double>> moments(t_grid.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const auto& cell = h_samples[i];
        if (cell.empty())
            throw std::invalid_argument(
                "estimate_moment_bounds: empty sample cell");
        std::size_t degenerate = 0;
        for (double h : cell) {
            if (!positive && !(h > 0.0)) {
                ++degenerate;
                continue;
            }
            moments[i].push_back(positive ? std::pow(h, p)
                                          : std::pow(h, -p));
        }
        rep.excluded += degenerate;
        if (static_cast<double>(degenerate) /
                static_cast<double>(cell.size()) >
            kMaxNonFiniteFraction)
            throw std::runtime_error(
                "estimate_moment_bounds: more than 1% degenerate samples");
    }

    std::vector<double> means(t_grid.size()), ses(t_grid.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const auto est = mc_mean(moments[i]);
        means[i] = est.value;
        ses[i] = est.stderr_;
    }
    rep.fit = fit_rate(t_grid, means, ses);
    rep.ci = bootstrap_slope_ci(t_grid, moments, 1.0, bootstrap_resamples,
                                0.95, seed);
    rep.reliable = rep.ci.width() <= max_ci_width;
    return rep;
}

} // namespace shelab
