#include "shelab/solver.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <stdexcept>

namespace shelab {

SigmaFunction make_sigma_one() { return SigmaFunction{}; }

SigmaFunction make_sigma_constant(double c) {
    if (c == 0.0) {
        // sigma == 0 is allowed for deterministic test flows (no ellipticity)
        return {"zero", [](double) { return 0.0; }, [](double) { return 0.0; },
                [](double) { return 0.0; }, 0.0, true};
    }
    return {"constant", [c](double) { return c; }, [](double) { return 0.0; },
            [](double) { return 0.0; }, std::abs(c), true};
}

SigmaFunction make_sigma_cosine(double a, double b) {
    if (!(a > std::abs(b)))
        throw std::invalid_argument("make_sigma_cosine: need a > |b|");
    return {"cosine",
            [a, b](double x) { return a + b * std::cos(x); },
            [b](double x) { return -b * std::sin(x); },
            [b](double x) { return -b * std::cos(x); },
            a - std::abs(b),
            b == 0.0};
}

SigmaFunction make_sigma_by_name(const std::string& name, double a, double b) {
    if (name == "one") return make_sigma_one();
    if (name == "zero") return make_sigma_constant(0.0);
    if (name == "constant") return make_sigma_constant(a);
    if (name == "cosine") return make_sigma_cosine(a, b);
    throw std::invalid_argument("unknown sigma name: " + name);
}

std::size_t SolutionPath::stamp_index(double t) const {
    if (times.empty()) throw std::invalid_argument("SolutionPath: empty path");
    const double step = dt * static_cast<double>(stride);
    const double pos = (t - times.front()) / step;
    const auto i = static_cast<std::size_t>(std::llround(pos));
    if (i >= times.size() || std::abs(times[i] - t) > 1e-9 * std::max(1.0, std::abs(t)))
        throw std::invalid_argument("SolutionPath: time not stamped");
    return i;
}

namespace {

struct Stepper {
    const SolverConfig& cfg;
    const NoiseGrid& noise;
    SemigroupStepper sg;
    std::shared_ptr<const MollifiedDrift::Table> drift_table;

    std::size_t n;
    double dx_inv;
    double dt;

    // spectral accumulators: u = IFFT(p0hat + Dhat + Vhat)
    std::vector<std::complex<double>> p0hat, Dhat, Vhat, work;
    std::vector<double> u, f, g;

    Stepper(const SolverConfig& c, const FieldState& u0, const NoiseGrid& nz)
        : cfg(c), noise(nz), sg(c.n_x, c.dt()), n(c.n_x), dx_inv(1.0 / c.dx()),
          dt(c.dt()) {
        if (u0.values.size() != n)
            throw std::invalid_argument("solve: u0 length != n_x");
        if (noise.n_x != n || noise.n_t != cfg.n_t)
            throw std::invalid_argument("solve: noise resolution != config");
        for (double v : u0.values)
            if (!std::isfinite(v))
                throw std::invalid_argument("solve: non-finite initial value");
        if (cfg.drift) drift_table = cfg.drift->table();
        sg.to_spectrum(u0.values, p0hat);
        Dhat.assign(n, 0.0);
        Vhat.assign(n, 0.0);
        u = u0.values;
        f.resize(n);
        g.resize(n);
    }

    // advance from step k to k+1 using noise row k
    void advance(std::size_t k) {
        const double* w = noise.row(k);
        const bool noisy = cfg.sigma.mu > 0.0 || cfg.sigma.name != "zero";
        if (drift_table) {
            const auto& b = *drift_table;
            for (std::size_t j = 0; j < n; ++j) f[j] = dt * b(u[j]);
            sg.to_spectrum(f, work);
            for (std::size_t j = 0; j < n; ++j) Dhat[j] += work[j];
        }
        if (noisy) {
            for (std::size_t j = 0; j < n; ++j)
                g[j] = cfg.sigma.value(u[j]) * w[j] * dx_inv;
            sg.to_spectrum(g, work);
            for (std::size_t j = 0; j < n; ++j) Vhat[j] += work[j];
        }
        sg.decay_spectrum(p0hat);
        sg.decay_spectrum(Dhat);
        sg.decay_spectrum(Vhat);
        for (std::size_t j = 0; j < n; ++j)
            work[j] = p0hat[j] + Dhat[j] + Vhat[j];
        sg.to_physical(work, u);
        for (std::size_t j = 0; j < n; ++j)
            if (!std::isfinite(u[j]))
                throw BlowupError("solve: field became non-finite");
    }

    void snapshot(double t, SolutionPath& out) {
        out.times.push_back(t);
        FieldState fu{u, t};
        FieldState fD, fV;
        fD.time = fV.time = t;
        sg.to_physical(Dhat, fD.values);
        sg.to_physical(Vhat, fV.values);
        out.u.push_back(std::move(fu));
        out.D.push_back(std::move(fD));
        out.V.push_back(std::move(fV));
    }
};

SolutionPath run_solver(const SolverConfig& cfg, const FieldState& u0,
                        const NoiseGrid& noise, double span_start,
                        double span_end) {
    const double dt = cfg.dt();
    const auto k0 = static_cast<std::size_t>(std::llround(span_start / dt));
    const auto k1 = static_cast<std::size_t>(std::llround(span_end / dt));
    if (std::abs(span_start - static_cast<double>(k0) * dt) > 1e-9 ||
        std::abs(span_end - static_cast<double>(k1) * dt) > 1e-9)
        throw std::invalid_argument("solve: span endpoints must be on the time grid");
    if (k1 > cfg.n_t || k0 > k1)
        throw std::invalid_argument("solve: invalid span");

    SolutionPath out;
    out.initial = u0;
    out.initial.time = span_start;
    out.span_start = span_start;
    out.span_end = span_end;
    out.n_x = cfg.n_x;
    out.dt = dt;
    out.stride = cfg.output_stride == 0 ? 1 : cfg.output_stride;
    out.noise_seed = noise.seed;
    out.noise_stream = noise.stream_id;
    out.noise_n_t = noise.n_t;

    Stepper st(cfg, u0, noise);
    st.snapshot(span_start, out);
    for (std::size_t k = k0; k < k1; ++k) {
        st.advance(k);
        const std::size_t done = k + 1 - k0;
        if (done % out.stride == 0 || k + 1 == k1)
            st.snapshot(static_cast<double>(k + 1) * dt, out);
    }
    return out;
}

} // namespace

SolutionPath solve_she(const SolverConfig& cfg, const FieldState& u0,
                       const NoiseGrid& noise, double span_start,
                       double span_end) {
    if (span_start > span_end)
        throw std::invalid_argument("solve_she: need span_start <= span_end");
    return run_solver(cfg, u0, noise, span_start, span_end);
}

SolutionPath solve_driftless(const SolverConfig& cfg, const FieldState& z,
                             double s, const NoiseGrid& noise,
                             double span_end) {
    SolverConfig c = cfg;
    c.drift.reset();
    return run_solver(c, z, noise, s, span_end);
}

SolutionPath driftless_shadow(const SolutionPath& path, double s,
                              const SolverConfig& cfg, const NoiseGrid& noise) {
    if (noise.seed != path.noise_seed || noise.stream_id != path.noise_stream ||
        noise.n_t != path.noise_n_t)
        throw std::invalid_argument("driftless_shadow: noise does not match path");
    const FieldState& z = path.u_at(s);
    return solve_driftless(cfg, z, s, noise, path.span_end);
}

void export_path_csv(const SolutionPath& path, const std::string& file) {
    std::FILE* f = std::fopen(file.c_str(), "w");
    if (!f) throw std::runtime_error("export_path_csv: cannot open " + file);
    std::fprintf(f, "time,x,u,D,V\n");
    const double dx = 1.0 / static_cast<double>(path.n_x);
    for (std::size_t i = 0; i < path.times.size(); ++i) {
        for (std::size_t j = 0; j < path.n_x; ++j) {
            std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g\n", path.times[i],
                         static_cast<double>(j) * dx, path.u[i].values[j],
                         path.D[i].values[j], path.V[i].values[j]);
        }
    }
    std::fclose(f);
}

} // namespace shelab
