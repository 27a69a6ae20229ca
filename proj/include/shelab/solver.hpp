#ifndef SHELAB_SOLVER_HPP
#define SHELAB_SOLVER_HPP

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "shelab/besov.hpp"
#include "shelab/noise.hpp"
#include "shelab/torus_heat.hpp"

namespace shelab {

struct BlowupError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A field on the torus grid at a fixed time.
struct FieldState {
    std::vector<double> values;
    double time = 0.0;
};

/// Diffusion coefficient with derivatives and ellipticity floor mu > 0
/// (sigma^2 >= mu^2 by construction of the shipped sigmas).
struct SigmaFunction {
    std::string name = "one";
    std::function<double(double)> value = [](double) { return 1.0; };
    std::function<double(double)> deriv1 = [](double) { return 0.0; };
    std::function<double(double)> deriv2 = [](double) { return 0.0; };
    double mu = 1.0;
    bool is_constant = true;
};

SigmaFunction make_sigma_one();
SigmaFunction make_sigma_constant(double c);
/// sigma(x) = a + b cos(x); mu = a - |b| (requires a > |b| >= 0).
SigmaFunction make_sigma_cosine(double a = 0.75, double b = 0.25);
SigmaFunction make_sigma_by_name(const std::string& name, double a, double b);

struct SolverConfig {
    std::size_t n_t = 16384;
    std::size_t n_x = 256;
    double horizon = 0.25; // T
    SigmaFunction sigma;
    std::optional<MollifiedDrift> drift; // none = driftless
    std::size_t output_stride = 1;       // stamps every `stride` steps

    double dt() const { return horizon / static_cast<double>(n_t); }
    double dx() const { return 1.0 / static_cast<double>(n_x); }
};

/// Time-stamped solution with the running mild-form decomposition
/// u = P_t u0 + D + V (exact to round-off by construction of the scheme).
struct SolutionPath {
    std::vector<double> times;
    std::vector<FieldState> u;
    std::vector<FieldState> D;
    std::vector<FieldState> V;
    FieldState initial;       // u0 at the span start
    double span_start = 0.0;
    double span_end = 0.0;
    std::size_t n_x = 0;
    double dt = 0.0;
    std::size_t stride = 1;
    // noise fingerprint, for consistency checks downstream
    std::uint64_t noise_seed = 0;
    std::uint64_t noise_stream = 0;
    std::size_t noise_n_t = 0;

    /// Index of the stamp at grid time t (throws if t is not stamped).
    std::size_t stamp_index(double t) const;
    const FieldState& u_at(double t) const { return u[stamp_index(t)]; }
};

/// Exponential-Euler mild-form time stepping for
///   (d_t - Lap) u = b^n(u) + sigma(u) xi,  u(s, .) = u0,
/// over span [s, T]: one step is u_{k+1} = P_dt[u_k + dt b(u_k) +
/// sigma(u_k) W_k / dx], with P_dt applied spectrally and the D, V parts
/// accumulated through the same semigroup.
SolutionPath solve_she(const SolverConfig& cfg, const FieldState& u0,
                       const NoiseGrid& noise, double span_start,
                       double span_end);

/// The driftless flow phi^{z,s}: same stepping with the drift term omitted.
SolutionPath solve_driftless(const SolverConfig& cfg, const FieldState& z,
                             double s, const NoiseGrid& noise, double span_end);

/// psi^s := phi^{u(s,.),s} driven by the SAME noise as `path` — the
/// driftless flow restarted from the solution at time s. Requires the
/// path to carry a stamp at s.
SolutionPath driftless_shadow(const SolutionPath& path, double s,
                              const SolverConfig& cfg, const NoiseGrid& noise);

/// CSV export: columns time, x, u, D, V.
void export_path_csv(const SolutionPath& path, const std::string& file);

} // namespace shelab

#endif
