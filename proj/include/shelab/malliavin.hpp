#ifndef SHELAB_MALLIAVIN_HPP
#define SHELAB_MALLIAVIN_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "shelab/solver.hpp"
#include "shelab/stats.hpp"

namespace shelab {

/// Discrete Malliavin derivative D_{theta,zeta} u(t, x) of the driftless
/// flow: the sensitivity of the scheme's output at (t, x) to the noise
/// cell at (theta, zeta), divided by the cell area (a density in
/// d theta d zeta). Rows with theta >= t vanish identically
/// (adaptedness).
struct MalliavinField {
    std::size_t n_theta = 0;    // time rows, aligned with the path steps
    std::size_t n_x = 0;
    double dt = 0.0;
    double dx = 0.0;
    double span_start = 0.0;    // theta of row 0
    double t = 0.0;             // evaluation time
    std::size_t x_index = 0;    // evaluation point x_{x_index}
    std::vector<double> values; // row-major [k * n_x + j]

    double at(std::size_t k, std::size_t j) const {
        return values[k * n_x + j];
    }
    double theta(std::size_t k) const {
        return span_start + static_cast<double>(k) * dt;
    }
};

/// Backward (adjoint) sweep through the linearised scheme. Requires a
/// stride-1 driftless path whose noise fingerprint matches `noise`, and
/// t stamped on the path. For sigma == c the values reproduce the
/// discrete heat propagator: at(k, j) = c * p_{t - theta_k}(x, x_j).
MalliavinField simulate_first_derivative(const SolutionPath& path,
                                         const SolverConfig& cfg,
                                         const NoiseGrid& noise, double t,
                                         std::size_t x_index);

/// Cameron-Martin norm of the derivative field:
/// sqrt( sum values^2 * dt * dx ).
double h_norm(const MalliavinField& field);

/// Weighted combination sum_i weights[i] * fields[i] (linearity of the
/// derivative). Weights must sum to 1 within 1e-12 and the fields must
/// share a grid; all must come from flows driven by the same noise for
/// the combination to be meaningful.
MalliavinField combo_derivative(const std::vector<double>& weights,
                                const std::vector<MalliavinField>& fields);

/// Power-law fit of E[ |D u(t,x)|_H^{+p} ] or E[ |D u(t,x)|_H^{-p} ]
/// against t. The expected small-time behaviour is t^{p/4} for the
/// positive moment and no worse than t^{-p/4} for the negative one.
struct MomentBoundReport {
    double p = 2.0;
    bool positive = true;
    RateReport fit;            // fit of the raw moment against t
    SlopeCI ci;                // bootstrap CI for the slope
    bool reliable = false;     // CI width within the requested budget
    double max_ci_width = 0.0;
    std::size_t excluded = 0;  // degenerate (zero-norm) samples dropped
};

/// h_samples[i] holds replicate h-norm values at time t_grid[i].
/// Negative moments drop exactly-degenerate samples (and throw if more
/// than 1% of a cell is degenerate). The report refuses to certify
/// (reliable = false) if the bootstrap CI is wider than max_ci_width.
MomentBoundReport estimate_moment_bounds(
    const std::vector<double>& t_grid,
    const std::vector<std::vector<double>>& h_samples, double p,
    bool positive, std::size_t bootstrap_resamples, double max_ci_width,
    std::uint64_t seed);

} // namespace shelab

#endif
