#ifndef SHELAB_EXPERIMENTS_HPP
#define SHELAB_EXPERIMENTS_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "shelab/besov.hpp"
#include "shelab/solver.hpp"
#include "shelab/stats.hpp"

namespace shelab {

/// Replicate fan-out parameters. Replicate i is always driven by the
/// noise stream (base_seed, stream i); the reduction order is fixed by
/// replicate index, so results do not depend on the worker count.
struct EnsembleConfig {
    std::size_t replicates = 100;
    std::uint64_t base_seed = 1;
    std::size_t workers = 1; // 0 = auto
};

/// A rate fit together with the raw per-scale replicate samples it was
/// fitted from (kept for bootstrapping and CSV export).
struct SampledRate {
    RateReport fit;
    std::vector<double> scales;
    std::vector<std::vector<double>> samples; // [scale][replicate]
    double p = 2.0;
    std::size_t replicates = 0;
    std::uint64_t base_seed = 0;
    /// All samples at round-off level; no log-log fit is possible (e.g.
    /// the zero-drift case, where the shadow equals the solution).
    bool degenerate_zero = false;
    double max_abs_sample = 0.0;
};

/// Driftless-approximation rate: for each gap h, the L_p(Omega) norm of
/// u(t, x) - psi^{t-h}(t, x), where psi is the driftless flow restarted
/// from u(t-h) under the same noise. The expected slope is 1 + alpha/4
/// for a drift of nominal regularity alpha.
SampledRate exp_driftless_rate(const SolverConfig& cfg, const FieldState& u0,
                               const std::vector<double>& gaps, double t_eval,
                               std::size_t x_index, double p,
                               const EnsembleConfig& ens);

enum class FieldKind { UMinusPu0, D, V };

FieldKind field_kind_by_name(const std::string& name);

/// Temporal / spatial Holder profile of the selected field component:
/// fits || X(t0 + h, x) - X(t0, x) ||_{L_p} over dyadic h and
/// || X(t0, x + delta) - X(t0, x) ||_{L_p} over dyadic delta.
struct HolderProfile {
    SampledRate temporal;
    SampledRate spatial;
};

HolderProfile exp_holder_profile(const SolverConfig& cfg,
                                 const FieldState& u0, FieldKind which,
                                 double t0, std::size_t x_index,
                                 const std::vector<double>& temporal_gaps,
                                 const std::vector<double>& spatial_gaps,
                                 double p, const EnsembleConfig& ens);

/// Supremum-type seminorm estimate over a probe grid.
struct BracketEstimate {
    std::string kind; // "V_p", "S_p^1/2", "F4"
    double value = 0.0;
    double stderr_ = 0.0; // Monte-Carlo stderr at the attaining probe
    double p = 2.0;
    double gamma = 0.5;
    std::size_t n_probes = 0;
};

struct ProbePair {
    double s = 0.0;
    double t = 0.0;
};

/// [u1, u2]_{S_p^beta}: max over probes (s, t) and points x of
/// || u1(t,x) - psi1(t,x) - u2(t,x) + psi2(t,x) ||_{L_p} / (t-s)^beta,
/// with psi_i the driftless flow restarted from u_i(s) under the SAME
/// noise. cfg1/cfg2 must share resolution; noise is shared pairwise.
BracketEstimate estimate_s_bracket(const SolverConfig& cfg1,
                                   const SolverConfig& cfg2,
                                   const FieldState& u01,
                                   const FieldState& u02,
                                   const std::vector<ProbePair>& probes,
                                   const std::vector<std::size_t>& x_indices,
                                   double beta, double p,
                                   const EnsembleConfig& ens);

/// [D^u]_{V_p^gamma}: max over probes of
/// || D(t,x) - [P_{t-s} D(s,.)](x) ||_{L_p} / (t-s)^gamma.
BracketEstimate estimate_v_bracket(const SolverConfig& cfg,
                                   const FieldState& u0, double gamma,
                                   const std::vector<ProbePair>& probes,
                                   const std::vector<std::size_t>& x_indices,
                                   double p, const EnsembleConfig& ens);

/// One discrepancy level of the stability experiment: two systems with
/// their input distance (initial-condition sup gap + drift distance).
struct StabilityLevel {
    SolverConfig cfg1;
    SolverConfig cfg2;
    FieldState u01;
    FieldState u02;
    double discrepancy = 0.0;
};

struct StabilityReport {
    std::vector<double> discrepancies;
    std::vector<double> brackets;
    std::vector<double> bracket_stderrs;
    RateReport decay_fit; // log bracket vs log discrepancy; slope >= ~1
    double p = 2.0;
};

StabilityReport exp_stability(const std::vector<StabilityLevel>& levels,
                              const std::vector<ProbePair>& probes,
                              const std::vector<std::size_t>& x_indices,
                              double p, const EnsembleConfig& ens);

/// Four-point quantity at (s, a, t): with Z1 = psi1(a), Z2 = psi2(a)
/// (driftless flows restarted at s from u1(s), u2(s)) and Z3 = u1(a),
/// Z4 = u2(a), all four driftless flows are run from a to t under the
/// same noise and phi^{Z1} - phi^{Z2} - phi^{Z3} + phi^{Z4} is measured
/// at x. The fit is over dyadic gaps a - s; target exponent 1/2.
SampledRate four_point_estimate(const SolverConfig& cfg1,
                                const SolverConfig& cfg2,
                                const FieldState& u01, const FieldState& u02,
                                const std::vector<double>& gaps, double a,
                                double t_eval, std::size_t x_index, double p,
                                const EnsembleConfig& ens);

/// Convergence of the approximation sequence u^n driven by mollified
/// drifts b^n = P_{eps_n} b, eps_n = 4^{-n}: consecutive sup-norm gaps
/// of the D and V parts at t_eval, and their ratios to the drift
/// distances || b^n - b^{n+1} ||_{C^{alpha-1}}.
struct SequenceReport {
    std::vector<std::size_t> levels;     // n = n_lo .. n_hi
    std::vector<double> eps;             // 4^{-n}
    std::vector<double> d_gaps;          // level n vs n+1
    std::vector<double> d_stderrs;
    std::vector<double> v_gaps;
    std::vector<double> v_stderrs;
    std::vector<double> drift_dists;     // ||b^n - b^{n+1}||_{C^{alpha-1}}
    std::vector<double> d_ratios;        // d_gap / drift_dist
    std::vector<double> v_ratios;
    bool d_monotone = false;
    bool v_monotone = false;
    double d_ratio_spread = 0.0;         // max ratio / min ratio
    double v_ratio_spread = 0.0;
};

SequenceReport exp_sequence_convergence(const SolverConfig& cfg,
                                        const FieldState& u0,
                                        const DistributionalDrift& b,
                                        std::size_t n_lo, std::size_t n_hi,
                                        double t_eval, double p,
                                        const EnsembleConfig& ens);

} // namespace shelab

#endif
