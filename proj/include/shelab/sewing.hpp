#ifndef SHELAB_SEWING_HPP
#define SHELAB_SEWING_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "shelab/besov.hpp"
#include "shelab/noise.hpp"
#include "shelab/solver.hpp"
#include "shelab/stats.hpp"

namespace shelab {

/// A two-parameter germ A_{s,t}. The evaluator receives the frozen-past
/// noise, a future-resample budget M (conditional expectations are
/// approximated by averaging M futures drawn via split_at), and a reseed
/// namespace so independent evaluations never share future draws. The
/// result is F_s-measurable up to the O(M^{-1/2}) resampling error.
struct Germ {
    std::string name;
    double eps1 = 0.0; // claimed margin in |t-s|^{1/2 + eps1}
    double eps2 = 0.0; // claimed margin in |t-s|^{1 + eps2}
    std::function<double(double s, double t, const NoiseGrid& noise,
                         std::size_t M, std::uint64_t reseed_base)>
        evaluator;
};

/// Deterministic reseed namespacing (splitmix-style mixing), so that the
/// futures drawn for different (replicate, scale, interval, role) tuples
/// never collide.
std::uint64_t mix_reseed(std::uint64_t base, std::uint64_t a,
                         std::uint64_t b = 0, std::uint64_t c = 0);

/// Riemann sum of the germ over the dyadic partition of [a, b] at the
/// given depth: 2^depth intervals, each evaluated with M futures and its
/// own reseed namespace.
double riemann_sum(const Germ& germ, double a, double b, std::size_t depth,
                   const NoiseGrid& noise, std::size_t M,
                   std::uint64_t reseed_base);

/// The regularisation germ
///   A_{s,t}(x) = E^s  int_s^t int_T  p_{T_eval - r}(x, y)
///                                    b(psi^s(r, y)) dy dr,
/// where psi^s is the driftless flow restarted at s from the base
/// solution of `cfg` (initial condition u0, mollified drift cfg.drift).
/// Each evaluation re-solves the base path on the supplied noise up to
/// s, so handing it a split/resampled noise is safe. Time quadrature is
/// the midpoint rule in the kernel argument (T_eval - r >= dt/2 always);
/// psi is read at the left step endpoint.
Germ drift_germ(const SolverConfig& cfg, const FieldState& u0,
                const MollifiedDrift& b, double t_eval,
                std::size_t x_index);

/// Builds one replicate's germ together with the noise driving it.
using GermFactory =
    std::function<std::pair<Germ, NoiseGrid>(std::size_t replicate)>;

struct SewingReport {
    // exponent measurement
    double s = 0.0;
    std::vector<double> scales;        // t - s
    std::vector<double> a_norms;       // ||A_{s,s+h}||_{L2(Omega)}
    std::vector<double> a_stderrs;
    std::vector<double> da_norms;      // ||E^s dA_{s,mid,t}||_{L2(Omega)}
    std::vector<double> da_stderrs;
    RateReport x1_fit;                 // requires x1 > 1/2 for sewing
    RateReport x2_fit;                 // requires x2 > 1
    bool x2_no_signal = false;         // dA below the resampling noise floor
    std::size_t replicates = 0;

    // dyadic depth study
    std::vector<std::size_t> depths;
    std::vector<std::vector<double>> sums; // per depth, per replicate
    std::vector<double> cauchy_gaps;       // L2 gap between adjacent depths
    std::vector<double> gap_ratios;        // gaps[l+1] / gaps[l]
};

/// Fits ||A_{s,s+h}||_{L2} ~ h^{x1} and ||E^s dA||_{L2} ~ h^{x2} (midpoint
/// dA) over the given scales. E^s A_{mid,t} inside dA is approximated by
/// M_outer resamples of the noise on (s, mid]. Refuses ensembles smaller
/// than 100 replicates. When the dA samples sit below the Monte-Carlo
/// noise floor the x2 fit is flagged no-signal instead of being trusted.
SewingReport measure_germ_exponents(const GermFactory& factory,
                                    const std::vector<double>& scales,
                                    double s, std::size_t replicates,
                                    std::size_t M, std::size_t M_outer,
                                    std::size_t workers);

/// Dyadic Riemann sums of the germ over [a, b] at the given depths and
/// the L2 Cauchy gaps between adjacent depths.
SewingReport sewing_depth_study(const GermFactory& factory, double a,
                                double b,
                                const std::vector<std::size_t>& depths,
                                std::size_t replicates, std::size_t M,
                                std::size_t workers);

} // namespace shelab

#endif
