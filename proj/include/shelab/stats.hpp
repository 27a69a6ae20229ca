#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace shelab {

// Monte-Carlo estimate of an L_p norm, E[|X|^p]^{1/p}, with a
// delta-method standard error.
struct LpEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

// More than this fraction of non-finite samples aborts the estimate
// instead of silently dropping them.
inline constexpr double kMaxNonFiniteFraction = 0.01;

LpEstimate mc_lp_norm(const std::vector<double>& samples, double p);

// Plain sample mean with standard error (p = 1 without the absolute
// value), used for signed quantities such as germ increments.
LpEstimate mc_mean(const std::vector<double>& samples);

// Log-log power-law fit: values[i] ~ C * scales[i]^slope.
struct RateReport {
    std::vector<double> scales;
    std::vector<double> values;
    std::vector<double> stderrs;
    double slope = 0.0;
    double intercept = 0.0;   // log C
    double slope_stderr = 0.0;
};

// Weighted least squares on (log scale, log value).  Weights come from
// the relative errors stderrs[i] / values[i]; pass an empty stderr
// vector (or all zeros) for an ordinary fit.  The reported slope_stderr
// is residual-based, so data lying exactly on a power law yields zero.
RateReport fit_rate(const std::vector<double>& scales,
                    const std::vector<double>& values,
                    const std::vector<double>& stderrs = {});

struct SlopeCI {
    double lo = 0.0;
    double hi = 0.0;
    double point = 0.0;
    std::size_t resamples = 0;
    double width() const { return hi - lo; }
};

// Bootstrap confidence interval for the fitted slope.  samples[i] holds
// the replicate values observed at scales[i]; each resample draws
// replicates with replacement (per scale), recomputes the L_p norm and
// refits.  Percentile interval at the given level (e.g. 0.95).
SlopeCI bootstrap_slope_ci(const std::vector<double>& scales,
                           const std::vector<std::vector<double>>& samples,
                           double p, std::size_t resamples, double level,
                           std::uint64_t seed);

double sample_mean(const std::vector<double>& xs);
double sample_variance(const std::vector<double>& xs);  // unbiased
double quantile(std::vector<double> xs, double q);      // sorts a copy

// One-sample Kolmogorov-Smirnov statistic against a standard normal.
double ks_statistic_normal(std::vector<double> xs);

}  // namespace shelab
