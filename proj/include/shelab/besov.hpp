#ifndef SHELAB_BESOV_HPP
#define SHELAB_BESOV_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace shelab {

/// Evaluating a drift (or its primitive) outside the declared window is an
/// error, not an extrapolation.
struct WindowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A smooth, pointwise-evaluable drift.
struct SmoothFn {
    std::function<double(double)> f;
};

/// b = F' in the distributional sense, for a bounded continuous primitive F.
/// Mollification uses the exact identity P_eps(F') = d/dx (P_eps F), i.e.
/// convolution with the differentiated Gaussian kernel.
struct WeakDerivative {
    std::function<double(double)> primitive;
    double domain_lo = -18.0; // primitive evaluable on [domain_lo, domain_hi]
    double domain_hi = 18.0;
};

/// A finite signed measure: sum of point masses (location, weight).
struct AtomicMeasure {
    std::vector<std::pair<double, double>> atoms;
};

/// A distributional drift b intended to live in C^{alpha+}(R), alpha in (-1,0).
struct DistributionalDrift {
    std::variant<SmoothFn, WeakDerivative, AtomicMeasure> variant;
    double alpha_nominal = -0.5;   // declared regularity class, not measured
    double window_lo = -6.0;       // evaluation window for mollified values
    double window_hi = 6.0;
    std::string name = "custom";
};

/// Exact Gaussian mollification b_eps = P_eps b at a fixed scale.
class MollifiedDrift {
public:
    MollifiedDrift(DistributionalDrift base, double eps);

    /// Pointwise mollified value; throws WindowError outside the window.
    double evaluate(double x) const;

    double eps() const { return eps_; }
    const DistributionalDrift& base() const { return base_; }

    /// Dense lookup table over the window with linear interpolation; the
    /// solver's inner loop uses this instead of per-point quadrature.
    /// Spacing resolves the mollification scale (<= sqrt(eps)/32).
    struct Table {
        double lo, hi, step;
        std::vector<double> values;
        double operator()(double x) const;
    };
    std::shared_ptr<const Table> table() const;

private:
    DistributionalDrift base_;
    double eps_;
    mutable std::shared_ptr<const Table> table_; // built lazily, then shared
};

MollifiedDrift mollify(const DistributionalDrift& b, double eps);

/// Heat-characterised Besov-Holder norm estimate:
///   max over eps_grid of eps^{-alpha/2} * max over x_grid |P_eps b(x)|.
/// A certified lower bound of sup_{eps in (0,1]} eps^{-alpha/2} ||P_eps b||.
double besov_norm_estimate(const DistributionalDrift& b, double alpha,
                           const std::vector<double>& eps_grid,
                           const std::vector<double>& x_grid);

/// ||b1 - b2||_{C^gamma} estimated on the same grids (pairwise difference
/// of mollified evaluations).
double drift_distance(const DistributionalDrift& b1,
                      const DistributionalDrift& b2, double gamma,
                      const std::vector<double>& eps_grid,
                      const std::vector<double>& x_grid);

/// Dyadic mollification schedule eps_n = 4^{-n}.
inline double mollification_scale(int n) { return std::pow(4.0, -n); }

/// Default grids for norm estimation.
std::vector<double> default_eps_grid(int levels = 12);
std::vector<double> default_x_grid(double lo = -6.0, double hi = 6.0,
                                   std::size_t n = 481);

// --- shipped drift library -------------------------------------------------

/// Bounded sign drift b(x) = w * sgn(x), realised as the weak derivative of
/// F(x) = w * |x|; nominal alpha = 0^-.
DistributionalDrift make_bounded_drift(double weight = 1.0);

/// Weak derivative of a sampled 1/2-Holder path (fixed seed); nominal
/// alpha = -1/2.
DistributionalDrift make_half_holder_drift(double weight = 1.0,
                                           std::uint64_t seed = 0x601d5eedULL);

/// Finite atomic measure; nominal alpha approaching -1.
DistributionalDrift make_atomic_drift(
    std::vector<std::pair<double, double>> atoms = {{0.0, 1.0}});

/// Smooth drifts for tests and trivial cases.
DistributionalDrift make_smooth_drift(std::function<double(double)> f,
                                      const std::string& name = "smooth");
DistributionalDrift make_constant_drift(double c);
DistributionalDrift make_zero_drift();

/// Lookup by (name, weight) as used by the experiment config. Known names:
/// bounded, half-holder, atomic, smooth-sin, constant, zero.
DistributionalDrift make_drift_by_name(const std::string& name, double weight);

/// WeakDerivative primitive loaded from a CSV of (x, F(x)) rows, linearly
/// interpolated.
DistributionalDrift load_weak_derivative_csv(const std::string& path,
                                             double alpha_nominal);

} // namespace shelab

#endif
