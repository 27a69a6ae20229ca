#include "shelab/besov.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "shelab/noise.hpp"
#include "shelab/torus_heat.hpp"

namespace shelab {

namespace {

// Composite Simpson of g over [-Z, Z]; integrands are Gaussian-damped so a
// fixed node count suffices.
constexpr double kZRange = 6.0;
constexpr std::size_t kQuadIntervals = 1024; // even

template <typename G>
double simpson(G&& g) {
    const double h = 2.0 * kZRange / static_cast<double>(kQuadIntervals);
    double acc = g(-kZRange) + g(kZRange);
    for (std::size_t i = 1; i < kQuadIntervals; ++i) {
        const double z = -kZRange + h * static_cast<double>(i);
        acc += g(z) * ((i % 2 == 1) ? 4.0 : 2.0);
    }
    return acc * h / 3.0;
}

constexpr double kInvSqrtPi = 0.5641895835477562869;

} // namespace

MollifiedDrift::MollifiedDrift(DistributionalDrift base, double eps)
    : base_(std::move(base)), eps_(eps) {
    if (!(eps > 0.0 && eps <= 1.0))
        throw std::domain_error("mollify: eps must be in (0,1]");
}

MollifiedDrift mollify(const DistributionalDrift& b, double eps) {
    return MollifiedDrift(b, eps);
}

double MollifiedDrift::evaluate(double x) const {
    if (x < base_.window_lo || x > base_.window_hi)
        throw WindowError("MollifiedDrift: x outside evaluation window");
    const double sq = std::sqrt(eps_);
    if (const auto* s = std::get_if<SmoothFn>(&base_.variant)) {
        // P_eps f(x) = pi^{-1/2} int e^{-z^2} f(x - 2 sqrt(eps) z) dz
        return kInvSqrtPi * simpson([&](double z) {
                   return std::exp(-z * z) * s->f(x - 2.0 * sq * z);
               });
    }
    if (const auto* w = std::get_if<WeakDerivative>(&base_.variant)) {
        // P_eps (F') = d/dx (P_eps F) = -int (z / sqrt(eps pi)) e^{-z^2}
        //              F(x - 2 sqrt(eps) z) dz
        if (x - 2.0 * sq * kZRange < w->domain_lo ||
            x + 2.0 * sq * kZRange > w->domain_hi)
            throw WindowError("MollifiedDrift: primitive domain exceeded");
        return -kInvSqrtPi / sq * simpson([&](double z) {
                   return z * std::exp(-z * z) *
                          w->primitive(x - 2.0 * sq * z);
               });
    }
    const auto& atoms = std::get<AtomicMeasure>(base_.variant).atoms;
    double acc = 0.0;
    for (const auto& [loc, wt] : atoms) acc += wt * heat_kernel_real(eps_, x - loc);
    return acc;
}

double MollifiedDrift::Table::operator()(double x) const {
    if (x < lo || x > hi)
        throw WindowError("MollifiedDrift::Table: x outside window");
    const double pos = (x - lo) / step;
    auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= values.size()) i = values.size() - 2;
    const double frac = pos - static_cast<double>(i);
    return values[i] * (1.0 - frac) + values[i + 1] * frac;
}

std::shared_ptr<const MollifiedDrift::Table> MollifiedDrift::table() const {
    if (table_) return table_;
    auto tab = std::make_shared<Table>();
    tab->lo = base_.window_lo;
    tab->hi = base_.window_hi;
    const double span = tab->hi - tab->lo;
    double step = std::max(std::sqrt(eps_) / 32.0, span / (1 << 20));
    auto n = static_cast<std::size_t>(std::ceil(span / step)) + 1;
    tab->step = span / static_cast<double>(n - 1);
    tab->values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::min(tab->lo + tab->step * static_cast<double>(i),
                                  tab->hi);
        tab->values[i] = evaluate(x);
    }
    table_ = tab;
    return table_;
}

double besov_norm_estimate(const DistributionalDrift& b, double alpha,
                           const std::vector<double>& eps_grid,
                           const std::vector<double>& x_grid) {
    if (!(alpha < 0.0))
        throw std::domain_error("besov_norm_estimate: alpha must be < 0");
    if (eps_grid.empty() || x_grid.empty())
        throw std::invalid_argument("besov_norm_estimate: empty grid");
    double best = 0.0;
    for (double eps : eps_grid) {
        if (!(eps > 0.0 && eps <= 1.0))
            throw std::domain_error("besov_norm_estimate: eps in (0,1]");
        MollifiedDrift m(b, eps);
        double sup = 0.0;
        for (double x : x_grid) sup = std::max(sup, std::abs(m.evaluate(x)));
        best = std::max(best, std::pow(eps, -alpha / 2.0) * sup);
    }
    return best;
}

double drift_distance(const DistributionalDrift& b1,
                      const DistributionalDrift& b2, double gamma,
                      const std::vector<double>& eps_grid,
                      const std::vector<double>& x_grid) {
    if (!(gamma < 0.0))
        throw std::domain_error("drift_distance: gamma must be < 0");
    if (eps_grid.empty() || x_grid.empty())
        throw std::invalid_argument("drift_distance: empty grid");
    double best = 0.0;
    for (double eps : eps_grid) {
        MollifiedDrift m1(b1, eps), m2(b2, eps);
        double sup = 0.0;
        for (double x : x_grid)
            sup = std::max(sup, std::abs(m1.evaluate(x) - m2.evaluate(x)));
        best = std::max(best, std::pow(eps, -gamma / 2.0) * sup);
    }
    return best;
}

std::vector<double> default_eps_grid(int levels) {
    std::vector<double> g;
    for (int n = 0; n < levels; ++n) g.push_back(std::pow(2.0, -n));
    return g;
}

std::vector<double> default_x_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) /
                        static_cast<double>(n - 1);
    return g;
}

DistributionalDrift make_bounded_drift(double weight) {
    DistributionalDrift d;
    d.variant = WeakDerivative{
        [weight](double x) { return weight * std::abs(x); }, -20.0, 20.0};
    d.alpha_nominal = -0.01; // bounded measurable: nominally 0^-
    d.name = "bounded";
    return d;
}

namespace {

// One fixed sampled 1/2-Holder path per (seed, weight): scaled cumulative
// sums of counter-based Gaussians on a 2^-10 lattice over [-18, 18].
struct HolderPath {
    double lo = -18.0, hi = 18.0, step = 0.0;
    std::vector<double> values;

    HolderPath(std::uint64_t seed, double weight) {
        const std::size_t n = 36 * 1024 + 1;
        step = (hi - lo) / static_cast<double>(n - 1);
        values.resize(n);
        values[0] = 0.0;
        const double sd = std::sqrt(step);
        for (std::size_t i = 1; i < n; ++i)
            values[i] = values[i - 1] +
                        sd * Philox4x32::normal(seed, 0xB0B5ULL, i);
        // center so the primitive stays small over the window
        const double mid = values[n / 2];
        for (auto& v : values) v = weight * (v - mid);
    }

    double operator()(double x) const {
        const double pos = (x - lo) / step;
        auto i = static_cast<std::size_t>(pos);
        if (i + 1 >= values.size()) i = values.size() - 2;
        const double frac = pos - static_cast<double>(i);
        return values[i] * (1.0 - frac) + values[i + 1] * frac;
    }
};

} // namespace

DistributionalDrift make_half_holder_drift(double weight, std::uint64_t seed) {
    auto path = std::make_shared<HolderPath>(seed, weight);
    DistributionalDrift d;
    d.variant = WeakDerivative{[path](double x) { return (*path)(x); },
                               path->lo, path->hi};
    d.alpha_nominal = -0.5;
    d.name = "half-holder";
    return d;
}

DistributionalDrift make_atomic_drift(
    std::vector<std::pair<double, double>> atoms) {
    DistributionalDrift d;
    d.variant = AtomicMeasure{std::move(atoms)};
    d.alpha_nominal = -0.9;
    d.name = "atomic";
    return d;
}

DistributionalDrift make_smooth_drift(std::function<double(double)> f,
                                      const std::string& name) {
    DistributionalDrift d;
    d.variant = SmoothFn{std::move(f)};
    d.alpha_nominal = -0.01;
    d.name = name;
    return d;
}

DistributionalDrift make_constant_drift(double c) {
    auto d = make_smooth_drift([c](double) { return c; }, "constant");
    return d;
}

DistributionalDrift make_zero_drift() {
    auto d = make_smooth_drift([](double) { return 0.0; }, "zero");
    return d;
}

DistributionalDrift make_drift_by_name(const std::string& name, double weight) {
    if (name == "bounded") return make_bounded_drift(weight);
    if (name == "half-holder") return make_half_holder_drift(weight);
    if (name == "atomic") return make_atomic_drift({{0.0, weight}});
    if (name == "smooth-sin")
        return make_smooth_drift(
            [weight](double x) { return weight * std::sin(x); }, "smooth-sin");
    if (name == "constant") return make_constant_drift(weight);
    if (name == "zero") return make_zero_drift();
    throw std::invalid_argument("unknown drift name: " + name);
}

DistributionalDrift load_weak_derivative_csv(const std::string& path,
                                             double alpha_nominal) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open drift CSV: " + path);
    auto samples = std::make_shared<std::vector<std::pair<double, double>>>();
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        double x, fx;
        char comma;
        if (ss >> x >> comma >> fx) samples->emplace_back(x, fx);
    }
    if (samples->size() < 2)
        throw std::runtime_error("drift CSV needs at least two samples: " + path);
    std::sort(samples->begin(), samples->end());
    DistributionalDrift d;
    d.variant = WeakDerivative{
        [samples](double x) {
            auto it = std::lower_bound(
                samples->begin(), samples->end(), x,
                [](const auto& p, double v) { return p.first < v; });
            if (it == samples->begin()) return it->second;
            if (it == samples->end()) return std::prev(it)->second;
            const auto& [x1, f1] = *it;
            const auto& [x0, f0] = *std::prev(it);
            const double w = (x - x0) / (x1 - x0);
            return f0 * (1.0 - w) + f1 * w;
        },
        samples->front().first, samples->back().first};
    d.alpha_nominal = alpha_nominal;
    d.name = "csv";
    return d;
}

} // namespace shelab
