#include "shelab/torus_heat.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shelab {

TorusGrid::TorusGrid(std::size_t n) : n_x(n) {
    if (n < 2) throw std::invalid_argument("TorusGrid: n_x must be >= 2");
    points.resize(n);
    for (std::size_t j = 0; j < n; ++j)
        points[j] = static_cast<double>(j) / static_cast<double>(n);
}

double heat_kernel_real(double t, double x) {
    if (!(t > 0.0)) throw std::domain_error("heat_kernel_real: t must be > 0");
    return std::exp(-x * x / (4.0 * t)) / std::sqrt(4.0 * M_PI * t);
}

double heat_kernel_torus(double t, double x, double y,
                         const HeatKernelConfig& cfg) {
    if (!(t > 0.0)) throw std::domain_error("heat_kernel_torus: t must be > 0");
    // reduce the offset to [-1/2, 1/2) to keep the image sum symmetric
    double d = x - y;
    d -= std::floor(d + 0.5);
    double sum = heat_kernel_real(t, d);
    for (int k = 1; k <= cfg.wrap_terms; ++k) {
        sum += heat_kernel_real(t, d + k) + heat_kernel_real(t, d - k);
    }
    return sum;
}

static void check_field(const TorusGrid& grid, const std::vector<double>& g) {
    if (g.size() != grid.n_x)
        throw std::invalid_argument("apply_semigroup: field length != n_x");
    for (double v : g)
        if (!std::isfinite(v))
            throw std::invalid_argument("apply_semigroup: non-finite entry");
}

std::vector<double> apply_semigroup(const TorusGrid& grid,
                                    const std::vector<double>& g, double t) {
    check_field(grid, g);
    if (t < 0.0) throw std::domain_error("apply_semigroup: t must be >= 0");
    if (t == 0.0) return g;
    SemigroupStepper stepper(grid.n_x, t);
    std::vector<double> out = g;
    stepper.step(out);
    return out;
}

std::vector<double> apply_semigroup_quadrature(const TorusGrid& grid,
                                               const std::vector<double>& g,
                                               double t,
                                               const HeatKernelConfig& cfg) {
    check_field(grid, g);
    if (t < 0.0) throw std::domain_error("apply_semigroup: t must be >= 0");
    if (t == 0.0) return g;
    const std::size_t n = grid.n_x;
    const double dx = grid.dx();
    // circulant: precompute one kernel row over offsets j/n
    std::vector<double> row(n);
    for (std::size_t j = 0; j < n; ++j)
        row[j] = heat_kernel_torus(t, grid.points[j], 0.0, cfg);
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t off = (i >= j) ? i - j : i + n - j;
            acc += row[off] * g[j];
        }
        out[i] = acc * dx;
    }
    return out;
}

KernelEstimateReport validate_kernel_estimates(
    double eps, const std::vector<double>& t_grid,
    const std::vector<double>& x_grid, const std::vector<double>& xbar_grid,
    std::size_t quad_points, const HeatKernelConfig& cfg) {
    if (!(eps > 0.0 && eps <= 1.0))
        throw std::domain_error("validate_kernel_estimates: eps in (0,1]");
    if (t_grid.empty() || x_grid.empty() || xbar_grid.empty())
        throw std::invalid_argument("validate_kernel_estimates: empty grid");
    for (double t : t_grid)
        if (!(t > 0.0 && t <= 1.0))
            throw std::domain_error("validate_kernel_estimates: t in (0,1]");

    const std::size_t nq = quad_points;
    const double dy = 1.0 / static_cast<double>(nq);
    KernelEstimateReport rep;

    // (a) and (b): spatial differences
    for (double t : t_grid) {
        for (double x : x_grid) {
            for (double xb : xbar_grid) {
                double gap = std::abs(x - xb);
                gap = std::min(gap, 1.0 - gap); // torus distance
                if (gap == 0.0) continue;
                double l1 = 0.0;
                for (std::size_t j = 0; j < nq; ++j) {
                    const double y = (static_cast<double>(j) + 0.5) * dy;
                    l1 += std::abs(heat_kernel_torus(t, x, y, cfg) -
                                   heat_kernel_torus(t, xb, y, cfg));
                }
                l1 *= dy;
                const double rhs_a = std::pow(gap, eps) * std::pow(t, -eps / 2.0);
                rep.sup_ratio_l1_space = std::max(rep.sup_ratio_l1_space, l1 / rhs_a);

                // time quadrature for the squared estimate; midpoint in r
                const std::size_t nr = 64;
                const double dr = t / static_cast<double>(nr);
                double sq = 0.0;
                for (std::size_t k = 0; k < nr; ++k) {
                    const double tr = t - (static_cast<double>(k) + 0.5) * dr;
                    double inner = 0.0;
                    for (std::size_t j = 0; j < nq; ++j) {
                        const double y = (static_cast<double>(j) + 0.5) * dy;
                        const double d = heat_kernel_torus(tr, x, y, cfg) -
                                         heat_kernel_torus(tr, xb, y, cfg);
                        inner += d * d;
                    }
                    sq += inner * dy * dr;
                }
                const double rhs_b =
                    std::pow(gap, 1.0 - eps) * std::pow(t, eps / 2.0);
                rep.sup_ratio_sq_space = std::max(rep.sup_ratio_sq_space, sq / rhs_b);
            }
        }
    }

    // (c): squared temporal difference, pairs (s,t) from t_grid
    for (double s : t_grid) {
        for (double t : t_grid) {
            if (!(s < t)) continue;
            const double x = x_grid.front();
            const std::size_t nr = 64;
            const double dr = s / static_cast<double>(nr);
            double sq = 0.0;
            for (std::size_t k = 0; k < nr; ++k) {
                const double r = (static_cast<double>(k) + 0.5) * dr;
                double inner = 0.0;
                for (std::size_t j = 0; j < nq; ++j) {
                    const double y = (static_cast<double>(j) + 0.5) * dy;
                    const double d = heat_kernel_torus(t - r, x, y, cfg) -
                                     heat_kernel_torus(s - r, x, y, cfg);
                    inner += d * d;
                }
                sq += inner * dy * dr;
            }
            const double rhs_c = std::pow(t - s, (1.0 - eps) / 2.0);
            rep.sup_ratio_sq_time = std::max(rep.sup_ratio_sq_time, sq / rhs_c);
        }
    }
    return rep;
}

SemigroupStepper::SemigroupStepper(std::size_t n_x, double dt)
    : n_(n_x), dt_(dt), fft_(n_x), decay_(n_x), buf_(n_x) {
    if (!(dt > 0.0)) throw std::domain_error("SemigroupStepper: dt must be > 0");
    for (std::size_t m = 0; m < n_; ++m) {
        const double freq = (m <= n_ / 2) ? static_cast<double>(m)
                                          : static_cast<double>(m) -
                                                static_cast<double>(n_);
        const double lambda = (2.0 * M_PI * freq) * (2.0 * M_PI * freq);
        decay_[m] = std::exp(-lambda * dt);
    }
}

void SemigroupStepper::to_spectrum(const std::vector<double>& phys,
                                   std::vector<std::complex<double>>& spec) const {
    spec.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) spec[i] = phys[i];
    fft_.forward(spec.data());
}

void SemigroupStepper::to_physical(const std::vector<std::complex<double>>& spec,
                                   std::vector<double>& phys) const {
    buf_ = spec;
    fft_.inverse(buf_.data());
    phys.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) phys[i] = buf_[i].real();
}

void SemigroupStepper::decay_spectrum(std::vector<std::complex<double>>& spec) const {
    for (std::size_t i = 0; i < n_; ++i) spec[i] *= decay_[i];
}

void SemigroupStepper::step(std::vector<double>& field) const {
    for (std::size_t i = 0; i < n_; ++i) buf_[i] = field[i];
    fft_.forward(buf_.data());
    decay_spectrum(buf_);
    fft_.inverse(buf_.data());
    for (std::size_t i = 0; i < n_; ++i) field[i] = buf_[i].real();
}

} // namespace shelab
