#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "shelab/fft.hpp"
#include "shelab/noise.hpp"
#include "shelab/torus_heat.hpp"

using namespace shelab;

namespace {
constexpr double kPi = std::numbers::pi;

std::vector<double> grid_fn(const TorusGrid& g, double (*f)(double)) {
    std::vector<double> out(g.n_x);
    for (std::size_t j = 0; j < g.n_x; ++j) out[j] = f(g.points[j]);
    return out;
}
} // namespace

TEST_CASE("fft round trip restores the input") {
    const std::size_t n = 256;
    Fft fft(n);
    std::vector<std::complex<double>> data(n), orig(n);
    for (std::size_t j = 0; j < n; ++j) {
        data[j] = {Philox4x32::normal(7, 0, j), Philox4x32::normal(7, 1, j)};
        orig[j] = data[j];
    }
    fft.forward(data.data());
    fft.inverse(data.data());
    for (std::size_t j = 0; j < n; ++j) {
        CHECK(std::abs(data[j] - orig[j]) < 1e-12);
    }
}

TEST_CASE("fft satisfies Parseval's identity") {
    const std::size_t n = 128;
    Fft fft(n);
    std::vector<std::complex<double>> data(n);
    double phys = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        data[j] = {Philox4x32::normal(11, 0, j), 0.0};
        phys += std::norm(data[j]);
    }
    fft.forward(data.data());
    double spec = 0.0;
    for (const auto& c : data) spec += std::norm(c);
    CHECK(spec / static_cast<double>(n) ==
          doctest::Approx(phys).epsilon(1e-12));
}

TEST_CASE("fft of a pure mode concentrates on one bin") {
    const std::size_t n = 64;
    Fft fft(n);
    std::vector<std::complex<double>> data(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = static_cast<double>(j) / static_cast<double>(n);
        data[j] = std::exp(std::complex<double>(0.0, 2.0 * kPi * 5.0 * x));
    }
    fft.forward(data.data());
    for (std::size_t m = 0; m < n; ++m) {
        const double expect = (m == 5) ? static_cast<double>(n) : 0.0;
        CHECK(std::abs(data[m] - expect) < 1e-9);
    }
}

TEST_CASE("periodic heat kernel integrates to one") {
    const std::size_t n = 1024;
    TorusGrid g(n);
    for (double t : {1e-4, 1e-2, 0.5, 1.0}) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            sum += heat_kernel_torus(t, 0.3, g.points[j]);
        CHECK(sum * g.dx() == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("wrapped-image truncation is converged: K = 12 matches K = 20") {
    HeatKernelConfig k12;
    HeatKernelConfig k20;
    k20.wrap_terms = 20;
    for (double t : {1e-3, 0.1, 1.0}) {
        for (double x : {0.0, 0.25, 0.9}) {
            const double a = heat_kernel_torus(t, x, 0.5, k12);
            const double b = heat_kernel_torus(t, x, 0.5, k20);
            CHECK(std::abs(a - b) <= 1e-9 * (1.0 + std::abs(b)));
        }
    }
}

TEST_CASE("semigroup eigenfunction decay: cos mode shrinks by exp(-4 pi^2 t)") {
    TorusGrid g(256);
    auto field = grid_fn(g, [](double x) { return std::cos(2.0 * kPi * x); });
    const double t = 0.03;
    const auto out = apply_semigroup(g, field, t);
    const double lambda = std::exp(-4.0 * kPi * kPi * t);
    for (std::size_t j = 0; j < g.n_x; ++j)
        CHECK(out[j] == doctest::Approx(lambda * field[j]).epsilon(1e-10));
}

TEST_CASE("semigroup composition: P_s P_t = P_{s+t}") {
    TorusGrid g(128);
    std::vector<double> field(g.n_x);
    for (std::size_t j = 0; j < g.n_x; ++j)
        field[j] = Philox4x32::normal(3, 0, j);
    const auto once = apply_semigroup(g, field, 0.07);
    const auto twice = apply_semigroup(g, apply_semigroup(g, field, 0.03), 0.04);
    for (std::size_t j = 0; j < g.n_x; ++j)
        CHECK(once[j] == doctest::Approx(twice[j]).epsilon(1e-12));
}

TEST_CASE("spectral semigroup matches the quadrature oracle") {
    TorusGrid g(256);
    auto field = grid_fn(g, [](double x) {
        return std::sin(2.0 * kPi * x) + 0.5 * std::cos(6.0 * kPi * x);
    });
    for (double t : {1e-3, 0.05}) {
        const auto spec = apply_semigroup(g, field, t);
        const auto quad = apply_semigroup_quadrature(g, field, t);
        for (std::size_t j = 0; j < g.n_x; ++j)
            CHECK(std::abs(spec[j] - quad[j]) < 1e-6);
    }
}

TEST_CASE("semigroup of a discrete delta reproduces the kernel column") {
    const std::size_t n = 256;
    TorusGrid g(n);
    const std::size_t j0 = 77;
    std::vector<double> delta(n, 0.0);
    delta[j0] = 1.0 / g.dx(); // unit mass as a density
    const double t = 0.01;
    const auto out = apply_semigroup(g, delta, t);
    for (std::size_t j = 0; j < n; ++j) {
        const double oracle = heat_kernel_torus(t, g.points[j], g.points[j0]);
        CHECK(std::abs(out[j] - oracle) < 1e-8);
    }
}

TEST_CASE("SemigroupStepper::step agrees with apply_semigroup") {
    const std::size_t n = 128;
    const double dt = 1.0 / 4096.0;
    TorusGrid g(n);
    SemigroupStepper stepper(n, dt);
    std::vector<double> field(n);
    for (std::size_t j = 0; j < n; ++j)
        field[j] = Philox4x32::normal(19, 0, j);
    auto expect = apply_semigroup(g, field, dt);
    stepper.step(field);
    for (std::size_t j = 0; j < n; ++j)
        CHECK(field[j] == doctest::Approx(expect[j]).epsilon(1e-12));
}

TEST_CASE("kernel L1 space-difference ratio matches a direct quadrature") {
    // Single pair oracle: LHS = int |p_t(x,.) - p_t(xb,.)| by quadrature,
    // ratio = LHS / (|x - xb|^{1/2} t^{-1/4}) for eps = 1/2.
    const double t = 0.01;
    const double x = 0.45, xb = 0.55;
    const std::size_t n = 8192;
    double lhs = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double y = static_cast<double>(j) / static_cast<double>(n);
        lhs += std::abs(heat_kernel_torus(t, x, y) - heat_kernel_torus(t, xb, y));
    }
    lhs /= static_cast<double>(n);
    const double ratio = lhs / (std::sqrt(std::abs(x - xb)) * std::pow(t, -0.25));
    const auto rep = validate_kernel_estimates(0.5, {t}, {x}, {xb}, 8192);
    CHECK(rep.sup_ratio_l1_space == doctest::Approx(ratio).epsilon(1e-6));
    CHECK(ratio > 0.0);
    CHECK(ratio < 10.0);
}

TEST_CASE("kernel estimate ratios are bounded over a scan") {
    const std::vector<double> ts = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
    const std::vector<double> xs = {0.1, 0.5};
    const std::vector<double> xbs = {0.12, 0.6};
    const auto rep = validate_kernel_estimates(0.5, ts, xs, xbs, 512);
    CHECK(rep.sup_ratio_l1_space > 0.0);
    CHECK(rep.sup_ratio_sq_space > 0.0);
    CHECK(rep.sup_ratio_sq_time > 0.0);
    CHECK(rep.sup_ratio_l1_space < 10.0);
    CHECK(rep.sup_ratio_sq_space < 10.0);
    CHECK(rep.sup_ratio_sq_time < 10.0);
}
