#ifndef SHELAB_NOISE_HPP
#define SHELAB_NOISE_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace shelab {

/// Philox4x32-10 counter-based generator (Salmon et al.).
/// Pure function of (key, counter); used so that every noise cell,
/// replicate stream and future-resample is reproducible independently
/// of evaluation order.
struct Philox4x32 {
    static std::array<std::uint32_t, 4> block(std::uint64_t key_lo,
                                              std::uint64_t key_hi,
                                              std::uint64_t ctr_lo,
                                              std::uint64_t ctr_hi);

    /// One standard normal per (seed, stream, cell) via Box-Muller.
    static double normal(std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t cell);

    /// Uniform in (0,1).
    static double uniform(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t cell);
};

/// Discretised space-time white noise on [0,T] x [0,1):
/// increments[k][j] ~ iid Normal(0, dt*dx), the integral of xi over the
/// grid cell [k dt, (k+1) dt) x [j dx, (j+1) dx).
struct NoiseGrid {
    std::size_t n_t = 0;
    std::size_t n_x = 0;
    double horizon = 1.0; // T
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    std::vector<double> increments; // row-major, time-major: [k * n_x + j]

    double dt() const { return horizon / static_cast<double>(n_t); }
    double dx() const { return 1.0 / static_cast<double>(n_x); }
    double at(std::size_t k, std::size_t j) const {
        return increments[k * n_x + j];
    }
    const double* row(std::size_t k) const { return &increments[k * n_x]; }
};

NoiseGrid sample_noise(std::size_t n_t, std::size_t n_x, double horizon,
                       std::uint64_t seed, std::uint64_t stream_id);

/// Block-sum coarsening by factors (ft, fx); the result is distributed
/// exactly as a direct sample at the coarse resolution and is driven by
/// the same underlying noise (exact multi-resolution coupling).
NoiseGrid coarsen(const NoiseGrid& noise, std::size_t ft, std::size_t fx);

/// Keep the increments on [0,s] bit-exactly, resample (s,T] from reseed.
/// s must lie on the time grid. Distinct reseeds give conditionally iid
/// futures given the past.
NoiseGrid split_at(const NoiseGrid& noise, double s, std::uint64_t reseed);

/// Binary round-trip (little-endian doubles, header with sizes and seeds).
void dump_noise(const NoiseGrid& noise, const std::string& path);
NoiseGrid load_noise(const std::string& path);

} // namespace shelab

#endif
