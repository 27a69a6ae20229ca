#include "shelab/noise.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace shelab {

namespace {

inline void philox_round(std::uint32_t& c0, std::uint32_t& c1,
                         std::uint32_t& c2, std::uint32_t& c3,
                         std::uint32_t k0, std::uint32_t k1) {
    constexpr std::uint64_t M0 = 0xD2511F53ULL;
    constexpr std::uint64_t M1 = 0xCD9E8D57ULL;
    const std::uint64_t p0 = M0 * c0;
    const std::uint64_t p1 = M1 * c2;
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    const std::uint32_t n0 = hi1 ^ c1 ^ k0;
    const std::uint32_t n1 = lo1;
    const std::uint32_t n2 = hi0 ^ c3 ^ k1;
    const std::uint32_t n3 = lo0;
    c0 = n0; c1 = n1; c2 = n2; c3 = n3;
}

} // namespace

std::array<std::uint32_t, 4> Philox4x32::block(std::uint64_t key_lo,
                                               std::uint64_t key_hi,
                                               std::uint64_t ctr_lo,
                                               std::uint64_t ctr_hi) {
    constexpr std::uint32_t W0 = 0x9E3779B9u; // golden ratio
    constexpr std::uint32_t W1 = 0xBB67AE85u; // sqrt(3) - 1
    std::uint32_t c0 = static_cast<std::uint32_t>(ctr_lo);
    std::uint32_t c1 = static_cast<std::uint32_t>(ctr_lo >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(ctr_hi);
    std::uint32_t c3 = static_cast<std::uint32_t>(ctr_hi >> 32);
    std::uint32_t k0 = static_cast<std::uint32_t>(key_lo);
    std::uint32_t k1 = static_cast<std::uint32_t>(key_lo >> 32);
    // fold the high key words in through the first bump
    k0 ^= static_cast<std::uint32_t>(key_hi);
    k1 ^= static_cast<std::uint32_t>(key_hi >> 32);
    for (int r = 0; r < 10; ++r) {
        philox_round(c0, c1, c2, c3, k0, k1);
        k0 += W0;
        k1 += W1;
    }
    return {c0, c1, c2, c3};
}

double Philox4x32::uniform(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t cell) {
    const auto b = block(seed, stream, cell, 0x5EED50F7u);
    const std::uint64_t r =
        (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
    return (static_cast<double>(r >> 11) + 0.5) * 0x1.0p-53;
}

double Philox4x32::normal(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t cell) {
    const auto b = block(seed, stream, cell, 0x5EED50F7u);
    const std::uint64_t r1 =
        (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
    const std::uint64_t r2 =
        (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
    const double u1 = (static_cast<double>(r1 >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = (static_cast<double>(r2 >> 11) + 0.5) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

NoiseGrid sample_noise(std::size_t n_t, std::size_t n_x, double horizon,
                       std::uint64_t seed, std::uint64_t stream_id) {
    if (n_t < 1 || n_x < 1)
        throw std::invalid_argument("sample_noise: sizes must be >= 1");
    if (!(horizon > 0.0 && horizon <= 1.0))
        throw std::invalid_argument("sample_noise: horizon in (0,1]");
    NoiseGrid g;
    g.n_t = n_t;
    g.n_x = n_x;
    g.horizon = horizon;
    g.seed = seed;
    g.stream_id = stream_id;
    g.increments.resize(n_t * n_x);
    const double sd = std::sqrt(g.dt() * g.dx());
    const std::size_t total = n_t * n_x;
    for (std::size_t c = 0; c < total; ++c)
        g.increments[c] = sd * Philox4x32::normal(seed, stream_id, c);
    return g;
}

NoiseGrid coarsen(const NoiseGrid& noise, std::size_t ft, std::size_t fx) {
    if (ft < 1 || fx < 1 || noise.n_t % ft != 0 || noise.n_x % fx != 0)
        throw std::invalid_argument("coarsen: factors must divide grid sizes");
    NoiseGrid g;
    g.n_t = noise.n_t / ft;
    g.n_x = noise.n_x / fx;
    g.horizon = noise.horizon;
    g.seed = noise.seed;
    g.stream_id = noise.stream_id;
    g.increments.assign(g.n_t * g.n_x, 0.0);
    for (std::size_t k = 0; k < noise.n_t; ++k) {
        const std::size_t kc = k / ft;
        for (std::size_t j = 0; j < noise.n_x; ++j) {
            g.increments[kc * g.n_x + j / fx] += noise.at(k, j);
        }
    }
    return g;
}

NoiseGrid split_at(const NoiseGrid& noise, double s, std::uint64_t reseed) {
    const double dt = noise.dt();
    const double kf = s / dt;
    const auto k_s = static_cast<std::size_t>(std::llround(kf));
    if (std::abs(kf - static_cast<double>(k_s)) > 1e-9 || k_s > noise.n_t)
        throw std::invalid_argument("split_at: s must lie on the time grid");
    NoiseGrid g = noise;
    const double sd = std::sqrt(noise.dt() * noise.dx());
    for (std::size_t c = k_s * noise.n_x; c < noise.n_t * noise.n_x; ++c)
        g.increments[c] = sd * Philox4x32::normal(reseed, noise.stream_id, c);
    return g;
}

namespace {
constexpr char kMagic[8] = {'S', 'H', 'E', 'N', 'O', 'I', 'S', '1'};
}

void dump_noise(const NoiseGrid& noise, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("dump_noise: cannot open " + path);
    std::uint64_t hdr[5] = {noise.n_t, noise.n_x, noise.seed, noise.stream_id, 0};
    std::memcpy(&hdr[4], &noise.horizon, sizeof(double));
    bool ok = std::fwrite(kMagic, 1, 8, f) == 8 &&
              std::fwrite(hdr, sizeof(hdr), 1, f) == 1 &&
              std::fwrite(noise.increments.data(), sizeof(double),
                          noise.increments.size(), f) == noise.increments.size();
    std::fclose(f);
    if (!ok) throw std::runtime_error("dump_noise: short write to " + path);
}

NoiseGrid load_noise(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("load_noise: cannot open " + path);
    char magic[8];
    std::uint64_t hdr[5];
    NoiseGrid g;
    bool ok = std::fread(magic, 1, 8, f) == 8 &&
              std::memcmp(magic, kMagic, 8) == 0 &&
              std::fread(hdr, sizeof(hdr), 1, f) == 1;
    if (ok) {
        g.n_t = hdr[0];
        g.n_x = hdr[1];
        g.seed = hdr[2];
        g.stream_id = hdr[3];
        std::memcpy(&g.horizon, &hdr[4], sizeof(double));
        g.increments.resize(g.n_t * g.n_x);
        ok = std::fread(g.increments.data(), sizeof(double),
                        g.increments.size(), f) == g.increments.size();
    }
    std::fclose(f);
    if (!ok) throw std::runtime_error("load_noise: bad or truncated file " + path);
    return g;
}

} // namespace shelab
