#include "shelab/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace shelab {

Fft::Fft(std::size_t n) : n_(n) {
    if (!is_pow2(n))
        throw std::invalid_argument("Fft: size must be a power of two >= 2");
    bitrev_.resize(n);
    std::size_t log2n = 0;
    while ((std::size_t{1} << log2n) < n) ++log2n;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = 0;
        for (std::size_t b = 0; b < log2n; ++b)
            if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (log2n - 1 - b);
        bitrev_[i] = r;
    }
    twiddle_.resize(n / 2);
    twiddle_inv_.resize(n / 2);
    const double base = -2.0 * M_PI / static_cast<double>(n);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double ang = base * static_cast<double>(k);
        twiddle_[k] = {std::cos(ang), std::sin(ang)};
        twiddle_inv_[k] = std::conj(twiddle_[k]);
    }
}

void Fft::transform(std::complex<double>* a, bool inv) const {
    const auto& tw = inv ? twiddle_inv_ : twiddle_;
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t j = bitrev_[i];
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
        const std::size_t half = len >> 1;
        const std::size_t step = n_ / len;
        for (std::size_t i = 0; i < n_; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const std::complex<double> w = tw[k * step];
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + half] * w;
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
}

void Fft::forward(std::complex<double>* data) const { transform(data, false); }

void Fft::inverse(std::complex<double>* data) const {
    transform(data, true);
    const double inv_n = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) data[i] *= inv_n;
}

} // namespace shelab
