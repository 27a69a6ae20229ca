#ifndef SHELAB_FFT_HPP
#define SHELAB_FFT_HPP

#include <complex>
#include <cstddef>
#include <vector>

namespace shelab {

/// Iterative radix-2 complex FFT with precomputed twiddles.
/// Sizes must be powers of two. Forward transform is unnormalised,
/// inverse divides by n.
class Fft {
public:
    explicit Fft(std::size_t n);

    std::size_t size() const { return n_; }

    void forward(std::complex<double>* data) const;
    void inverse(std::complex<double>* data) const;

    static bool is_pow2(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

private:
    void transform(std::complex<double>* data, bool inv) const;

    std::size_t n_;
    std::vector<std::size_t> bitrev_;
    std::vector<std::complex<double>> twiddle_;      // forward
    std::vector<std::complex<double>> twiddle_inv_;
};

} // namespace shelab

#endif
