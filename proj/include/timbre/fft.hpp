#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace timbre {

// Complex DFT plan for a fixed (possibly non-power-of-two) size.
// Power-of-two sizes run iterative radix-2 Cooley-Tukey; everything else
// goes through Bluestein's chirp-z reformulation on a padded radix-2 grid.
class FftPlan {
public:
    explicit FftPlan(std::size_t n);

    std::size_t size() const { return n_; }

    // In-place forward/inverse transform of exactly size() points.
    // Inverse includes the 1/N factor.
    void forward(std::complex<double>* x) const;
    void inverse(std::complex<double>* x) const;

private:
    void radix2(std::complex<double>* x, std::size_t n, bool invert) const;
    void bluestein(std::complex<double>* x, bool invert) const;

    std::size_t n_;
    bool pow2_;
    std::size_t m_ = 0;                                // padded radix-2 size for Bluestein
    std::vector<std::complex<double>> chirp_;          // exp(-i*pi*k^2/n)
    std::vector<std::complex<double>> chirp_fft_;      // FFT of the conjugate-chirp kernel
    std::vector<std::complex<double>> twiddle_;        // radix-2 twiddles for size m_ (or n_)
};

} // namespace timbre
