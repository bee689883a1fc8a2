#include "timbre/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace timbre {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

} // namespace

FftPlan::FftPlan(std::size_t n) : n_(n), pow2_(is_pow2(n)) {
    if (n == 0) throw std::invalid_argument("fft: size must be positive");
    if (pow2_) {
        twiddle_.resize(n_ / 2);
        for (std::size_t k = 0; k < n_ / 2; ++k) {
            double a = -2.0 * kPi * static_cast<double>(k) / static_cast<double>(n_);
            twiddle_[k] = {std::cos(a), std::sin(a)};
        }
        return;
    }
    m_ = next_pow2(2 * n_ - 1);
    twiddle_.resize(m_ / 2);
    for (std::size_t k = 0; k < m_ / 2; ++k) {
        double a = -2.0 * kPi * static_cast<double>(k) / static_cast<double>(m_);
        twiddle_[k] = {std::cos(a), std::sin(a)};
    }
    // chirp_[k] = exp(-i*pi*k^2/n); k^2 reduced mod 2n to keep the cos/sin
    // arguments small.
    chirp_.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) {
        std::size_t k2 = (k * k) % (2 * n_);
        double a = -kPi * static_cast<double>(k2) / static_cast<double>(n_);
        chirp_[k] = {std::cos(a), std::sin(a)};
    }
    // Kernel b[j] = conj(chirp[|j|]) laid out circularly, transformed once.
    chirp_fft_.assign(m_, {0.0, 0.0});
    for (std::size_t k = 0; k < n_; ++k) {
        chirp_fft_[k] = std::conj(chirp_[k]);
        if (k != 0) chirp_fft_[m_ - k] = std::conj(chirp_[k]);
    }
    radix2(chirp_fft_.data(), m_, false);
}

void FftPlan::radix2(std::complex<double>* x, std::size_t n, bool invert) const {
    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    const std::size_t tstride = (pow2_ ? n_ : m_);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        std::size_t step = tstride / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> w = twiddle_[k * step];
                if (invert) w = std::conj(w);
                std::complex<double> u = x[i + k];
                std::complex<double> v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
            }
        }
    }
    if (invert) {
        double inv = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) x[i] *= inv;
    }
}

void FftPlan::bluestein(std::complex<double>* x, bool invert) const {
    // DFT via x_k -> chirp_k * IFFT(FFT(x*chirp) .* FFT(kernel))_k.
    std::vector<std::complex<double>> a(m_, {0.0, 0.0});
    for (std::size_t k = 0; k < n_; ++k) {
        std::complex<double> c = invert ? std::conj(chirp_[k]) : chirp_[k];
        a[k] = x[k] * c;
    }
    radix2(a.data(), m_, false);
    if (invert) {
        // Kernel for the inverse transform is the conjugate of the forward
        // kernel; conjugation commutes with the real-symmetric layout.
        for (std::size_t i = 0; i < m_; ++i) {
            // FFT(conj(b))[i] = conj(FFT(b)[m-i]); exploit precomputed table.
            std::size_t j = (m_ - i) % m_;
            a[i] *= std::conj(chirp_fft_[j]);
        }
    } else {
        for (std::size_t i = 0; i < m_; ++i) a[i] *= chirp_fft_[i];
    }
    radix2(a.data(), m_, true);
    for (std::size_t k = 0; k < n_; ++k) {
        std::complex<double> c = invert ? std::conj(chirp_[k]) : chirp_[k];
        x[k] = a[k] * c;
    }
    if (invert) {
        double inv = 1.0 / static_cast<double>(n_);
        for (std::size_t k = 0; k < n_; ++k) x[k] *= inv;
    }
}

void FftPlan::forward(std::complex<double>* x) const {
    if (pow2_) radix2(x, n_, false);
    else bluestein(x, false);
}

void FftPlan::inverse(std::complex<double>* x) const {
    if (pow2_) radix2(x, n_, true);
    else bluestein(x, true);
}

} // namespace timbre
