#pragma once

#include "timbre/types.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace timbre::test {

inline constexpr double kTwoPi = 6.28318530717958647692;

inline Waveform sine_wave(double freq, double seconds, double amplitude = 1.0,
                          int sample_rate = 16000, double phase = 0.0) {
    Waveform w;
    w.sample_rate = sample_rate;
    const std::size_t n = static_cast<std::size_t>(seconds * sample_rate);
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        w.samples[i] = amplitude * std::sin(kTwoPi * freq * static_cast<double>(i) / sample_rate + phase);
    return w;
}

// Fundamental plus integer harmonics with 1/h amplitudes and a shared
// exponential decay envelope.
inline Waveform harmonic_tone(double f0, double seconds, int harmonics = 6,
                              double decay_per_second = 1.0, int sample_rate = 16000) {
    Waveform w;
    w.sample_rate = sample_rate;
    const std::size_t n = static_cast<std::size_t>(seconds * sample_rate);
    w.samples.assign(n, 0.0);
    for (int h = 1; h <= harmonics; ++h) {
        const double amp = 1.0 / h;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / sample_rate;
            w.samples[i] += amp * std::exp(-decay_per_second * t) *
                            std::sin(kTwoPi * f0 * h * t);
        }
    }
    // Normalize peak to 0.5 to stay comfortably inside [-1, 1].
    double peak = 0.0;
    for (double v : w.samples) peak = std::max(peak, std::fabs(v));
    if (peak > 0.0)
        for (double& v : w.samples) v *= 0.5 / peak;
    return w;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    return cov / std::sqrt(va * vb);
}

inline std::size_t argmax_bin(const ComplexSpectrogram& spec, std::size_t frame) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < spec.bins; ++k)
        if (std::abs(spec.at(frame, k)) > std::abs(spec.at(frame, best))) best = k;
    return best;
}

inline std::size_t argmax_bin(const LogMagSpectrogram& spec, std::size_t frame) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < spec.bins; ++k)
        if (spec.at(frame, k) > spec.at(frame, best)) best = k;
    return best;
}

} // namespace timbre::test
