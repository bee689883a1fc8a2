#include "timbre/cqt.hpp"

#include <cmath>
#include <stdexcept>

namespace timbre {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

inline double reflected(const std::vector<double>& x, long long i) {
    const long long n = static_cast<long long>(x.size());
    if (i < 0) i = -i;
    else if (i >= n) i = 2 * n - 2 - i;
    if (i < 0 || i >= n) return 0.0;
    return x[static_cast<std::size_t>(i)];
}

} // namespace

CqtAnalyzer::CqtAnalyzer(const CqtParams& params) : params_(params) {
    params_.validate();
    const double q = params_.q_factor();
    const double sr = static_cast<double>(params_.sample_rate);
    kernels_.resize(static_cast<std::size_t>(params_.n_bins));
    for (int k = 0; k < params_.n_bins; ++k) {
        const double fk = params_.bin_frequency(k);
        int half = static_cast<int>(std::floor(q * sr / (2.0 * fk)));
        if (half < 1) half = 1;
        const int len = 2 * half + 1;
        Kernel& ker = kernels_[static_cast<std::size_t>(k)];
        ker.half = half;
        ker.taps.resize(static_cast<std::size_t>(len));
        double wsum = 0.0;
        for (int i = 0; i < len; ++i) {
            // Symmetric Hann, peak aligned with the frame center.
            const double w = 0.5 * (1.0 - std::cos(kTwoPi * i / (len - 1)));
            const double phase = -kTwoPi * fk * static_cast<double>(i - half) / sr;
            ker.taps[static_cast<std::size_t>(i)] = w * std::complex<double>(std::cos(phase), std::sin(phase));
            wsum += w;
        }
        const double scale = 2.0 / wsum;
        for (auto& t : ker.taps) t *= scale;
    }
}

ComplexSpectrogram CqtAnalyzer::transform(const Waveform& wave) const {
    if (wave.samples.empty()) throw std::invalid_argument("cqt: empty waveform");
    if (wave.sample_rate != params_.sample_rate)
        throw std::invalid_argument("cqt: waveform sample rate does not match params");
    const int hop = params_.hop;
    const std::size_t frames =
        (wave.samples.size() + static_cast<std::size_t>(hop) - 1) / static_cast<std::size_t>(hop);
    const std::size_t bins = static_cast<std::size_t>(params_.n_bins);

    ComplexSpectrogram out;
    out.frames = frames;
    out.bins = bins;
    out.data.resize(frames * bins);
    out.params = params_;
    out.sample_rate = wave.sample_rate;

    const long long n = static_cast<long long>(wave.samples.size());
    for (std::size_t t = 0; t < frames; ++t) {
        const long long center = static_cast<long long>(t) * hop;
        for (std::size_t k = 0; k < bins; ++k) {
            const Kernel& ker = kernels_[k];
            const long long begin = center - ker.half;
            const long long end = center + ker.half;
            std::complex<double> acc{0.0, 0.0};
            if (begin >= 0 && end < n) {
                const double* x = wave.samples.data() + begin;
                const std::complex<double>* taps = ker.taps.data();
                const std::size_t len = ker.taps.size();
                double re = 0.0, im = 0.0;
                for (std::size_t i = 0; i < len; ++i) {
                    re += taps[i].real() * x[i];
                    im += taps[i].imag() * x[i];
                }
                acc = {re, im};
            } else {
                for (std::size_t i = 0; i < ker.taps.size(); ++i)
                    acc += ker.taps[i] * reflected(wave.samples, begin + static_cast<long long>(i));
            }
            out.at(t, k) = acc;
        }
    }
    return out;
}

ComplexSpectrogram cqt(const Waveform& wave, const CqtParams& params) {
    return CqtAnalyzer(params).transform(wave);
}

} // namespace timbre
