#include "timbre/stft.hpp"

#include "timbre/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace timbre {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kOverlapFloor = 1e-8;

// Signal value at a possibly out-of-range index: one mirror reflection
// without repeating the edge sample, zero once the reflection is exhausted.
inline double padded_sample(const std::vector<double>& x, long long i) {
    const long long n = static_cast<long long>(x.size());
    if (i < 0) i = -i;
    else if (i >= n) i = 2 * n - 2 - i;
    if (i < 0 || i >= n) return 0.0;
    return x[static_cast<std::size_t>(i)];
}

std::vector<double> make_analysis_window(const StftParams& p) {
    p.validate();
    return hann_window(p.window_len);
}

} // namespace

std::vector<double> hann_window(int length) {
    if (length < 2) throw std::invalid_argument("hann_window: length must be >= 2");
    std::vector<double> w(static_cast<std::size_t>(length));
    for (int n = 0; n < length; ++n)
        w[static_cast<std::size_t>(n)] = 0.5 * (1.0 - std::cos(kTwoPi * n / length));
    return w;
}

StftAnalyzer::StftAnalyzer(const StftParams& params)
    : params_(params),
      window_(make_analysis_window(params)),
      plan_(static_cast<std::size_t>(params.window_len)) {}

ComplexSpectrogram StftAnalyzer::transform(const Waveform& wave) const {
    if (wave.samples.empty()) throw std::invalid_argument("stft: empty waveform");
    const int win = params_.window_len;
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

    std::vector<std::complex<double>> buf(static_cast<std::size_t>(win));
    for (std::size_t t = 0; t < frames; ++t) {
        const long long start = static_cast<long long>(t) * hop - win / 2;
        for (int n = 0; n < win; ++n)
            buf[static_cast<std::size_t>(n)] =
                window_[static_cast<std::size_t>(n)] * padded_sample(wave.samples, start + n);
        plan_.forward(buf.data());
        for (std::size_t k = 0; k < bins; ++k) out.at(t, k) = buf[k];
    }
    return out;
}

Waveform StftAnalyzer::inverse(const ComplexSpectrogram& spec) const {
    if (spec.repr() != Repr::stft)
        throw UnsupportedRepresentation("istft: input is not an STFT spectrogram");
    const int win = params_.window_len;
    const int hop = params_.hop;
    if (spec.bins != static_cast<std::size_t>(params_.n_bins))
        throw std::invalid_argument("istft: bin count does not match params");

    const std::size_t out_len = spec.frames * static_cast<std::size_t>(hop);
    const std::size_t pad = static_cast<std::size_t>(win / 2);
    std::vector<double> num(out_len + 2 * pad + static_cast<std::size_t>(win), 0.0);
    std::vector<double> den(num.size(), 0.0);

    std::vector<std::complex<double>> buf(static_cast<std::size_t>(win));
    for (std::size_t t = 0; t < spec.frames; ++t) {
        // Hermitian extension of the one-sided spectrum.
        for (std::size_t k = 0; k < spec.bins; ++k) buf[k] = spec.at(t, k);
        for (int k = 1; k < win / 2; ++k)
            buf[static_cast<std::size_t>(win - k)] = std::conj(spec.at(t, static_cast<std::size_t>(k)));
        plan_.inverse(buf.data());
        const std::size_t base = t * static_cast<std::size_t>(hop);
        for (int n = 0; n < win; ++n) {
            const double w = window_[static_cast<std::size_t>(n)];
            num[base + static_cast<std::size_t>(n)] += w * buf[static_cast<std::size_t>(n)].real();
            den[base + static_cast<std::size_t>(n)] += w * w;
        }
    }

    Waveform out;
    out.sample_rate = spec.sample_rate;
    out.samples.resize(out_len);
    for (std::size_t i = 0; i < out_len; ++i) {
        const std::size_t p = i + pad;
        out.samples[i] = num[p] / std::max(den[p], kOverlapFloor);
    }
    return out;
}

ComplexSpectrogram stft(const Waveform& wave, const StftParams& params) {
    return StftAnalyzer(params).transform(wave);
}

Waveform istft_ls(const ComplexSpectrogram& spec) {
    if (spec.repr() != Repr::stft)
        throw UnsupportedRepresentation("istft: input is not an STFT spectrogram");
    return StftAnalyzer(std::get<StftParams>(spec.params)).inverse(spec);
}

} // namespace timbre
