#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <variant>
#include <vector>

namespace timbre {

// Additive floor applied before taking log magnitudes. Also defines the
// "silence" value ln(kMagnitudeFloor) used to fill vacated spectrogram cells.
inline constexpr double kMagnitudeFloor = 1e-5;

inline double silence_log_value() { return std::log(kMagnitudeFloor); }

// Mono waveform. Samples are dimensionless amplitudes, nominally in [-1, 1].
struct Waveform {
    std::vector<double> samples;
    int sample_rate = 16000;

    std::size_t size() const { return samples.size(); }
};

enum class WindowKind : std::uint8_t { hann_periodic };

// Short-time Fourier transform configuration. One-sided spectra:
// n_bins == window_len / 2 + 1.
struct StftParams {
    int window_len = 672;
    int hop = 256;
    int n_bins = 337;
    WindowKind window_kind = WindowKind::hann_periodic;

    void validate() const {
        if (window_len < 2) throw std::invalid_argument("stft: window_len must be >= 2");
        if (hop < 1 || hop > window_len)
            throw std::invalid_argument("stft: hop must be in [1, window_len]");
        if (n_bins != window_len / 2 + 1)
            throw std::invalid_argument("stft: n_bins must equal window_len/2 + 1");
    }
};

// Constant-Q transform configuration. Bin k (0-indexed) has center frequency
// f_min * 2^(k/b); bin 0 sits at f_min so that with b = 48 a semitone is
// exactly 4 bins and 336 bins span 7 octaves. gamma scales the quality
// factor: Q = gamma / (2^(1/b) - 1); smaller gamma means shorter kernels and
// finer time resolution.
struct CqtParams {
    double f_min = 32.70;
    int bins_per_octave = 48;
    int n_bins = 336;
    int hop = 256;
    double gamma = 0.8;
    int sample_rate = 16000;

    double bin_frequency(int k) const {
        return f_min * std::pow(2.0, static_cast<double>(k) / bins_per_octave);
    }

    double q_factor() const {
        return gamma / (std::pow(2.0, 1.0 / bins_per_octave) - 1.0);
    }

    void validate() const {
        if (f_min <= 0.0) throw std::invalid_argument("cqt: f_min must be positive");
        if (bins_per_octave < 1) throw std::invalid_argument("cqt: bins_per_octave must be positive");
        if (n_bins < 1) throw std::invalid_argument("cqt: n_bins must be positive");
        if (hop < 1) throw std::invalid_argument("cqt: hop must be positive");
        if (!(gamma > 0.0 && gamma <= 1.0))
            throw std::invalid_argument("cqt: gamma must be in (0, 1]");
        if (sample_rate < 1) throw std::invalid_argument("cqt: sample_rate must be positive");
        if (bin_frequency(n_bins - 1) >= 0.5 * sample_rate)
            throw std::invalid_argument("cqt: top bin reaches or exceeds Nyquist");
    }
};

using TransformParams = std::variant<StftParams, CqtParams>;

enum class Repr : std::uint8_t { stft = 0, cqt = 1 };

enum class NormalizationState : std::uint8_t {
    raw = 0,
    domain_normalized = 1,
    conditioning_shifted = 2,
};

// frames x bins complex time-frequency grid, frame-major.
struct ComplexSpectrogram {
    std::size_t frames = 0;
    std::size_t bins = 0;
    std::vector<std::complex<double>> data;
    TransformParams params;
    int sample_rate = 16000;

    Repr repr() const { return params.index() == 0 ? Repr::stft : Repr::cqt; }

    std::complex<double>& at(std::size_t t, std::size_t k) { return data[t * bins + k]; }
    const std::complex<double>& at(std::size_t t, std::size_t k) const { return data[t * bins + k]; }
};

// frames x bins real grid of natural-log magnitudes.
struct LogMagSpectrogram {
    std::size_t frames = 0;
    std::size_t bins = 0;
    std::vector<double> data;
    TransformParams params;
    int sample_rate = 16000;
    NormalizationState normalization = NormalizationState::raw;

    Repr repr() const { return params.index() == 0 ? Repr::stft : Repr::cqt; }

    double& at(std::size_t t, std::size_t k) { return data[t * bins + k]; }
    double at(std::size_t t, std::size_t k) const { return data[t * bins + k]; }
};

// Linear-magnitude STFT grid, the working representation for phase
// reconstruction. Entries must be non-negative.
struct MagnitudeSpectrogram {
    std::size_t frames = 0;
    std::size_t bins = 0;
    std::vector<double> data;
    StftParams params;
    int sample_rate = 16000;

    double& at(std::size_t t, std::size_t k) { return data[t * bins + k]; }
    double at(std::size_t t, std::size_t k) const { return data[t * bins + k]; }
};

} // namespace timbre
