#pragma once

#include "timbre/fft.hpp"
#include "timbre/types.hpp"

#include <vector>

namespace timbre {

// Periodic Hann window: w[n] = 0.5*(1 - cos(2*pi*n/length)), n in [0, length).
std::vector<double> hann_window(int length);

// Reusable STFT engine. Frames are centered at t*hop; the signal is padded by
// single reflection (no edge repeat), zeros beyond. frames = ceil(len/hop).
class StftAnalyzer {
public:
    explicit StftAnalyzer(const StftParams& params);

    const StftParams& params() const { return params_; }

    ComplexSpectrogram transform(const Waveform& wave) const;

    // Least-squares overlap-add inverse with window-squared normalization.
    // Output length is frames*hop; the denominator is floored at 1e-8.
    Waveform inverse(const ComplexSpectrogram& spec) const;

private:
    StftParams params_;
    std::vector<double> window_;
    FftPlan plan_;
};

// One-shot conveniences.
ComplexSpectrogram stft(const Waveform& wave, const StftParams& params);
Waveform istft_ls(const ComplexSpectrogram& spec);

} // namespace timbre
