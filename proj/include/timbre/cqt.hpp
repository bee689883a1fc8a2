#pragma once

#include "timbre/types.hpp"

#include <complex>
#include <vector>

namespace timbre {

// Constant-Q engine. Bin k correlates the signal against a symmetric-Hann
// windowed complex exponential at f_min*2^(k/b) spanning Q cycles, centered
// on the frame position t*hop. Kernels are normalized so a unit-amplitude
// sinusoid at a bin's center frequency yields magnitude ~= 1.
//
// Kernels are precomputed at construction; reuse one analyzer when
// transforming many signals with the same parameters.
class CqtAnalyzer {
public:
    explicit CqtAnalyzer(const CqtParams& params);

    const CqtParams& params() const { return params_; }

    // frames = ceil(len/hop); frame t is centered at t*hop. The signal is
    // extended by single reflection, zeros beyond.
    ComplexSpectrogram transform(const Waveform& wave) const;

private:
    struct Kernel {
        int half = 0;                               // kernel spans [-half, half]
        std::vector<std::complex<double>> taps;     // length 2*half + 1
    };

    CqtParams params_;
    std::vector<Kernel> kernels_;
};

ComplexSpectrogram cqt(const Waveform& wave, const CqtParams& params);

} // namespace timbre
