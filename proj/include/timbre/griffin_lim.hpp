#pragma once

#include "timbre/types.hpp"

#include <cstdint>
#include <vector>

namespace timbre {

enum class PhaseInit : std::uint8_t {
    random_uniform, // per-bin U[-pi, pi) from the seed
    zero,
    provided, // phase taken from a caller-supplied complex spectrogram
};

struct GriffinLimConfig {
    int iterations = 100;
    PhaseInit phase_init = PhaseInit::random_uniform;
    std::uint64_t seed = 0;
};

struct GriffinLimResult {
    Waveform wave;
    // mse[i] = mean squared error between the target magnitude and |STFT(x_i)|.
    // mse[0] is the baseline before any magnitude-replacement step; the
    // sequence has iterations+1 entries and is non-increasing.
    std::vector<double> mse;
};

// Iterative phase reconstruction: the magnitude is held fixed while the phase
// is re-estimated each round through an STFT / least-squares-inverse pair.
GriffinLimResult griffin_lim(const MagnitudeSpectrogram& mag, const GriffinLimConfig& cfg,
                             const ComplexSpectrogram* provided_phase = nullptr);

// Log-magnitude entry point; exponentiates (minus the floor) first. The input
// must carry STFT provenance.
GriffinLimResult griffin_lim(const LogMagSpectrogram& log_mag, const GriffinLimConfig& cfg,
                             const ComplexSpectrogram* provided_phase = nullptr,
                             double floor = kMagnitudeFloor);

// exp(x) - floor, clamped at zero. Throws UnsupportedRepresentation unless
// the spectrogram is STFT-tagged.
MagnitudeSpectrogram magnitude_from_log(const LogMagSpectrogram& log_mag,
                                        double floor = kMagnitudeFloor);

} // namespace timbre
