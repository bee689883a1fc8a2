#pragma once

#include "timbre/types.hpp"

namespace timbre {

// Transpose by translating along the log-frequency axis: +s semitones moves
// content up by s*b/12 bins; vacated bins are filled with the silence value
// ln(kMagnitudeFloor). Requires CQT provenance and b divisible by 12.
LogMagSpectrogram pitch_shift_cqt(const LogMagSpectrogram& spec, int semitones);

// Frame-count + samples-per-frame pairing that drives synthesis timing.
// Frame content is never resampled; tempo comes entirely from how many
// waveform samples each frame is asked to cover.
struct ConditioningSchedule {
    std::size_t frames = 0;
    int samples_per_frame = 0;

    std::size_t total_samples() const {
        return frames * static_cast<std::size_t>(samples_per_frame);
    }
};

// samples_per_frame = round(hop * stretch); stretch must lie in [0.25, 4].
ConditioningSchedule retime_conditioning(const LogMagSpectrogram& spec, double stretch);

// Fundamental frequency estimate (Hz) by normalized autocorrelation with
// parabolic peak interpolation, searched in [f_lo, f_hi]. Exists to make
// pitch claims testable; not a production pitch tracker.
double detect_f0(const Waveform& wave, double f_lo, double f_hi);

} // namespace timbre
