#pragma once

#include "timbre/musical_ops.hpp"
#include "timbre/types.hpp"

#include <span>
#include <vector>

namespace timbre {

// Per-sample conditioning view over per-frame rows: sample s reads frame
// floor(s / samples_per_frame) (nearest-neighbor upsampling). Rows are stored
// once per frame, so repeated lookups inside a frame are cheap and the
// per-frame structure is visible to consumers that want to cache projections.
class ConditioningMatrix {
public:
    ConditioningMatrix() = default;
    ConditioningMatrix(std::size_t frames, std::size_t channels, int samples_per_frame,
                       std::vector<double> frame_data);

    std::size_t rows() const { return frames_ * static_cast<std::size_t>(samples_per_frame_); }
    std::size_t cols() const { return channels_; }
    std::size_t frame_count() const { return frames_; }
    int samples_per_frame() const { return samples_per_frame_; }

    std::size_t frame_of(std::size_t sample) const {
        return sample / static_cast<std::size_t>(samples_per_frame_);
    }

    std::span<const double> frame_row(std::size_t frame) const {
        return {frame_data_.data() + frame * channels_, channels_};
    }

    std::span<const double> row(std::size_t sample) const { return frame_row(frame_of(sample)); }

    // Contiguous frame range [first, last).
    ConditioningMatrix slice_frames(std::size_t first, std::size_t last) const;

    // Time-reversed view: frame order flipped (rows within a frame are
    // identical by construction).
    ConditioningMatrix reversed() const;

private:
    std::size_t frames_ = 0;
    std::size_t channels_ = 0;
    int samples_per_frame_ = 1;
    std::vector<double> frame_data_; // frame-major
};

// Add the conditioning shift, then upsample frames to the sample rate
// according to the schedule. The spectrogram must be in the raw state; the
// shift (default +2) centers typical log-CQT mass near zero.
ConditioningMatrix prepare_conditioning(const LogMagSpectrogram& spec, double shift,
                                        const ConditioningSchedule& schedule);

} // namespace timbre
