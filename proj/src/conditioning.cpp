#include "timbre/conditioning.hpp"

#include "timbre/errors.hpp"

#include <algorithm>
#include <stdexcept>

namespace timbre {

ConditioningMatrix::ConditioningMatrix(std::size_t frames, std::size_t channels,
                                       int samples_per_frame, std::vector<double> frame_data)
    : frames_(frames), channels_(channels), samples_per_frame_(samples_per_frame),
      frame_data_(std::move(frame_data)) {
    if (samples_per_frame_ < 1)
        throw std::invalid_argument("conditioning: samples_per_frame must be >= 1");
    if (frame_data_.size() != frames_ * channels_)
        throw std::invalid_argument("conditioning: frame data size mismatch");
}

ConditioningMatrix ConditioningMatrix::slice_frames(std::size_t first, std::size_t last) const {
    if (first > last || last > frames_)
        throw std::invalid_argument("conditioning: bad frame slice");
    std::vector<double> data(frame_data_.begin() + static_cast<std::ptrdiff_t>(first * channels_),
                             frame_data_.begin() + static_cast<std::ptrdiff_t>(last * channels_));
    return ConditioningMatrix(last - first, channels_, samples_per_frame_, std::move(data));
}

ConditioningMatrix ConditioningMatrix::reversed() const {
    std::vector<double> data(frame_data_.size());
    for (std::size_t f = 0; f < frames_; ++f) {
        const std::size_t src = frames_ - 1 - f;
        std::copy_n(frame_data_.data() + src * channels_, channels_, data.data() + f * channels_);
    }
    return ConditioningMatrix(frames_, channels_, samples_per_frame_, std::move(data));
}

ConditioningMatrix prepare_conditioning(const LogMagSpectrogram& spec, double shift,
                                        const ConditioningSchedule& schedule) {
    if (spec.normalization != NormalizationState::raw)
        throw WrongNormalizationState("prepare_conditioning: spectrogram must be in raw state");
    if (schedule.frames != spec.frames)
        throw std::invalid_argument("prepare_conditioning: schedule frame count mismatch");
    std::vector<double> data(spec.data.size());
    for (std::size_t i = 0; i < spec.data.size(); ++i) data[i] = spec.data[i] + shift;
    return ConditioningMatrix(spec.frames, spec.bins, schedule.samples_per_frame, std::move(data));
}

} // namespace timbre
