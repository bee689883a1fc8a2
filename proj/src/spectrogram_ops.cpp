#include "timbre/spectrogram_ops.hpp"

#include <cmath>
#include <stdexcept>

namespace timbre {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 6.28318530717958647692;
} // namespace

double wrap_angle(double x) {
    double y = std::fmod(x + kPi, kTwoPi);
    if (y < 0.0) y += kTwoPi;
    return y - kPi;
}

LogMagSpectrogram log_magnitude(const ComplexSpectrogram& spec, double floor) {
    if (floor <= 0.0) throw std::invalid_argument("log_magnitude: floor must be positive");
    LogMagSpectrogram out;
    out.frames = spec.frames;
    out.bins = spec.bins;
    out.params = spec.params;
    out.sample_rate = spec.sample_rate;
    out.normalization = NormalizationState::raw;
    out.data.resize(spec.data.size());
    for (std::size_t i = 0; i < spec.data.size(); ++i)
        out.data[i] = std::log(std::abs(spec.data[i]) + floor);
    return out;
}

std::vector<double> instantaneous_frequency(const ComplexSpectrogram& spec) {
    if (spec.frames < 2)
        throw std::invalid_argument("instantaneous_frequency: need at least 2 frames");
    std::vector<double> out(spec.frames * spec.bins, 0.0);
    for (std::size_t t = 1; t < spec.frames; ++t) {
        for (std::size_t k = 0; k < spec.bins; ++k) {
            const double prev = std::arg(spec.at(t - 1, k));
            const double cur = std::arg(spec.at(t, k));
            out[t * spec.bins + k] = wrap_angle(cur - prev);
        }
    }
    return out;
}

} // namespace timbre
