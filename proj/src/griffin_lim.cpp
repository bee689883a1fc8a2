#include "timbre/griffin_lim.hpp"

#include "timbre/errors.hpp"
#include "timbre/rng.hpp"
#include "timbre/stft.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace timbre {

namespace {

constexpr double kPi = 3.14159265358979323846;

ComplexSpectrogram with_phase(const MagnitudeSpectrogram& mag,
                              const std::vector<std::complex<double>>& unit_phase) {
    ComplexSpectrogram s;
    s.frames = mag.frames;
    s.bins = mag.bins;
    s.params = mag.params;
    s.sample_rate = mag.sample_rate;
    s.data.resize(mag.data.size());
    for (std::size_t i = 0; i < mag.data.size(); ++i) s.data[i] = mag.data[i] * unit_phase[i];
    return s;
}

// Unit-magnitude phase factor of z; 1 where z vanishes.
inline std::complex<double> phase_of(const std::complex<double>& z) {
    const double m = std::abs(z);
    if (m < 1e-300) return {1.0, 0.0};
    return z / m;
}

} // namespace

MagnitudeSpectrogram magnitude_from_log(const LogMagSpectrogram& log_mag, double floor) {
    if (log_mag.repr() != Repr::stft)
        throw UnsupportedRepresentation("griffin_lim: log-magnitude input must be STFT");
    MagnitudeSpectrogram out;
    out.frames = log_mag.frames;
    out.bins = log_mag.bins;
    out.params = std::get<StftParams>(log_mag.params);
    out.sample_rate = log_mag.sample_rate;
    out.data.resize(log_mag.data.size());
    for (std::size_t i = 0; i < log_mag.data.size(); ++i)
        out.data[i] = std::max(std::exp(log_mag.data[i]) - floor, 0.0);
    return out;
}

GriffinLimResult griffin_lim(const MagnitudeSpectrogram& mag, const GriffinLimConfig& cfg,
                             const ComplexSpectrogram* provided_phase) {
    if (cfg.iterations < 0) throw std::invalid_argument("griffin_lim: iterations must be >= 0");
    for (double v : mag.data)
        if (v < 0.0) throw std::invalid_argument("griffin_lim: negative magnitude");
    if (cfg.phase_init == PhaseInit::provided) {
        if (provided_phase == nullptr)
            throw std::invalid_argument("griffin_lim: provided phase init without phase source");
        if (provided_phase->frames != mag.frames || provided_phase->bins != mag.bins)
            throw std::invalid_argument("griffin_lim: phase source shape mismatch");
    }

    const std::size_t cells = mag.data.size();
    std::vector<std::complex<double>> phase(cells, {1.0, 0.0});
    switch (cfg.phase_init) {
    case PhaseInit::zero:
        break;
    case PhaseInit::random_uniform: {
        Rng rng(cfg.seed);
        for (auto& p : phase) {
            const double a = rng.uniform(-kPi, kPi);
            p = {std::cos(a), std::sin(a)};
        }
        break;
    }
    case PhaseInit::provided:
        for (std::size_t i = 0; i < cells; ++i) phase[i] = phase_of(provided_phase->data[i]);
        break;
    }

    StftAnalyzer analyzer(mag.params);
    GriffinLimResult result;
    result.mse.reserve(static_cast<std::size_t>(cfg.iterations) + 1);

    Waveform x = analyzer.inverse(with_phase(mag, phase));
    for (int iter = 0;; ++iter) {
        ComplexSpectrogram est = analyzer.transform(x);
        double err = 0.0;
        for (std::size_t i = 0; i < cells; ++i) {
            const double d = mag.data[i] - std::abs(est.data[i]);
            err += d * d;
        }
        result.mse.push_back(err / static_cast<double>(cells));
        if (iter == cfg.iterations) break;
        for (std::size_t i = 0; i < cells; ++i) phase[i] = phase_of(est.data[i]);
        x = analyzer.inverse(with_phase(mag, phase));
    }
    result.wave = std::move(x);
    return result;
}

GriffinLimResult griffin_lim(const LogMagSpectrogram& log_mag, const GriffinLimConfig& cfg,
                             const ComplexSpectrogram* provided_phase, double floor) {
    return griffin_lim(magnitude_from_log(log_mag, floor), cfg, provided_phase);
}

} // namespace timbre
