#include "timbre/musical_ops.hpp"

#include "timbre/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace timbre {

LogMagSpectrogram pitch_shift_cqt(const LogMagSpectrogram& spec, int semitones) {
    if (spec.repr() != Repr::cqt)
        throw UnsupportedRepresentation("pitch_shift_cqt: input is not a CQT spectrogram");
    const auto& p = std::get<CqtParams>(spec.params);
    if (p.bins_per_octave % 12 != 0)
        throw std::invalid_argument("pitch_shift_cqt: bins_per_octave must be divisible by 12");
    const int bins_per_semitone = p.bins_per_octave / 12;
    const long long shift = static_cast<long long>(semitones) * bins_per_semitone;
    if (std::llabs(shift) >= static_cast<long long>(spec.bins))
        throw std::invalid_argument("pitch_shift_cqt: shift exceeds bin range");

    LogMagSpectrogram out = spec;
    const double fill = silence_log_value();
    for (std::size_t t = 0; t < spec.frames; ++t) {
        for (std::size_t k = 0; k < spec.bins; ++k) {
            const long long src = static_cast<long long>(k) - shift;
            out.at(t, k) = (src >= 0 && src < static_cast<long long>(spec.bins))
                               ? spec.at(t, static_cast<std::size_t>(src))
                               : fill;
        }
    }
    return out;
}

ConditioningSchedule retime_conditioning(const LogMagSpectrogram& spec, double stretch) {
    if (!(stretch >= 0.25 && stretch <= 4.0))
        throw std::invalid_argument("retime_conditioning: stretch must be in [0.25, 4.0]");
    int hop = 0;
    if (spec.repr() == Repr::cqt) hop = std::get<CqtParams>(spec.params).hop;
    else hop = std::get<StftParams>(spec.params).hop;
    ConditioningSchedule s;
    s.frames = spec.frames;
    s.samples_per_frame = static_cast<int>(std::lround(hop * stretch));
    return s;
}

double detect_f0(const Waveform& wave, double f_lo, double f_hi) {
    if (!(f_lo > 0.0 && f_hi > f_lo)) throw std::invalid_argument("detect_f0: bad search range");
    const double sr = static_cast<double>(wave.sample_rate);
    if (f_hi >= 0.5 * sr) throw std::invalid_argument("detect_f0: f_hi must be below Nyquist");
    const std::size_t n = wave.samples.size();
    const std::size_t min_len = static_cast<std::size_t>(std::ceil(4.0 * sr / f_lo));
    if (n < min_len)
        throw std::invalid_argument("detect_f0: waveform shorter than 4 periods of f_lo");
    double peak = 0.0;
    for (double v : wave.samples) peak = std::max(peak, std::fabs(v));
    if (peak <= 1e-4) throw NoSignal("detect_f0: input is silent");

    const std::size_t lag_lo =
        std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(sr / f_hi)));
    const std::size_t lag_hi =
        std::min<std::size_t>(n - 2, static_cast<std::size_t>(std::ceil(sr / f_lo)));
    if (lag_lo >= lag_hi) throw std::invalid_argument("detect_f0: degenerate search range");

    // Normalized autocorrelation over the full overlap, computed one lag past
    // each end of the search range so peak picking has real neighbors.
    std::vector<double> nac(lag_hi + 2, 0.0);
    for (std::size_t lag = lag_lo - 1; lag <= lag_hi + 1; ++lag) {
        double dot = 0.0, e0 = 0.0, e1 = 0.0;
        const std::size_t len = n - lag;
        for (std::size_t i = 0; i < len; ++i) {
            dot += wave.samples[i] * wave.samples[i + lag];
            e0 += wave.samples[i] * wave.samples[i];
            e1 += wave.samples[i + lag] * wave.samples[i + lag];
        }
        const double denom = std::sqrt(e0 * e1);
        nac[lag] = denom > 0.0 ? dot / denom : 0.0;
    }

    double best = 0.0;
    for (std::size_t lag = lag_lo; lag <= lag_hi; ++lag) best = std::max(best, nac[lag]);
    if (best <= 0.0) throw NoSignal("detect_f0: no periodicity found");

    // First local maximum clearing 85% of the global peak; avoids locking
    // onto period multiples.
    const double threshold = 0.85 * best;
    std::size_t chosen = 0;
    for (std::size_t lag = lag_lo; lag <= lag_hi; ++lag) {
        if (nac[lag] >= threshold && nac[lag] >= nac[lag - 1] && nac[lag] >= nac[lag + 1]) {
            chosen = lag;
            break;
        }
    }
    if (chosen == 0) {
        // Fall back to the global argmax (plateau or range-edge peak).
        for (std::size_t lag = lag_lo; lag <= lag_hi; ++lag)
            if (nac[lag] == best) { chosen = lag; break; }
    }

    double refined = static_cast<double>(chosen);
    if (chosen >= lag_lo && chosen <= lag_hi) {
        const double a = nac[chosen - 1], b = nac[chosen], c = nac[chosen + 1];
        const double denom = a - 2.0 * b + c;
        if (std::fabs(denom) > 1e-12) {
            double delta = 0.5 * (a - c) / denom;
            delta = std::clamp(delta, -0.5, 0.5);
            refined += delta;
        }
    }
    return sr / refined;
}

} // namespace timbre
