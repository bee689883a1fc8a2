#include "timbre/wavenet_beam.hpp"

#include "timbre/mulaw.hpp"

namespace timbre {

std::vector<double> WaveNetBeamSynth::extend(std::span<const double> prefix, std::size_t count,
                                             std::uint64_t seed) const {
    GenerationStream stream(cfg_, params_, cond_);
    for (double s : prefix) stream.feed(s);
    Rng rng(seed);
    std::vector<double> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const int code = draw_code(stream.next_logits(), SampleMode::sample, rng);
        const double x = mulaw_decode(code);
        out.push_back(x);
        stream.feed(x);
    }
    return out;
}

} // namespace timbre
