#pragma once

#include "timbre/beam_search.hpp"
#include "timbre/wavenet.hpp"

namespace timbre {

// Bridges the synthesizer to the beam: each probe primes a fresh stream with
// the committed prefix, then samples `count` continuations from the seed.
// Prefix-stable because draws are consumed one per emitted sample.
class WaveNetBeamSynth : public BeamSynthesizer {
public:
    WaveNetBeamSynth(const WaveNetConfig& cfg, std::span<const double> params,
                     const ConditioningMatrix* cond)
        : cfg_(cfg), params_(params), cond_(cond) {}

    std::vector<double> extend(std::span<const double> prefix, std::size_t count,
                               std::uint64_t seed) const override;

private:
    WaveNetConfig cfg_;
    std::span<const double> params_;
    const ConditioningMatrix* cond_;
};

} // namespace timbre
