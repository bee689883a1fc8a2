#pragma once

#include "timbre/cqt.hpp"
#include "timbre/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace timbre {

struct BeamConfig {
    int beam_width = 8;
    int step = 2048;    // samples committed per iteration
    int lookahead = -1; // extra probe samples; -1 means equal to step (2n-sample probes)
    std::uint64_t seed = 0;

    int effective_lookahead() const { return lookahead < 0 ? step : lookahead; }
};

// Autoregressive sampler driven by the beam. Implementations must be
// prefix-stable: the first k samples of extend(prefix, n, seed) equal
// extend(prefix, k, seed) for k <= n (randomness is drawn per sample, in
// order). Conditioning is owned by the implementation; the prefix length
// locates the absolute position.
class BeamSynthesizer {
public:
    virtual ~BeamSynthesizer() = default;
    virtual std::vector<double> extend(std::span<const double> prefix, std::size_t count,
                                       std::uint64_t seed) const = 0;
};

// Per-probe seed stream: seed XOR hash(iteration, probe).
std::uint64_t derive_probe_seed(std::uint64_t seed, std::size_t iteration, int probe);

struct BeamIterationLog {
    std::size_t iteration = 0;
    std::size_t committed_before = 0;
    int chosen_probe = 0;
    std::vector<double> probe_scores; // selection scores over each probe's extension
    double committed_score = 0.0;     // standalone score of the committed chunk
};

struct BeamResult {
    Waveform wave;
    // Sum of committed-chunk scores; reproducible from the returned waveform
    // by rescoring each committed chunk (lookahead regions are never counted).
    double total_committed_score = 0.0;
    std::vector<BeamIterationLog> iterations;
    int beam_width = 0;
    int step = 0;
};

// Appendix-style beam over autoregressive synthesis: each iteration advances
// beam_width probes from the committed prefix by step+lookahead samples,
// scores each probe by the squared error between the log-CQT of its extension
// and the aligned region of the target, and commits the first `step` samples
// of the argmin probe (ties break to the lowest probe index). All probes
// restart from the committed prefix. A final partial step commits the
// remainder without lookahead. Samples once committed are never modified.
BeamResult beam_synthesize(const LogMagSpectrogram& target_cqt, const BeamSynthesizer& synth,
                           const BeamConfig& cfg);

// The beam_width = 1 path as a standalone generator: advance `step` samples
// per segment using the same derived seed stream, no scoring. beam_synthesize
// with beam_width 1 is bit-identical to this.
Waveform plain_generate(const BeamSynthesizer& synth, std::size_t total_samples,
                        const BeamConfig& cfg, int sample_rate);

// Squared log-CQT error of a standalone chunk against target frames starting
// at frame_offset (frames past the end of the target are ignored).
double chunk_cqt_error(const CqtAnalyzer& analyzer, std::span<const double> chunk,
                       const LogMagSpectrogram& target, std::size_t frame_offset);

} // namespace timbre
