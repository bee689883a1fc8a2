#include "timbre/beam_search.hpp"

#include "timbre/errors.hpp"
#include "timbre/rng.hpp"
#include "timbre/spectrogram_ops.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace timbre {

std::uint64_t derive_probe_seed(std::uint64_t seed, std::size_t iteration, int probe) {
    return seed ^ mix64(mix64(iteration + 0x9E37ULL) ^ (static_cast<std::uint64_t>(probe) + 1));
}

double chunk_cqt_error(const CqtAnalyzer& analyzer, std::span<const double> chunk,
                       const LogMagSpectrogram& target, std::size_t frame_offset) {
    Waveform w;
    w.sample_rate = analyzer.params().sample_rate;
    w.samples.assign(chunk.begin(), chunk.end());
    const LogMagSpectrogram lm = log_magnitude(analyzer.transform(w));
    double err = 0.0;
    for (std::size_t tf = 0; tf < lm.frames; ++tf) {
        const std::size_t gf = frame_offset + tf;
        if (gf >= target.frames) break;
        for (std::size_t k = 0; k < lm.bins; ++k) {
            const double d = lm.at(tf, k) - target.at(gf, k);
            err += d * d;
        }
    }
    return err;
}

namespace {

std::vector<double> run_probe(const BeamSynthesizer& synth, std::span<const double> prefix,
                              std::size_t count, std::uint64_t seed, std::size_t iteration,
                              int probe) {
    try {
        std::vector<double> ext = synth.extend(prefix, count, seed);
        if (ext.size() != count)
            throw Error("beam: synthesizer returned wrong sample count");
        return ext;
    } catch (const NumericFailure& e) {
        throw NumericFailure("beam: probe " + std::to_string(probe) + " at iteration " +
                                 std::to_string(iteration) + ": " + e.what(),
                             e.position());
    } catch (const std::exception& e) {
        throw Error("beam: probe " + std::to_string(probe) + " at iteration " +
                    std::to_string(iteration) + ": " + e.what());
    }
}

} // namespace

BeamResult beam_synthesize(const LogMagSpectrogram& target, const BeamSynthesizer& synth,
                           const BeamConfig& cfg) {
    if (target.repr() != Repr::cqt)
        throw UnsupportedRepresentation("beam: target must be a CQT spectrogram");
    if (target.normalization != NormalizationState::raw)
        throw WrongNormalizationState("beam: target must be in the raw state");
    if (cfg.beam_width < 1) throw std::invalid_argument("beam: beam_width must be >= 1");
    if (cfg.step < 1) throw std::invalid_argument("beam: step must be >= 1");

    const CqtParams& params = std::get<CqtParams>(target.params);
    const CqtAnalyzer analyzer(params);
    const std::size_t hop = static_cast<std::size_t>(params.hop);
    const std::size_t total = target.frames * hop;
    const std::size_t step = static_cast<std::size_t>(cfg.step);
    const std::size_t lookahead = static_cast<std::size_t>(cfg.effective_lookahead());

    BeamResult result;
    result.beam_width = cfg.beam_width;
    result.step = cfg.step;
    result.wave.sample_rate = target.sample_rate;

    std::vector<double>& committed = result.wave.samples;
    committed.reserve(total);

    // Target no longer than one step: plain single-probe generation.
    if (total <= step) {
        committed = run_probe(synth, {}, total, derive_probe_seed(cfg.seed, 0, 0), 0, 0);
        BeamIterationLog log;
        log.committed_score = chunk_cqt_error(analyzer, committed, target, 0);
        result.total_committed_score = log.committed_score;
        result.iterations.push_back(std::move(log));
        return result;
    }

    std::size_t iteration = 0;
    while (committed.size() < total) {
        const std::size_t remaining = total - committed.size();
        const std::size_t commit_n = std::min(step, remaining);
        const std::size_t look_n = std::min(lookahead, remaining - commit_n);
        const std::size_t ext_n = commit_n + look_n;
        const std::size_t frame_offset = committed.size() / hop;

        int best = 0;
        std::vector<double> best_ext;
        BeamIterationLog log;
        log.iteration = iteration;
        log.committed_before = committed.size();

        if (cfg.beam_width == 1) {
            best_ext = run_probe(synth, committed, ext_n,
                                 derive_probe_seed(cfg.seed, iteration, 0), iteration, 0);
        } else {
            double best_score = 0.0;
            for (int p = 0; p < cfg.beam_width; ++p) {
                std::vector<double> ext = run_probe(
                    synth, committed, ext_n, derive_probe_seed(cfg.seed, iteration, p), iteration, p);
                const double score = chunk_cqt_error(analyzer, ext, target, frame_offset);
                log.probe_scores.push_back(score);
                if (p == 0 || score < best_score) {
                    best_score = score;
                    best = p;
                    best_ext = std::move(ext);
                }
            }
        }

        committed.insert(committed.end(), best_ext.begin(),
                         best_ext.begin() + static_cast<std::ptrdiff_t>(commit_n));
        log.chosen_probe = best;
        log.committed_score = chunk_cqt_error(
            analyzer, std::span<const double>(committed).last(commit_n), target, frame_offset);
        result.total_committed_score += log.committed_score;
        result.iterations.push_back(std::move(log));
        ++iteration;
    }
    return result;
}

Waveform plain_generate(const BeamSynthesizer& synth, std::size_t total_samples,
                        const BeamConfig& cfg, int sample_rate) {
    Waveform out;
    out.sample_rate = sample_rate;
    out.samples.reserve(total_samples);
    std::size_t iteration = 0;
    while (out.samples.size() < total_samples) {
        const std::size_t n =
            std::min<std::size_t>(static_cast<std::size_t>(cfg.step), total_samples - out.samples.size());
        std::vector<double> ext = run_probe(synth, out.samples, n,
                                            derive_probe_seed(cfg.seed, iteration, 0), iteration, 0);
        out.samples.insert(out.samples.end(), ext.begin(), ext.end());
        ++iteration;
    }
    return out;
}

} // namespace timbre
