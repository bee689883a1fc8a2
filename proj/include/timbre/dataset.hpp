#pragma once

#include "timbre/rng.hpp"
#include "timbre/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace timbre {

struct ManifestEntry {
    std::string piece_id;
    std::string path;
    std::string domain;
};

// Newline-delimited "piece_id<TAB>path<TAB>domain" records.
struct PieceManifest {
    std::vector<ManifestEntry> entries;
};

PieceManifest parse_manifest(const std::string& text);
std::string format_manifest(const PieceManifest& manifest);
PieceManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const PieceManifest& manifest);

// Consecutive non-overlapping chunks of round(seconds * sample_rate) samples;
// the trailing remainder is dropped. An input shorter than one chunk yields
// an empty list.
std::vector<Waveform> chunk_waveform(const Waveform& wave, double seconds = 4.0);

struct SplitResult {
    PieceManifest train;
    PieceManifest test;
};

// Partition by piece id so no piece appears on both sides. The test side gets
// max(1, round(fraction * pieces)) pieces, ties rounding toward the training
// side. Deterministic per seed.
SplitResult split_by_piece(const PieceManifest& manifest, double test_fraction,
                           std::uint64_t seed);

// Rescale so the output peak is exactly s, s ~ U(0.1, 1.0) drawn from rng.
Waveform augment_rescale(const Waveform& wave, Rng& rng);
Waveform augment_rescale(const Waveform& wave, Rng& rng, double peak_lo, double peak_hi);

struct DomainStats {
    std::string domain;
    double mean = 0.0;
    double std_dev = 0.0;
};

// Corpus-wide mean and standard deviation over every cell of every
// spectrogram in the domain (deterministic two-pass reduction).
DomainStats compute_domain_stats(std::span<const LogMagSpectrogram> corpus,
                                 const std::string& domain);

// y = (x - mean) / (3 * std): covers ~99.7% of a roughly Gaussian mass with
// [-1, 1]. Transitions raw -> domain_normalized; denormalize is the exact
// inverse and transitions back.
LogMagSpectrogram normalize(const LogMagSpectrogram& spec, const DomainStats& stats);
LogMagSpectrogram denormalize(const LogMagSpectrogram& spec, const DomainStats& stats);

// {"domain":..., "mean":..., "std":..., "scale_rule":"3sigma"}
std::string stats_to_json(const DomainStats& stats);
DomainStats stats_from_json(const std::string& text);

} // namespace timbre
