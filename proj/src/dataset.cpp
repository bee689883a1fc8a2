#include "timbre/dataset.hpp"

#include "timbre/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace timbre {

PieceManifest parse_manifest(const std::string& text) {
    PieceManifest m;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab1 = line.find('\t');
        const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos)
            throw CorruptFile("manifest: line " + std::to_string(lineno) +
                              " is not piece_id<TAB>path<TAB>domain");
        ManifestEntry e;
        e.piece_id = line.substr(0, tab1);
        e.path = line.substr(tab1 + 1, tab2 - tab1 - 1);
        e.domain = line.substr(tab2 + 1);
        if (e.piece_id.empty())
            throw CorruptFile("manifest: empty piece id at line " + std::to_string(lineno));
        m.entries.push_back(std::move(e));
    }
    if (m.entries.empty()) throw CorruptFile("manifest: no entries");
    return m;
}

std::string format_manifest(const PieceManifest& manifest) {
    std::ostringstream os;
    for (const auto& e : manifest.entries)
        os << e.piece_id << '\t' << e.path << '\t' << e.domain << '\n';
    return os.str();
}

PieceManifest load_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("manifest: cannot open: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_manifest(buf.str());
}

void save_manifest(const std::string& path, const PieceManifest& manifest) {
    std::ofstream os(path);
    if (!os) throw Error("manifest: cannot open for writing: " + path);
    os << format_manifest(manifest);
}

std::vector<Waveform> chunk_waveform(const Waveform& wave, double seconds) {
    if (seconds <= 0.0) throw std::invalid_argument("chunk_waveform: seconds must be positive");
    const std::size_t chunk_len =
        static_cast<std::size_t>(std::lround(seconds * wave.sample_rate));
    std::vector<Waveform> out;
    if (chunk_len == 0 || wave.samples.size() < chunk_len) return out;
    const std::size_t count = wave.samples.size() / chunk_len;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Waveform c;
        c.sample_rate = wave.sample_rate;
        c.samples.assign(wave.samples.begin() + static_cast<std::ptrdiff_t>(i * chunk_len),
                         wave.samples.begin() + static_cast<std::ptrdiff_t>((i + 1) * chunk_len));
        out.push_back(std::move(c));
    }
    return out;
}

SplitResult split_by_piece(const PieceManifest& manifest, double test_fraction,
                           std::uint64_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0))
        throw std::invalid_argument("split_by_piece: fraction must be in [0, 1]");
    std::vector<std::string> pieces;
    for (const auto& e : manifest.entries)
        if (std::find(pieces.begin(), pieces.end(), e.piece_id) == pieces.end())
            pieces.push_back(e.piece_id);
    if (pieces.size() < 2) throw CannotSplit("split_by_piece: need at least 2 pieces");

    // Deterministic Fisher-Yates on the first-appearance piece order.
    Rng rng(seed);
    for (std::size_t i = pieces.size() - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
        std::swap(pieces[i], pieces[j]);
    }

    // Ties round toward the training side.
    const double want = test_fraction * static_cast<double>(pieces.size());
    std::size_t test_count =
        static_cast<std::size_t>(std::max<long long>(1, std::llround(std::ceil(want - 0.5))));
    test_count = std::min(test_count, pieces.size() - 1);

    std::set<std::string> test_pieces(pieces.begin(),
                                      pieces.begin() + static_cast<std::ptrdiff_t>(test_count));
    SplitResult out;
    for (const auto& e : manifest.entries) {
        if (test_pieces.count(e.piece_id)) out.test.entries.push_back(e);
        else out.train.entries.push_back(e);
    }
    return out;
}

Waveform augment_rescale(const Waveform& wave, Rng& rng) {
    return augment_rescale(wave, rng, 0.1, 1.0);
}

Waveform augment_rescale(const Waveform& wave, Rng& rng, double peak_lo, double peak_hi) {
    double peak = 0.0;
    for (double v : wave.samples) peak = std::max(peak, std::fabs(v));
    if (peak <= 0.0) throw NoSignal("augment_rescale: silent input");
    const double s = rng.uniform(peak_lo, peak_hi);
    Waveform out;
    out.sample_rate = wave.sample_rate;
    out.samples.resize(wave.samples.size());
    // s * (x / peak) keeps the output peak exactly s.
    for (std::size_t i = 0; i < wave.samples.size(); ++i)
        out.samples[i] = s * (wave.samples[i] / peak);
    return out;
}

DomainStats compute_domain_stats(std::span<const LogMagSpectrogram> corpus,
                                 const std::string& domain) {
    std::size_t count = 0;
    double sum = 0.0;
    for (const auto& spec : corpus) {
        for (double v : spec.data) sum += v;
        count += spec.data.size();
    }
    if (count == 0) throw std::invalid_argument("compute_domain_stats: empty corpus");
    const double mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (const auto& spec : corpus)
        for (double v : spec.data) sq += (v - mean) * (v - mean);
    const double var = sq / static_cast<double>(count);
    if (var <= 0.0) throw DegenerateStats("compute_domain_stats: zero variance");
    return DomainStats{domain, mean, std::sqrt(var)};
}

LogMagSpectrogram normalize(const LogMagSpectrogram& spec, const DomainStats& stats) {
    if (spec.normalization != NormalizationState::raw)
        throw WrongNormalizationState("normalize: spectrogram is not in the raw state");
    if (stats.std_dev <= 0.0) throw DegenerateStats("normalize: std must be positive");
    LogMagSpectrogram out = spec;
    const double scale = 1.0 / (3.0 * stats.std_dev);
    for (auto& v : out.data) v = (v - stats.mean) * scale;
    out.normalization = NormalizationState::domain_normalized;
    return out;
}

LogMagSpectrogram denormalize(const LogMagSpectrogram& spec, const DomainStats& stats) {
    if (spec.normalization != NormalizationState::domain_normalized)
        throw WrongNormalizationState("denormalize: spectrogram is not domain-normalized");
    if (stats.std_dev <= 0.0) throw DegenerateStats("denormalize: std must be positive");
    LogMagSpectrogram out = spec;
    for (auto& v : out.data) v = v * 3.0 * stats.std_dev + stats.mean;
    out.normalization = NormalizationState::raw;
    return out;
}

std::string stats_to_json(const DomainStats& stats) {
    nlohmann::json j;
    j["domain"] = stats.domain;
    j["mean"] = stats.mean;
    j["std"] = stats.std_dev;
    j["scale_rule"] = "3sigma";
    return j.dump();
}

DomainStats stats_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.contains("mean") || !j.contains("std"))
        throw CorruptFile("stats: malformed JSON");
    DomainStats s;
    s.domain = j.value("domain", "");
    s.mean = j["mean"].get<double>();
    s.std_dev = j["std"].get<double>();
    if (s.std_dev <= 0.0) throw DegenerateStats("stats: std must be positive");
    return s;
}

} // namespace timbre
