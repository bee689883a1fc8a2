#include "timbre/dataset.hpp"
#include "timbre/errors.hpp"
#include "timbre/rng.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace timbre;
using namespace timbre::test;

namespace {

PieceManifest make_manifest(std::size_t pieces, std::size_t files_per_piece = 2) {
    PieceManifest m;
    for (std::size_t p = 0; p < pieces; ++p)
        for (std::size_t f = 0; f < files_per_piece; ++f)
            m.entries.push_back({"piece" + std::to_string(p),
                                 "audio/p" + std::to_string(p) + "_" + std::to_string(f) + ".wav",
                                 "piano"});
    return m;
}

LogMagSpectrogram synthetic_spec(std::size_t frames, std::size_t bins, Rng& rng, double mean,
                                 double sigma) {
    LogMagSpectrogram s;
    s.frames = frames;
    s.bins = bins;
    s.params = CqtParams{};
    s.data.resize(frames * bins);
    for (auto& v : s.data) v = mean + sigma * rng.gaussian();
    return s;
}

} // namespace

TEST_SUITE("dataset-pipeline") {

TEST_CASE("chunking arithmetic") {
    Waveform w;
    w.sample_rate = 16000;

    w.samples.assign(8 * 16000, 0.25);
    auto chunks = chunk_waveform(w, 4.0);
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[0].samples.size() == 64000);
    CHECK(chunks[1].samples.size() == 64000);

    w.samples.assign(10 * 16000, 0.25);
    CHECK(chunk_waveform(w, 4.0).size() == 2); // 2 s remainder dropped

    w.samples.assign(3 * 16000, 0.25);
    CHECK(chunk_waveform(w, 4.0).empty());

    CHECK_THROWS_AS(chunk_waveform(w, 0.0), std::invalid_argument);
}

TEST_CASE("chunk concatenation reproduces the input prefix exactly") {
    Rng rng(2);
    Waveform w;
    w.sample_rate = 16000;
    w.samples.resize(9 * 16000 + 777);
    for (auto& v : w.samples) v = rng.uniform(-1, 1);
    auto chunks = chunk_waveform(w, 2.0);
    std::size_t i = 0;
    for (const auto& c : chunks)
        for (double v : c.samples) CHECK(v == w.samples[i++]);
    CHECK(i == chunks.size() * 32000);
}

TEST_CASE("piece split counts and determinism") {
    auto m = make_manifest(10);
    auto split = split_by_piece(m, 0.2, 42);
    std::set<std::string> train_pieces, test_pieces;
    for (const auto& e : split.train.entries) train_pieces.insert(e.piece_id);
    for (const auto& e : split.test.entries) test_pieces.insert(e.piece_id);
    CHECK(train_pieces.size() == 8);
    CHECK(test_pieces.size() == 2);
    for (const auto& p : test_pieces) CHECK(train_pieces.count(p) == 0);

    auto again = split_by_piece(m, 0.2, 42);
    CHECK(format_manifest(again.train) == format_manifest(split.train));
    CHECK(format_manifest(again.test) == format_manifest(split.test));

    // Halves round toward the training side: 5 pieces at 0.5 -> 2 test.
    auto five = split_by_piece(make_manifest(5), 0.5, 7);
    std::set<std::string> five_test;
    for (const auto& e : five.test.entries) five_test.insert(e.piece_id);
    CHECK(five_test.size() == 2);

    PieceManifest single = make_manifest(1);
    CHECK_THROWS_AS(split_by_piece(single, 0.5, 0), CannotSplit);
}

TEST_CASE("split invariants over randomized manifests") {
    Rng rng(71);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t pieces = 2 + rng.next_below(20);
        auto m = make_manifest(pieces, 1 + rng.next_below(3));
        const double fraction = rng.uniform(0.05, 0.95);
        const std::uint64_t seed = rng.next_u64();
        auto split = split_by_piece(m, fraction, seed);

        std::set<std::string> train_pieces, test_pieces;
        for (const auto& e : split.train.entries) train_pieces.insert(e.piece_id);
        for (const auto& e : split.test.entries) test_pieces.insert(e.piece_id);
        CHECK(!test_pieces.empty());
        CHECK(!train_pieces.empty());
        for (const auto& p : test_pieces) CHECK(train_pieces.count(p) == 0);
        CHECK(split.train.entries.size() + split.test.entries.size() == m.entries.size());

        auto again = split_by_piece(m, fraction, seed);
        CHECK(format_manifest(again.test) == format_manifest(split.test));
    }
}

TEST_CASE("manifest parsing round trip and errors") {
    auto m = make_manifest(3);
    auto parsed = parse_manifest(format_manifest(m));
    CHECK(parsed.entries.size() == m.entries.size());
    CHECK(parsed.entries[0].piece_id == "piece0");
    CHECK(parsed.entries[0].domain == "piano");
    CHECK_THROWS_AS(parse_manifest("no tabs here\n"), CorruptFile);
    CHECK_THROWS_AS(parse_manifest(""), CorruptFile);
}

TEST_CASE("augmentation rescales to the drawn peak exactly") {
    Rng rng(5);
    auto w = sine_wave(440.0, 0.1, 1.0);
    for (int i = 0; i < 50; ++i) {
        auto out = augment_rescale(w, rng);
        double peak = 0.0;
        for (double v : out.samples) peak = std::max(peak, std::fabs(v));
        CHECK(peak >= 0.1);
        CHECK(peak <= 1.0);
    }

    // Known draw: input already at peak 1.0, the output peak equals s exactly.
    Rng probe(123);
    const double s = Rng(123).uniform(0.1, 1.0);
    auto out = augment_rescale(w, probe);
    double peak = 0.0;
    for (double v : out.samples) peak = std::max(peak, std::fabs(v));
    CHECK(peak == s);

    Waveform silent;
    silent.samples.assign(100, 0.0);
    CHECK_THROWS_AS(augment_rescale(silent, rng), NoSignal);
}

TEST_CASE("augmentation peak distribution has the uniform mean") {
    Rng rng(9);
    auto w = sine_wave(330.0, 0.01, 0.7);
    double sum = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        auto out = augment_rescale(w, rng);
        double peak = 0.0;
        for (double v : out.samples) peak = std::max(peak, std::fabs(v));
        sum += peak;
    }
    CHECK(std::fabs(sum / n - 0.55) < 0.01);
}

TEST_CASE("domain stats and normalization invariants") {
    Rng rng(31);
    std::vector<LogMagSpectrogram> corpus;
    for (int i = 0; i < 4; ++i) corpus.push_back(synthetic_spec(20, 30, rng, -2.0, 0.8));
    auto stats = compute_domain_stats(corpus, "piano");
    CHECK(stats.domain == "piano");
    CHECK(stats.mean == doctest::Approx(-2.0).epsilon(0.05));
    CHECK(stats.std_dev == doctest::Approx(0.8).epsilon(0.05));

    // Normalized corpus: mean 0, std 1/3; raw mass near -2 centers near 0.
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    for (const auto& spec : corpus) {
        auto norm = normalize(spec, stats);
        CHECK(norm.normalization == NormalizationState::domain_normalized);
        for (double v : norm.data) {
            sum += v;
            ++count;
        }
        for (double v : norm.data) sq += v * v;

        auto back = denormalize(norm, stats);
        CHECK(back.normalization == NormalizationState::raw);
        for (std::size_t j = 0; j < spec.data.size(); ++j)
            CHECK(std::fabs(back.data[j] - spec.data[j]) < 1e-9);

        CHECK_THROWS_AS(normalize(norm, stats), WrongNormalizationState);
        CHECK_THROWS_AS(denormalize(back, stats), WrongNormalizationState);
    }
    const double mean = sum / static_cast<double>(count);
    const double stdv = std::sqrt(sq / static_cast<double>(count) - mean * mean);
    CHECK(std::fabs(mean) < 1e-9);
    CHECK(stdv == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

    LogMagSpectrogram flat;
    flat.frames = 2;
    flat.bins = 2;
    flat.params = CqtParams{};
    flat.data.assign(4, -2.0);
    std::vector<LogMagSpectrogram> degenerate = {flat};
    CHECK_THROWS_AS(compute_domain_stats(degenerate, "x"), DegenerateStats);
}

TEST_CASE("stats JSON round trip") {
    DomainStats s{"violin", -2.25, 0.77};
    auto text = stats_to_json(s);
    CHECK(text.find("3sigma") != std::string::npos);
    auto back = stats_from_json(text);
    CHECK(back.domain == "violin");
    CHECK(back.mean == doctest::Approx(-2.25).epsilon(1e-12));
    CHECK(back.std_dev == doctest::Approx(0.77).epsilon(1e-12));
    CHECK_THROWS_AS(stats_from_json("{notjson"), CorruptFile);
}

} // TEST_SUITE
