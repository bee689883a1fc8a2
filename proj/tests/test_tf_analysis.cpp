#include "timbre/cqt.hpp"
#include "timbre/errors.hpp"
#include "timbre/musical_ops.hpp"
#include "timbre/rng.hpp"
#include "timbre/spectrogram_ops.hpp"
#include "timbre/stft.hpp"
#include "timbre/ttsg.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>

using namespace timbre;
using namespace timbre::test;

namespace {

// Direct O(N^2) DFT, the reference for the FFT-backed paths.
std::vector<std::complex<double>> dft_oracle(const std::vector<std::complex<double>>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t j = 0; j < n; ++j) {
            const double a = -kTwoPi * static_cast<double>(k * j % n) / static_cast<double>(n);
            acc += x[j] * std::complex<double>(std::cos(a), std::sin(a));
        }
        out[k] = acc;
    }
    return out;
}

} // namespace

TEST_SUITE("tf-analysis") {

TEST_CASE("hann window quarter periods") {
    const auto w = hann_window(4);
    REQUIRE(w.size() == 4);
    CHECK(w[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(w[2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w[3] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("hann window midpoint and sum at the default length") {
    const auto w = hann_window(672);
    CHECK(w[336] == doctest::Approx(1.0).epsilon(1e-12));
    double sum = 0.0;
    for (double v : w) sum += v; // direct summation oracle
    CHECK(std::fabs(sum - 336.0) < 1e-9);
    CHECK_THROWS_AS(hann_window(1), std::invalid_argument);
    for (double v : w) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("fft matches the direct DFT oracle") {
    Rng rng(7);
    for (std::size_t n : {672u, 1024u, 337u}) {
        std::vector<std::complex<double>> x(n);
        for (auto& v : x) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        auto expected = dft_oracle(x);
        auto got = x;
        FftPlan plan(n);
        plan.forward(got.data());
        double max_err = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            max_err = std::max(max_err, std::abs(got[k] - expected[k]));
            scale = std::max(scale, std::abs(expected[k]));
        }
        CHECK(max_err / scale < 1e-10);
        plan.inverse(got.data());
        for (std::size_t k = 0; k < n; ++k)
            CHECK(std::abs(got[k] - x[k]) < 1e-10);
    }
}

TEST_CASE("stft shape and zero input") {
    StftParams params;
    Waveform w;
    w.samples.assign(64000, 0.0);
    auto spec = stft(w, params);
    CHECK(spec.frames == 250);
    CHECK(spec.bins == 337);
    for (const auto& z : spec.data) CHECK(std::abs(z) == 0.0);

    Waveform empty;
    CHECK_THROWS_AS(stft(empty, params), std::invalid_argument);
}

TEST_CASE("stft bin count invariant on defaults") {
    StftParams params;
    CHECK(params.n_bins == params.window_len / 2 + 1);
    StftParams bad = params;
    bad.n_bins = 300;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("sine at an exact bin center peaks at that bin") {
    // Bin 42 of a 672-point window at 16 kHz sits at exactly 1000 Hz.
    const int bin = 42;
    const double freq = bin * 16000.0 / 672.0;
    auto w = sine_wave(freq, 1.0, 0.8);
    auto spec = stft(w, StftParams{});
    const std::size_t mid = spec.frames / 2;
    CHECK(argmax_bin(spec, mid) == static_cast<std::size_t>(bin));

    // Direct DFT oracle on one windowed frame.
    const auto win = hann_window(672);
    std::vector<std::complex<double>> frame(672);
    const long long start = static_cast<long long>(mid) * 256 - 336;
    for (int n = 0; n < 672; ++n)
        frame[static_cast<std::size_t>(n)] = win[static_cast<std::size_t>(n)] *
                                             w.samples[static_cast<std::size_t>(start + n)];
    const auto ref = dft_oracle(frame);
    for (int k = 0; k < 337; ++k)
        CHECK(std::abs(ref[static_cast<std::size_t>(k)] - spec.at(mid, static_cast<std::size_t>(k))) <
              1e-8 * (1.0 + std::abs(ref[static_cast<std::size_t>(k)])));
}

TEST_CASE("istft_ls inverts stft away from the edges") {
    Rng rng(13);
    Waveform w;
    w.samples.resize(16000);
    for (auto& v : w.samples) v = rng.uniform(-1, 1);
    StftParams params;
    auto spec = stft(w, params);
    auto rec = istft_ls(spec);
    // Output length is frames*hop: the input rounded up to a hop multiple.
    REQUIRE(rec.samples.size() == spec.frames * static_cast<std::size_t>(params.hop));
    REQUIRE(rec.samples.size() >= w.samples.size());
    double max_err = 0.0;
    for (std::size_t i = static_cast<std::size_t>(params.window_len);
         i + static_cast<std::size_t>(params.window_len) < w.samples.size(); ++i)
        max_err = std::max(max_err, std::fabs(rec.samples[i] - w.samples[i]));
    CHECK(max_err < 1e-6);
}

TEST_CASE("istft_ls zero and scaling behavior") {
    StftParams params;
    ComplexSpectrogram zero;
    zero.frames = 10;
    zero.bins = 337;
    zero.data.assign(10 * 337, {0.0, 0.0});
    zero.params = params;
    auto w = istft_ls(zero);
    for (double v : w.samples) CHECK(v == 0.0);

    Rng rng(5);
    Waveform src;
    src.samples.resize(4096);
    for (auto& v : src.samples) v = rng.uniform(-1, 1);
    auto spec = stft(src, params);
    auto base = istft_ls(spec);
    for (auto& z : spec.data) z *= 2.5;
    auto scaled = istft_ls(spec);
    for (std::size_t i = 0; i < base.samples.size(); ++i)
        CHECK(scaled.samples[i] == doctest::Approx(2.5 * base.samples[i]).epsilon(1e-12));

    ComplexSpectrogram cqt_tagged = zero;
    cqt_tagged.params = CqtParams{};
    cqt_tagged.bins = 336;
    cqt_tagged.data.resize(10 * 336);
    CHECK_THROWS_AS(istft_ls(cqt_tagged), UnsupportedRepresentation);
}

TEST_CASE("cqt bin frequencies and q factor") {
    CqtParams params;
    CHECK(params.bin_frequency(48) == doctest::Approx(65.40).epsilon(1e-9));
    CHECK(params.bin_frequency(0) == doctest::Approx(32.70).epsilon(1e-12));

    CqtParams unit = params;
    unit.gamma = 1.0;
    const double oracle = 1.0 / (std::pow(2.0, 1.0 / 48.0) - 1.0);
    CHECK(std::fabs(unit.q_factor() - oracle) / oracle < 1e-6);
    CHECK(unit.q_factor() == doctest::Approx(68.75).epsilon(1e-3));

    CqtParams bad = params;
    bad.n_bins = 480; // top bin would pass Nyquist
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("cqt of A4 peaks at bin 180 and matches the correlation oracle") {
    auto w = sine_wave(440.0, 2.0, 0.7);
    CqtParams params;
    CqtAnalyzer analyzer(params);
    auto spec = analyzer.transform(w);
    CHECK(spec.frames == 125);
    CHECK(spec.bins == 336);
    const std::size_t mid = spec.frames / 2;
    CHECK(argmax_bin(spec, mid) == 180); // round(48*log2(440/32.70)) = 180

    // Direct per-bin correlation oracle for a few cells: symmetric-Hann
    // windowed exponential spanning Q cycles, normalized by 2/sum(w).
    const double q = params.q_factor();
    for (int k : {60, 180, 300}) {
        const double fk = params.f_min * std::pow(2.0, k / 48.0);
        const int half = static_cast<int>(std::floor(q * params.sample_rate / (2.0 * fk)));
        const int len = 2 * half + 1;
        const long long center = static_cast<long long>(mid) * params.hop;
        std::complex<double> acc{0.0, 0.0};
        double wsum = 0.0;
        for (int i = 0; i < len; ++i) {
            const double win = 0.5 * (1.0 - std::cos(kTwoPi * i / (len - 1)));
            wsum += win;
            const long long idx = center + i - half;
            if (idx < 0 || idx >= static_cast<long long>(w.samples.size())) continue;
            const double angle = -kTwoPi * fk * (i - half) / params.sample_rate;
            acc += win * std::complex<double>(std::cos(angle), std::sin(angle)) *
                   w.samples[static_cast<std::size_t>(idx)];
        }
        acc *= 2.0 / wsum;
        const auto got = spec.at(mid, static_cast<std::size_t>(k));
        CHECK(std::abs(got - acc) / std::max(std::abs(acc), 1e-9) < 1e-5);
    }

    // Amplitude normalization: unit sine at a bin center gives magnitude ~1.
    CHECK(std::abs(spec.at(mid, 180)) == doctest::Approx(0.7).epsilon(0.02));
}

TEST_CASE("cqt shape for a 4 second clip") {
    auto w = sine_wave(220.0, 4.0, 0.5);
    auto spec = cqt(w, CqtParams{});
    CHECK(spec.frames == 250);
    CHECK(spec.bins == 336);
}

TEST_CASE("log magnitude values and monotonicity") {
    ComplexSpectrogram spec;
    spec.frames = 1;
    spec.bins = 3;
    spec.params = CqtParams{};
    spec.data = {{1.0, 0.0}, {0.0, 0.0}, {0.5, 0.0}};
    auto lm = log_magnitude(spec);
    CHECK(std::fabs(lm.data[0] - 1e-5) < 1e-9);
    CHECK(lm.data[1] == doctest::Approx(-11.512925464970229).epsilon(1e-12));

    ComplexSpectrogram bigger = spec;
    for (auto& z : bigger.data) z += std::complex<double>(0.25, 0.0);
    auto lm2 = log_magnitude(bigger);
    for (std::size_t i = 0; i < lm.data.size(); ++i) CHECK(lm2.data[i] >= lm.data[i]);

    CHECK_THROWS_AS(log_magnitude(spec, 0.0), std::invalid_argument);
}

TEST_CASE("instantaneous frequency basics") {
    ComplexSpectrogram spec;
    spec.frames = 4;
    spec.bins = 2;
    spec.params = CqtParams{};
    spec.data.assign(8, {0.3, 0.4}); // constant phase
    auto ifreq = instantaneous_frequency(spec);
    for (double v : ifreq) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));

    ComplexSpectrogram single;
    single.frames = 1;
    single.bins = 2;
    single.params = CqtParams{};
    single.data.assign(2, {1.0, 0.0});
    CHECK_THROWS_AS(instantaneous_frequency(single), std::invalid_argument);
}

TEST_CASE("instantaneous frequency of a pure tone matches the analytic phase advance") {
    auto w = sine_wave(440.0, 1.0, 0.6);
    CqtParams params;
    auto spec = cqt(w, params);
    auto ifreq = instantaneous_frequency(spec);
    // Oracle: 2*pi*f*hop/sr modulo 2*pi, wrapped to [-pi, pi).
    const double advance = wrap_angle(kTwoPi * 440.0 * params.hop / params.sample_rate);
    const std::size_t bin = 180;
    for (std::size_t t = 10; t + 10 < spec.frames; ++t) {
        const double v = ifreq[t * spec.bins + bin];
        CHECK(std::fabs(v - advance) < 1e-3);
        CHECK(v >= -3.14159266);
        CHECK(v < 3.14159266);
    }
}

TEST_CASE("white noise energy scales linearly through the stft") {
    Rng rng(99);
    Waveform base;
    base.samples.resize(8192);
    for (auto& v : base.samples) v = rng.uniform(-1, 1);
    std::vector<double> in_energy, out_energy;
    for (double amp : {0.2, 0.5, 1.0, 1.5, 2.0}) {
        Waveform w = base;
        for (auto& v : w.samples) v *= amp;
        double ein = 0.0;
        for (double v : w.samples) ein += v * v;
        auto spec = stft(w, StftParams{});
        double eout = 0.0;
        for (const auto& z : spec.data) eout += std::norm(z);
        in_energy.push_back(ein);
        out_energy.push_back(eout);
    }
    // Least-squares slope fit through the origin-ish; report R^2.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = 5.0;
    for (std::size_t i = 0; i < 5; ++i) {
        sx += in_energy[i];
        sy += out_energy[i];
        sxx += in_energy[i] * in_energy[i];
        sxy += in_energy[i] * out_energy[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < 5; ++i) {
        const double pred = slope * in_energy[i] + intercept;
        ss_res += (out_energy[i] - pred) * (out_energy[i] - pred);
        ss_tot += (out_energy[i] - sy / n) * (out_energy[i] - sy / n);
    }
    CHECK(1.0 - ss_res / ss_tot > 0.999);
}

TEST_CASE("forward transforms are pure") {
    auto w = sine_wave(330.0, 0.5, 0.4);
    auto s1 = stft(w, StftParams{});
    auto s2 = stft(w, StftParams{});
    CHECK(s1.data == s2.data);
    auto c1 = cqt(w, CqtParams{});
    auto c2 = cqt(w, CqtParams{});
    CHECK(c1.data == c2.data);
}

TEST_CASE("pitch equivariance of the log-CQT under transposition") {
    // Harmonic tone; transposing by s semitones then translating the log-CQT
    // down by 4s bins should nearly reproduce the original. Tones are long
    // enough that the low-bin kernels are not dominated by edge padding.
    const double f0 = 220.0;
    CqtParams params;
    CqtAnalyzer analyzer(params);
    auto base_lm = log_magnitude(analyzer.transform(harmonic_tone(f0, 3.0)));
    for (int s : {-12, 12}) {
        const double f_shifted = f0 * std::pow(2.0, s / 12.0);
        auto shifted_lm = log_magnitude(analyzer.transform(harmonic_tone(f_shifted, 3.0)));
        auto aligned = pitch_shift_cqt(shifted_lm, -s);
        const std::size_t drop = static_cast<std::size_t>(4 * std::abs(s));
        std::vector<double> a, b;
        for (std::size_t t = 0; t < base_lm.frames; ++t)
            for (std::size_t k = 0; k < base_lm.bins - drop; ++k) {
                const std::size_t kk = (s >= 0) ? k : k + drop;
                a.push_back(base_lm.at(t, kk));
                b.push_back(aligned.at(t, kk));
            }
        CHECK(pearson(a, b) >= 0.9);
    }
}

TEST_CASE("ttsg round trip for log-magnitude and complex content") {
    auto w = sine_wave(440.0, 0.25, 0.5);
    auto spec = cqt(w, CqtParams{});
    auto lm = log_magnitude(spec);

    const std::string lm_path = "test_lm.ttsg";
    save_ttsg(lm_path, lm);
    auto loaded = load_ttsg_logmag(lm_path);
    CHECK(loaded.frames == lm.frames);
    CHECK(loaded.bins == lm.bins);
    CHECK(loaded.repr() == Repr::cqt);
    CHECK(loaded.normalization == NormalizationState::raw);
    const auto& cp = std::get<CqtParams>(loaded.params);
    CHECK(cp.f_min == doctest::Approx(32.70));
    CHECK(cp.bins_per_octave == 48);
    CHECK(cp.hop == 256);
    for (std::size_t i = 0; i < lm.data.size(); ++i)
        CHECK(loaded.data[i] == static_cast<double>(static_cast<float>(lm.data[i])));

    // Save-load-save is byte stable.
    const std::string lm2_path = "test_lm2.ttsg";
    save_ttsg(lm2_path, loaded);
    std::ifstream f1(lm_path, std::ios::binary), f2(lm2_path, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);

    const std::string cx_path = "test_cx.ttsg";
    save_ttsg(cx_path, spec);
    auto cx = load_ttsg_complex(cx_path);
    CHECK(cx.frames == spec.frames);
    CHECK(cx.at(3, 180).real() ==
          static_cast<double>(static_cast<float>(spec.at(3, 180).real())));
    CHECK_THROWS_AS(load_ttsg_logmag(cx_path), UnsupportedRepresentation);

    std::remove(lm_path.c_str());
    std::remove(lm2_path.c_str());
    std::remove(cx_path.c_str());
}

TEST_CASE("ttsg rejects corruption") {
    auto w = sine_wave(440.0, 0.1, 0.5);
    auto lm = log_magnitude(stft(w, StftParams{}));
    const std::string path = "test_corrupt.ttsg";
    save_ttsg(path, lm);

    // Flip one payload byte.
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(64);
    char c;
    f.seekg(64);
    f.get(c);
    f.seekp(64);
    f.put(static_cast<char>(c ^ 0x5A));
    f.close();
    CHECK_THROWS_AS(load_ttsg(path), CorruptFile);

    // Truncation.
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    out.close();
    CHECK_THROWS_AS(load_ttsg(path), CorruptFile);
    std::remove(path.c_str());
}

} // TEST_SUITE
