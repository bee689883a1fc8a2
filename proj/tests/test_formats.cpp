#include "timbre/cqt.hpp"
#include "timbre/errors.hpp"
#include "timbre/png_io.hpp"
#include "timbre/rng.hpp"
#include "timbre/spectrogram_ops.hpp"
#include "timbre/wav_io.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>

using namespace timbre;
using namespace timbre::test;

TEST_SUITE("formats") {

TEST_CASE("wav round trip is bit identical for PCM16 content") {
    Rng rng(3);
    Waveform w;
    w.sample_rate = 16000;
    w.samples.resize(5000);
    for (auto& v : w.samples) v = rng.uniform(-0.99, 0.99);

    const std::string a = "test_a.wav", b = "test_b.wav";
    write_wav(a, w);
    auto r1 = read_wav(a);
    write_wav(b, r1);
    std::ifstream f1(a, std::ios::binary), f2(b, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
    auto r2 = read_wav(b);
    CHECK(r1.samples == r2.samples);
    std::remove(a.c_str());
    std::remove(b.c_str());
}

TEST_CASE("wav reader rejects non-conforming files by naming the property") {
    const std::string path = "test_bad.wav";
    {
        Waveform w;
        w.sample_rate = 22050; // wrong rate
        w.samples.assign(100, 0.0);
        write_wav(path, w);
    }
    CHECK_THROWS_WITH_AS(read_wav(path), doctest::Contains("sample rate"), std::invalid_argument);
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_wav("does_not_exist.wav"), Error);
}

TEST_CASE("rainbowgram image has one pixel per cell") {
    auto spec = cqt(sine_wave(440.0, 0.3, 0.6), CqtParams{});
    auto lm = log_magnitude(spec);
    auto ifreq = instantaneous_frequency(spec);
    auto rgb = rainbowgram_rgb(lm, ifreq);
    CHECK(rgb.size() == lm.frames * lm.bins * 3);

    const std::string path = "test_rainbow.png";
    write_png_rgb(path, lm.frames, lm.bins, rgb);

    // Parse the IHDR dimensions back out.
    std::ifstream is(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    REQUIRE(bytes.size() > 33);
    CHECK(static_cast<unsigned char>(bytes[0]) == 137);
    CHECK(bytes.substr(1, 3) == "PNG");
    auto be32 = [&bytes](std::size_t off) {
        return (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off])) << 24) |
               (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 1])) << 16) |
               (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 2])) << 8) |
               static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 3]));
    };
    CHECK(be32(16) == lm.frames); // width
    CHECK(be32(20) == lm.bins);   // height
    std::remove(path.c_str());
}

} // TEST_SUITE
