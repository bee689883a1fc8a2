#include "timbre/wav_io.hpp"

#include "timbre/errors.hpp"
#include "timbre/util.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace timbre {

namespace {
constexpr int kRequiredRate = 16000;
} // namespace

Waveform read_wav(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("wav: cannot open: " + path);

    char riff[4];
    read_exact(is, riff, 4);
    if (std::memcmp(riff, "RIFF", 4) != 0) throw CorruptFile("wav: missing RIFF header");
    read_u32(is); // overall size, unused
    char wave_tag[4];
    read_exact(is, wave_tag, 4);
    if (std::memcmp(wave_tag, "WAVE", 4) != 0) throw CorruptFile("wav: missing WAVE tag");

    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::vector<std::uint8_t> payload;

    while (is.peek() != std::ifstream::traits_type::eof()) {
        char id[4];
        is.read(id, 4);
        if (is.gcount() != 4) break;
        const std::uint32_t size = read_u32(is);
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (size < 16) throw CorruptFile("wav: fmt chunk too small");
            format = read_u16(is);
            channels = read_u16(is);
            rate = read_u32(is);
            read_u32(is); // byte rate
            read_u16(is); // block align
            bits = read_u16(is);
            is.seekg(size - 16, std::ios::cur);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            payload.resize(size);
            read_exact(is, payload.data(), size);
        } else {
            is.seekg(size + (size & 1), std::ios::cur);
        }
    }
    if (!have_fmt) throw CorruptFile("wav: missing fmt chunk");
    if (format != 1) throw std::invalid_argument("wav: format must be PCM (got code " + std::to_string(format) + ")");
    if (bits != 16) throw std::invalid_argument("wav: bit depth must be 16 (got " + std::to_string(bits) + ")");
    if (channels != 1) throw std::invalid_argument("wav: must be mono (got " + std::to_string(channels) + " channels)");
    if (rate != kRequiredRate)
        throw std::invalid_argument("wav: sample rate must be 16000 (got " + std::to_string(rate) + ")");
    if (payload.empty()) throw CorruptFile("wav: missing data chunk");

    Waveform w;
    w.sample_rate = kRequiredRate;
    w.samples.resize(payload.size() / 2);
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const std::int16_t s = static_cast<std::int16_t>(
            static_cast<std::uint16_t>(payload[2 * i] | (payload[2 * i + 1] << 8)));
        w.samples[i] = static_cast<double>(s) / 32768.0;
    }
    return w;
}

void write_wav(const std::string& path, const Waveform& wave) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("wav: cannot open for writing: " + path);
    const std::uint32_t data_size = static_cast<std::uint32_t>(wave.samples.size() * 2);
    os.write("RIFF", 4);
    write_u32(os, 36 + data_size);
    os.write("WAVE", 4);
    os.write("fmt ", 4);
    write_u32(os, 16);
    write_u16(os, 1); // PCM
    write_u16(os, 1); // mono
    write_u32(os, static_cast<std::uint32_t>(wave.sample_rate));
    write_u32(os, static_cast<std::uint32_t>(wave.sample_rate * 2));
    write_u16(os, 2);  // block align
    write_u16(os, 16); // bits
    os.write("data", 4);
    write_u32(os, data_size);
    for (double v : wave.samples) {
        long s = std::lround(v * 32768.0);
        if (s > 32767) s = 32767;
        if (s < -32768) s = -32768;
        write_u16(os, static_cast<std::uint16_t>(static_cast<std::int16_t>(s)));
    }
    if (!os) throw Error("wav: write failed: " + path);
}

} // namespace timbre
