#include "timbre/png_io.hpp"

#include "timbre/errors.hpp"
#include "timbre/util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace timbre {

namespace {

constexpr double kPi = 3.14159265358979323846;

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void write_chunk(std::ofstream& os, const char type[4], const std::vector<std::uint8_t>& data) {
    std::vector<std::uint8_t> head;
    put_be32(head, static_cast<std::uint32_t>(data.size()));
    os.write(reinterpret_cast<const char*>(head.data()), 4);
    os.write(type, 4);
    if (!data.empty()) os.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    std::vector<std::uint8_t> crc_buf(data.size() + 4);
    std::copy_n(type, 4, crc_buf.begin());
    std::copy(data.begin(), data.end(), crc_buf.begin() + 4);
    std::vector<std::uint8_t> crc;
    put_be32(crc, crc32(crc_buf.data(), crc_buf.size()));
    os.write(reinterpret_cast<const char*>(crc.data()), 4);
}

std::uint32_t adler32(const std::vector<std::uint8_t>& data) {
    std::uint32_t a = 1, b = 0;
    for (std::uint8_t byte : data) {
        a = (a + byte) % 65521;
        b = (b + a) % 65521;
    }
    return (b << 16) | a;
}

// zlib stream made of stored (uncompressed) deflate blocks.
std::vector<std::uint8_t> zlib_stored(const std::vector<std::uint8_t>& raw) {
    std::vector<std::uint8_t> out;
    out.push_back(0x78);
    out.push_back(0x01);
    std::size_t pos = 0;
    do {
        const std::size_t n = std::min<std::size_t>(raw.size() - pos, 65535);
        const bool final_block = (pos + n == raw.size());
        out.push_back(final_block ? 1 : 0);
        out.push_back(static_cast<std::uint8_t>(n & 0xFF));
        out.push_back(static_cast<std::uint8_t>((n >> 8) & 0xFF));
        out.push_back(static_cast<std::uint8_t>(~n & 0xFF));
        out.push_back(static_cast<std::uint8_t>((~n >> 8) & 0xFF));
        out.insert(out.end(), raw.begin() + static_cast<std::ptrdiff_t>(pos),
                   raw.begin() + static_cast<std::ptrdiff_t>(pos + n));
        pos += n;
    } while (pos < raw.size());
    put_be32(out, adler32(raw));
    return out;
}

struct Rgb {
    std::uint8_t r, g, b;
};

Rgb hsv_to_rgb(double h, double s, double v) {
    h = std::fmod(h, 360.0);
    if (h < 0) h += 360.0;
    const double c = v * s;
    const double x = c * (1.0 - std::fabs(std::fmod(h / 60.0, 2.0) - 1.0));
    const double m = v - c;
    double r = 0, g = 0, b = 0;
    if (h < 60) { r = c; g = x; }
    else if (h < 120) { r = x; g = c; }
    else if (h < 180) { g = c; b = x; }
    else if (h < 240) { g = x; b = c; }
    else if (h < 300) { r = x; b = c; }
    else { r = c; b = x; }
    auto to_byte = [m](double q) {
        return static_cast<std::uint8_t>(std::lround(std::clamp((q + m) * 255.0, 0.0, 255.0)));
    };
    return {to_byte(r), to_byte(g), to_byte(b)};
}

} // namespace

void write_png_rgb(const std::string& path, std::size_t width, std::size_t height,
                   const std::vector<std::uint8_t>& rgb) {
    if (width == 0 || height == 0) throw std::invalid_argument("png: empty image");
    if (rgb.size() != width * height * 3) throw std::invalid_argument("png: pixel buffer size mismatch");

    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("png: cannot open for writing: " + path);
    static const std::uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    os.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<std::uint8_t> ihdr;
    put_be32(ihdr, static_cast<std::uint32_t>(width));
    put_be32(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8); // bit depth
    ihdr.push_back(2); // truecolor
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    write_chunk(os, "IHDR", ihdr);

    // Scanlines with filter byte 0.
    std::vector<std::uint8_t> raw;
    raw.reserve(height * (width * 3 + 1));
    for (std::size_t y = 0; y < height; ++y) {
        raw.push_back(0);
        const std::uint8_t* row = rgb.data() + y * width * 3;
        raw.insert(raw.end(), row, row + width * 3);
    }
    write_chunk(os, "IDAT", zlib_stored(raw));
    write_chunk(os, "IEND", {});
    if (!os) throw Error("png: write failed: " + path);
}

std::vector<std::uint8_t> rainbowgram_rgb(const LogMagSpectrogram& log_mag,
                                          const std::vector<double>& inst_freq) {
    if (inst_freq.size() != log_mag.data.size())
        throw std::invalid_argument("rainbowgram: grid size mismatch");
    double lo = log_mag.data[0], hi = log_mag.data[0];
    for (double v : log_mag.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = (hi > lo) ? (hi - lo) : 1.0;

    const std::size_t width = log_mag.frames;
    const std::size_t height = log_mag.bins;
    std::vector<std::uint8_t> rgb(width * height * 3);
    for (std::size_t t = 0; t < width; ++t) {
        for (std::size_t k = 0; k < height; ++k) {
            const std::size_t cell = t * height + k;
            const double hue = (inst_freq[cell] + kPi) / (2.0 * kPi) * 360.0;
            const double value = (log_mag.data[cell] - lo) / span;
            const Rgb c = hsv_to_rgb(hue, 1.0, value);
            // bin 0 at the bottom row
            const std::size_t y = height - 1 - k;
            const std::size_t px = (y * width + t) * 3;
            rgb[px] = c.r;
            rgb[px + 1] = c.g;
            rgb[px + 2] = c.b;
        }
    }
    return rgb;
}

} // namespace timbre
