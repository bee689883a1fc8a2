#include "timbre/ttsg.hpp"

#include "timbre/errors.hpp"
#include "timbre/util.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace timbre {

namespace {

constexpr char kMagic[4] = {'T', 'T', 'S', 'G'};

struct Header {
    std::uint8_t repr = 0;
    std::uint32_t frames = 0;
    std::uint32_t bins = 0;
    std::uint32_t sample_rate = 0;
    std::uint32_t hop = 0;
    double f_min = 0.0;
    double bins_per_octave = 0.0;
    double gamma = 0.0;
    std::uint8_t normalization = 0;
};

void write_header(std::ostream& os, const Header& h) {
    os.write(kMagic, 4);
    write_u8(os, 1);
    write_u8(os, h.repr);
    write_u16(os, 0);
    write_u32(os, h.frames);
    write_u32(os, h.bins);
    write_u32(os, h.sample_rate);
    write_u32(os, h.hop);
    write_f64(os, h.f_min);
    write_f64(os, h.bins_per_octave);
    write_f64(os, h.gamma);
    write_u8(os, h.normalization);
}

Header read_header(std::istream& is) {
    char magic[4];
    read_exact(is, magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw CorruptFile("ttsg: bad magic");
    if (read_u8(is) != 1) throw CorruptFile("ttsg: unsupported version");
    Header h;
    h.repr = read_u8(is);
    if (h.repr > 3) throw CorruptFile("ttsg: unknown repr byte");
    read_u16(is);
    h.frames = read_u32(is);
    h.bins = read_u32(is);
    h.sample_rate = read_u32(is);
    h.hop = read_u32(is);
    h.f_min = read_f64(is);
    h.bins_per_octave = read_f64(is);
    h.gamma = read_f64(is);
    h.normalization = read_u8(is);
    if (h.normalization > 2) throw CorruptFile("ttsg: unknown normalization state");
    if (h.frames == 0 || h.bins == 0) throw CorruptFile("ttsg: empty grid");
    return h;
}

Header header_for(const TransformParams& params, std::size_t frames, std::size_t bins,
                  int sample_rate, bool complex_payload, NormalizationState norm) {
    Header h;
    h.frames = static_cast<std::uint32_t>(frames);
    h.bins = static_cast<std::uint32_t>(bins);
    h.sample_rate = static_cast<std::uint32_t>(sample_rate);
    h.normalization = static_cast<std::uint8_t>(norm);
    if (std::holds_alternative<StftParams>(params)) {
        h.repr = complex_payload ? 3 : 0;
        h.hop = static_cast<std::uint32_t>(std::get<StftParams>(params).hop);
    } else {
        const auto& c = std::get<CqtParams>(params);
        h.repr = complex_payload ? 2 : 1;
        h.hop = static_cast<std::uint32_t>(c.hop);
        h.f_min = c.f_min;
        h.bins_per_octave = static_cast<double>(c.bins_per_octave);
        h.gamma = c.gamma;
    }
    return h;
}

TransformParams params_from(const Header& h) {
    if (h.repr == 0 || h.repr == 3) {
        StftParams p;
        p.n_bins = static_cast<int>(h.bins);
        p.window_len = 2 * (p.n_bins - 1);
        p.hop = static_cast<int>(h.hop);
        return p;
    }
    CqtParams p;
    p.f_min = h.f_min;
    p.bins_per_octave = static_cast<int>(h.bins_per_octave);
    p.n_bins = static_cast<int>(h.bins);
    p.hop = static_cast<int>(h.hop);
    p.gamma = h.gamma;
    p.sample_rate = static_cast<int>(h.sample_rate);
    return p;
}

void write_payload(const std::string& path, const Header& h, const std::vector<float>& payload) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("ttsg: cannot open for writing: " + path);
    write_header(os, h);
    for (float v : payload) write_f32(os, v);
    // Payload bytes are little-endian f32; hash the serialized form.
    std::vector<std::uint8_t> bytes(payload.size() * 4);
    for (std::size_t i = 0; i < payload.size(); ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, &payload[i], 4);
        for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<std::uint8_t>((bits >> (8 * b)) & 0xFF);
    }
    write_u32(os, crc32(bytes.data(), bytes.size()));
    if (!os) throw Error("ttsg: write failed: " + path);
}

std::vector<float> read_payload(std::istream& is, std::size_t count) {
    std::vector<std::uint8_t> bytes(count * 4);
    read_exact(is, bytes.data(), bytes.size());
    std::uint32_t expected = read_u32(is);
    if (crc32(bytes.data(), bytes.size()) != expected) throw CorruptFile("ttsg: payload CRC mismatch");
    std::vector<float> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits = static_cast<std::uint32_t>(bytes[i * 4]) |
                             (static_cast<std::uint32_t>(bytes[i * 4 + 1]) << 8) |
                             (static_cast<std::uint32_t>(bytes[i * 4 + 2]) << 16) |
                             (static_cast<std::uint32_t>(bytes[i * 4 + 3]) << 24);
        std::memcpy(&out[i], &bits, 4);
    }
    return out;
}

} // namespace

void save_ttsg(const std::string& path, const LogMagSpectrogram& spec) {
    Header h = header_for(spec.params, spec.frames, spec.bins, spec.sample_rate,
                          /*complex_payload=*/false, spec.normalization);
    std::vector<float> payload(spec.data.size());
    for (std::size_t i = 0; i < spec.data.size(); ++i) payload[i] = static_cast<float>(spec.data[i]);
    write_payload(path, h, payload);
}

void save_ttsg(const std::string& path, const ComplexSpectrogram& spec) {
    Header h = header_for(spec.params, spec.frames, spec.bins, spec.sample_rate,
                          /*complex_payload=*/true, NormalizationState::raw);
    std::vector<float> payload(spec.data.size() * 2);
    for (std::size_t i = 0; i < spec.data.size(); ++i) {
        payload[2 * i] = static_cast<float>(spec.data[i].real());
        payload[2 * i + 1] = static_cast<float>(spec.data[i].imag());
    }
    write_payload(path, h, payload);
}

TtsgContent load_ttsg(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("ttsg: cannot open: " + path);
    Header h = read_header(is);
    const std::size_t cells = static_cast<std::size_t>(h.frames) * h.bins;
    const bool complex_payload = (h.repr == 2 || h.repr == 3);
    std::vector<float> payload = read_payload(is, complex_payload ? cells * 2 : cells);

    if (complex_payload) {
        ComplexSpectrogram spec;
        spec.frames = h.frames;
        spec.bins = h.bins;
        spec.sample_rate = static_cast<int>(h.sample_rate);
        spec.params = params_from(h);
        spec.data.resize(cells);
        for (std::size_t i = 0; i < cells; ++i)
            spec.data[i] = {static_cast<double>(payload[2 * i]), static_cast<double>(payload[2 * i + 1])};
        return spec;
    }
    LogMagSpectrogram spec;
    spec.frames = h.frames;
    spec.bins = h.bins;
    spec.sample_rate = static_cast<int>(h.sample_rate);
    spec.params = params_from(h);
    spec.normalization = static_cast<NormalizationState>(h.normalization);
    spec.data.assign(payload.begin(), payload.end());
    return spec;
}

LogMagSpectrogram load_ttsg_logmag(const std::string& path) {
    TtsgContent content = load_ttsg(path);
    if (!std::holds_alternative<LogMagSpectrogram>(content))
        throw UnsupportedRepresentation("ttsg: expected a log-magnitude spectrogram: " + path);
    return std::get<LogMagSpectrogram>(std::move(content));
}

ComplexSpectrogram load_ttsg_complex(const std::string& path) {
    TtsgContent content = load_ttsg(path);
    if (!std::holds_alternative<ComplexSpectrogram>(content))
        throw UnsupportedRepresentation("ttsg: expected a complex spectrogram: " + path);
    return std::get<ComplexSpectrogram>(std::move(content));
}

} // namespace timbre
