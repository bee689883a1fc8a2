#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace timbre {

// CRC-32 (IEEE 802.3, reflected, polynomial 0xEDB88320), init/xorout 0xFFFFFFFF.
std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

// Little-endian primitive readers/writers over iostreams. Readers throw
// timbre::CorruptFile on short reads.
void write_u8(std::ostream& os, std::uint8_t v);
void write_u16(std::ostream& os, std::uint16_t v);
void write_u32(std::ostream& os, std::uint32_t v);
void write_f32(std::ostream& os, float v);
void write_f64(std::ostream& os, double v);

std::uint8_t read_u8(std::istream& is);
std::uint16_t read_u16(std::istream& is);
std::uint32_t read_u32(std::istream& is);
float read_f32(std::istream& is);
double read_f64(std::istream& is);
void read_exact(std::istream& is, void* out, std::size_t len);

} // namespace timbre
