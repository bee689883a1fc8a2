#pragma once

#include "timbre/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace timbre {

// Minimal PNG writer: 8-bit RGB, zlib stream with stored (uncompressed)
// deflate blocks. `rgb` is row-major top-to-bottom, 3 bytes per pixel.
void write_png_rgb(const std::string& path, std::size_t width, std::size_t height,
                   const std::vector<std::uint8_t>& rgb);

// Rainbowgram image data: one pixel per spectrogram cell, width = frames,
// height = bins (bin 0 at the bottom row). Hue encodes instantaneous
// frequency mapped linearly from [-pi, pi) onto the hue circle; value is the
// log magnitude min-max scaled per image; saturation is fixed at 1.
std::vector<std::uint8_t> rainbowgram_rgb(const LogMagSpectrogram& log_mag,
                                          const std::vector<double>& inst_freq);

} // namespace timbre
