#pragma once

#include "timbre/types.hpp"

#include <string>
#include <variant>

namespace timbre {

// Spectrogram container format ".ttsg".
//
// Layout (all little-endian):
//   magic "TTSG" | u8 version=1 | u8 repr | u16 reserved=0
//   u32 frames | u32 bins | u32 sample_rate | u32 hop
//   f64 f_min | f64 bins_per_octave | f64 gamma   (zero for STFT content)
//   u8 normalization_state
//   payload: frame-major f32 (complex interleaved re,im)
//   u32 CRC32 of payload bytes
//
// repr byte: 0 = stft log-magnitude, 1 = cqt log-magnitude,
//            2 = cqt complex, 3 = stft complex.
//
// STFT window length is recovered from the bin count (window = 2*(bins-1)).
// Values are stored in single precision; loading returns exactly the stored
// values.

using TtsgContent = std::variant<LogMagSpectrogram, ComplexSpectrogram>;

void save_ttsg(const std::string& path, const LogMagSpectrogram& spec);
void save_ttsg(const std::string& path, const ComplexSpectrogram& spec);

TtsgContent load_ttsg(const std::string& path);

// Loaders that require a specific content kind (CorruptFile /
// UnsupportedRepresentation on mismatch).
LogMagSpectrogram load_ttsg_logmag(const std::string& path);
ComplexSpectrogram load_ttsg_complex(const std::string& path);

} // namespace timbre
