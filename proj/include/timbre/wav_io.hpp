#pragma once

#include "timbre/types.hpp"

#include <string>

namespace timbre {

// Strict RIFF PCM16 mono 16 kHz reader; anything else is rejected with a
// message naming the offending property (no resampling in this toolkit).
Waveform read_wav(const std::string& path);

// Writes PCM16 mono. Samples are rounded to the nearest level and clipped to
// the int16 range; read_wav(write_wav(x)) is bit-identical for PCM16 origins.
void write_wav(const std::string& path, const Waveform& wave);

} // namespace timbre
