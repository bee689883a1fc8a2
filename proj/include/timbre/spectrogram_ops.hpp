#pragma once

#include "timbre/types.hpp"

#include <vector>

namespace timbre {

// out[t,k] = ln(|spec[t,k]| + floor). Monotone in |spec|.
LogMagSpectrogram log_magnitude(const ComplexSpectrogram& spec, double floor = kMagnitudeFloor);

// Per-bin phase difference between consecutive frames, wrapped to [-pi, pi).
// Frame 0 is all zeros. Pairs with log_magnitude to form rainbowgram data.
std::vector<double> instantaneous_frequency(const ComplexSpectrogram& spec);

// Wrap an angle to [-pi, pi).
double wrap_angle(double x);

} // namespace timbre
