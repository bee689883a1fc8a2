#pragma once

#include <cstdint>

namespace timbre {

struct MuLawParams {
    double mu = 255.0;
    int levels = 256;
};

// Compand and quantize an amplitude in [-1, 1] (values outside saturate).
// code = round_half_up((F(x)+1)/2 * (levels-1)) with
// F(x) = sign(x) * ln(1 + mu*|x|) / ln(1 + mu). Monotone non-decreasing.
int mulaw_encode(double x, const MuLawParams& p = {});

// Inverse companding of the bin center.
double mulaw_decode(int code, const MuLawParams& p = {});

} // namespace timbre
