#include "timbre/mulaw.hpp"

#include <cmath>
#include <stdexcept>

namespace timbre {

int mulaw_encode(double x, const MuLawParams& p) {
    if (!std::isfinite(x)) throw std::invalid_argument("mulaw_encode: non-finite input");
    if (x > 1.0) x = 1.0;
    if (x < -1.0) x = -1.0;
    const double f = std::copysign(std::log1p(p.mu * std::fabs(x)) / std::log1p(p.mu), x);
    const double scaled = (f + 1.0) * 0.5 * static_cast<double>(p.levels - 1);
    return static_cast<int>(std::floor(scaled + 0.5));
}

double mulaw_decode(int code, const MuLawParams& p) {
    if (code < 0 || code >= p.levels) throw std::invalid_argument("mulaw_decode: code out of range");
    const double f = 2.0 * static_cast<double>(code) / static_cast<double>(p.levels - 1) - 1.0;
    return std::copysign((std::pow(1.0 + p.mu, std::fabs(f)) - 1.0) / p.mu, f);
}

} // namespace timbre
