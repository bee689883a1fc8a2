#include "timbre/gan_objectives.hpp"

#include "timbre/errors.hpp"
#include "timbre/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace timbre {

namespace {

constexpr double kLogClamp = 1e-7;

double mean_log(std::span<const double> values, bool one_minus) {
    double sum = 0.0;
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("adversarial_losses: value outside [0, 1]");
        double p = one_minus ? 1.0 - v : v;
        p = std::clamp(p, kLogClamp, 1.0 - kLogClamp);
        sum += std::log(p);
    }
    return sum / static_cast<double>(values.size());
}

double mean_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("objective: shape mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::fabs(a[i] - b[i]);
    return sum / static_cast<double>(a.size());
}

} // namespace

AdversarialLosses adversarial_losses(std::span<const double> d_real,
                                     std::span<const double> d_fake, bool nonsaturating) {
    if (d_real.empty() || d_fake.empty())
        throw std::invalid_argument("adversarial_losses: empty batch");
    AdversarialLosses out;
    const double log_fake_flipped = mean_log(d_fake, /*one_minus=*/true);
    out.discriminator = -mean_log(d_real, false) - log_fake_flipped;
    out.generator = nonsaturating ? -mean_log(d_fake, false) : log_fake_flipped;
    return out;
}

double cycle_consistency_loss(const Batch& x_batch, const Batch& y_batch, const VectorMap& f,
                              const VectorMap& g) {
    if (x_batch.empty() || y_batch.empty())
        throw std::invalid_argument("cycle_consistency_loss: empty batch");
    double x_term = 0.0;
    for (const auto& x : x_batch) x_term += mean_abs_diff(g.apply(f.apply(x)), x);
    double y_term = 0.0;
    for (const auto& y : y_batch) y_term += mean_abs_diff(f.apply(g.apply(y)), y);
    return x_term / static_cast<double>(x_batch.size()) +
           y_term / static_cast<double>(y_batch.size());
}

double identity_loss(const Batch& x_batch, const Batch& y_batch, const VectorMap& f,
                     const VectorMap& g) {
    if (x_batch.empty() || y_batch.empty())
        throw std::invalid_argument("identity_loss: empty batch");
    double y_term = 0.0;
    for (const auto& y : y_batch) y_term += mean_abs_diff(f.apply(y), y);
    double x_term = 0.0;
    for (const auto& x : x_batch) x_term += mean_abs_diff(g.apply(x), x);
    return y_term / static_cast<double>(y_batch.size()) +
           x_term / static_cast<double>(x_batch.size());
}

double gradient_penalty(const Discriminator& d, const Batch& x_real, const Batch& x_fake,
                        double alpha, std::uint64_t seed) {
    if (x_real.empty() || x_real.size() != x_fake.size())
        throw std::invalid_argument("gradient_penalty: batch size mismatch");
    Rng rng(seed);
    double sum = 0.0;
    std::vector<double> x_hat;
    for (std::size_t i = 0; i < x_real.size(); ++i) {
        const auto& r = x_real[i];
        const auto& f = x_fake[i];
        if (r.size() != f.size())
            throw std::invalid_argument("gradient_penalty: element shape mismatch");
        const double eps = rng.next_double();
        x_hat.resize(r.size());
        for (std::size_t j = 0; j < r.size(); ++j) x_hat[j] = eps * r[j] + (1.0 - eps) * f[j];
        const std::vector<double> grad = d.input_gradient(x_hat);
        if (grad.size() != x_hat.size())
            throw std::invalid_argument("gradient_penalty: gradient shape mismatch");
        double norm_sq = 0.0;
        for (double gv : grad) {
            if (!std::isfinite(gv)) throw NumericFailure("gradient_penalty: non-finite gradient", i);
            norm_sq += gv * gv;
        }
        const double dev = std::sqrt(norm_sq) - 1.0;
        sum += dev * dev;
    }
    return alpha * sum / static_cast<double>(x_real.size());
}

double identity_weight(long long step, const ObjectiveConfig& cfg) {
    if (step < 0) throw std::invalid_argument("identity_weight: negative step");
    if (step >= cfg.total_steps) return 0.0;
    if (step <= cfg.identity_constant_steps) return cfg.identity_weight_base;
    const double span = static_cast<double>(cfg.total_steps - cfg.identity_constant_steps);
    return cfg.identity_weight_base * static_cast<double>(cfg.total_steps - step) / span;
}

double lr_schedule(long long step, const ObjectiveConfig& cfg) {
    if (step < 0) throw std::invalid_argument("lr_schedule: negative step");
    if (step >= cfg.total_steps) return 0.0;
    if (step < cfg.warmup_steps) {
        const double frac = static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
        // Exponential ramp: lr_start at 0, lr_peak at warmup_steps.
        return cfg.lr_start * std::pow(cfg.lr_peak / cfg.lr_start, frac);
    }
    if (step <= cfg.lr_decay_start) return cfg.lr_peak;
    const double span = static_cast<double>(cfg.total_steps - cfg.lr_decay_start);
    return cfg.lr_peak * static_cast<double>(cfg.total_steps - step) / span;
}

double total_objective(const ObjectiveParts& parts, const ObjectiveConfig& cfg, long long step) {
    return parts.adversarial + cfg.cycle_weight * parts.cycle +
           identity_weight(step, cfg) * parts.identity + cfg.gp_alpha * parts.gradient_penalty;
}

} // namespace timbre
