#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace timbre {

// Minimal evaluation contracts for the objective calculus; the concrete
// networks live elsewhere. Maps take and return flat value vectors.
class VectorMap {
public:
    virtual ~VectorMap() = default;
    virtual std::vector<double> apply(std::span<const double> x) const = 0;
};

class Discriminator {
public:
    virtual ~Discriminator() = default;
    virtual double value(std::span<const double> x) const = 0;
    virtual std::vector<double> input_gradient(std::span<const double> x) const = 0;
};

using Batch = std::vector<std::vector<double>>;

// Loss weights and schedule breakpoints.
struct ObjectiveConfig {
    double cycle_weight = 10.0;
    double identity_weight_base = 5.0;
    double gp_alpha = 10.0;
    long long identity_constant_steps = 100000;
    long long total_steps = 1500000;
    long long warmup_steps = 2500;
    double lr_peak = 1e-4;
    double lr_start = 1e-6;
    long long lr_decay_start = 100000;
};

struct AdversarialLosses {
    double discriminator = 0.0;
    double generator = 0.0;
};

// Two-player objective over discriminator probabilities (inputs in [0, 1],
// clamped to [1e-7, 1-1e-7] for log safety):
//   discriminator loss = -mean(log d_real) - mean(log(1 - d_fake))
//   generator loss     =  mean(log(1 - d_fake))      (saturating form)
// With nonsaturating set, the generator minimizes -mean(log d_fake) instead.
AdversarialLosses adversarial_losses(std::span<const double> d_real,
                                     std::span<const double> d_fake,
                                     bool nonsaturating = false);

// mean-abs(G(F(x)) - x) averaged over the x batch, plus the mirrored y term.
double cycle_consistency_loss(const Batch& x_batch, const Batch& y_batch, const VectorMap& f,
                              const VectorMap& g);

// Each generator applied to its target domain and compared against the input:
// mean-abs(F(y) - y) plus mean-abs(G(x) - x).
double identity_loss(const Batch& x_batch, const Batch& y_batch, const VectorMap& f,
                     const VectorMap& g);

// alpha * mean over the batch of (||grad D(x_hat)||_2 - 1)^2 where x_hat is a
// per-element convex combination eps*x_real + (1-eps)*x_fake, eps ~ U(0,1)
// drawn once per batch element from the seed.
double gradient_penalty(const Discriminator& d, const Batch& x_real, const Batch& x_fake,
                        double alpha, std::uint64_t seed);

// Identity-loss weight: constant at identity_weight_base through
// identity_constant_steps, then linear to zero at total_steps. Steps beyond
// total_steps clamp to zero.
double identity_weight(long long step, const ObjectiveConfig& cfg = {});

// Learning rate: exponential ramp lr_start -> lr_peak over warmup_steps,
// constant until lr_decay_start, then linear to zero at total_steps.
double lr_schedule(long long step, const ObjectiveConfig& cfg = {});

// Unweighted loss components; weights are applied by total_objective.
struct ObjectiveParts {
    double adversarial = 0.0;
    double cycle = 0.0;
    double identity = 0.0;
    double gradient_penalty = 0.0;
};

double total_objective(const ObjectiveParts& parts, const ObjectiveConfig& cfg, long long step);

} // namespace timbre
