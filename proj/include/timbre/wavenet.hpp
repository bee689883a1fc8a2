#pragma once

#include "timbre/conditioning.hpp"
#include "timbre/rng.hpp"
#include "timbre/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace timbre {

// Architecture of the conditional synthesizer: an initial causal convolution
// from the scalar sample channel, a stack of dilated causal convolutions with
// gated activations, residual and skip connections, conditioning injected per
// layer through a 1x1 projection, and a two-convolution softmax head over the
// quantization levels.
struct WaveNetConfig {
    int n_layers = 40;
    int dilation_cycle = 10; // dilation of layer k is 2^(k mod dilation_cycle)
    int kernel_size = 3;
    int residual_width = 256;
    int skip_width = 256;
    int gate_width = 512; // must equal 2 * residual_width
    int cond_channels = 336;
    int quant_levels = 256;
    int input_channels = 1;

    int dilation(int layer) const { return 1 << (layer % dilation_cycle); }
    void validate() const;

    bool operator==(const WaveNetConfig&) const = default;
};

// Number of past samples that can influence one output position.
// 1 + (kernel-1) * (1 + sum over layers of the dilation).
long long receptive_field(const WaveNetConfig& cfg);

// Offsets of every named tensor inside the flat parameter vector. The layout
// order is the serialization order of the ".ttwn" format:
//   in_w [kernel][res], in_b [res],
//   per layer: dil_w [kernel][gate][res], dil_b [gate],
//              cond_w [gate][cond], cond_b [gate],
//              res_w [res][res], res_b [res],
//              skip_w [skip][res], skip_b [skip],
//   out1_w [skip][skip], out1_b [skip], out2_w [quant][skip], out2_b [quant].
class WaveNetLayout {
public:
    struct Range {
        std::size_t offset = 0;
        std::size_t count = 0;
    };
    struct Layer {
        Range dil_w, dil_b, cond_w, cond_b, res_w, res_b, skip_w, skip_b;
    };

    explicit WaveNetLayout(const WaveNetConfig& cfg);

    Range in_w, in_b;
    std::vector<Layer> layers;
    Range out1_w, out1_b, out2_w, out2_b;
    std::size_t total = 0;
};

struct WaveNetWeights {
    WaveNetConfig config;
    std::vector<double> params;
    std::vector<double> ema; // shadow copy used for generation; empty if absent
};

// Seeded uniform init scaled by fan-in; biases zero; EMA shadow starts equal
// to the parameters.
WaveNetWeights init_weights(const WaveNetConfig& cfg, std::uint64_t seed);

// Teacher-forced forward pass. Returns T x quant_levels logits, row t
// parameterizing the distribution of sample t given samples < t (strictly
// causal: perturbing wave_in[t] cannot change rows <= t) and conditioning
// row t. Zero left-padding supplies the missing past.
std::vector<double> wavenet_forward(std::span<const double> wave_in,
                                    const ConditioningMatrix& cond, const WaveNetConfig& cfg,
                                    std::span<const double> params);

std::vector<double> softmax(std::span<const double> logits);

// Sum over positions of -log p(target[t]); accumulates d(sum NLL)/d(params)
// into grad (same layout, same length). Exposed for gradient verification.
double wavenet_loss_and_gradient(std::span<const double> wave_in, std::span<const int> targets,
                                 const ConditioningMatrix& cond, const WaveNetConfig& cfg,
                                 std::span<const double> params, std::span<double> grad);

struct TrainConfig {
    double learning_rate = 1e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 4;
    int sample_length = 8196;
    double ema_decay = 0.999;
    double augment_peak_lo = 0.1;
    double augment_peak_hi = 1.0;
    double cond_shift = 2.0;
    std::uint64_t seed = 0;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long long step = 0;
};

struct TrainBatchItem {
    std::vector<double> wave; // raw amplitudes; quantized internally
    ConditioningMatrix cond;  // rows() must equal wave.size()
};

struct TrainStepResult {
    WaveNetWeights weights;
    AdamState opt;
    double mean_nll = 0.0; // nats per sample, measured before the update
};

// One teacher-forced cross-entropy step over the batch: analytic gradients,
// Adam update, EMA shadow refresh. Batch elements are reduced in index order.
TrainStepResult train_step(std::span<const TrainBatchItem> batch, const WaveNetConfig& cfg,
                           WaveNetWeights weights, AdamState opt, const TrainConfig& tc);

// ema <- decay*ema + (1-decay)*w, elementwise.
void ema_update(std::span<double> ema, std::span<const double> w, double decay);

enum class SampleMode : std::uint8_t { sample, greedy };
enum class Direction : std::uint8_t { forward, reverse };

// Draw a quantization code from a logits row: categorical sample via the
// rng's next uniform draw, or the argmax (lowest index wins ties).
int draw_code(std::span<const double> logits, SampleMode mode, Rng& rng);

// Incremental autoregressive evaluator. Holds per-layer ring buffers sized by
// dilation so each position costs O(layers), not O(receptive field). A stream
// is single-threaded; create one per concurrent generation.
class GenerationStream {
public:
    GenerationStream(const WaveNetConfig& cfg, std::span<const double> params,
                     const ConditioningMatrix* cond);

    std::size_t position() const { return pos_; }

    // Logits for the sample at the current position, given everything fed so
    // far. Idempotent until feed() advances the stream.
    const std::vector<double>& next_logits();

    // Record the observed/emitted sample at the current position and advance.
    void feed(double sample);

private:
    void advance_if_needed();

    const WaveNetConfig cfg_;
    std::span<const double> params_;
    const ConditioningMatrix* cond_;
    WaveNetLayout layout_;

    std::size_t pos_ = 0;
    bool advanced_ = false;
    double last_fed_ = 0.0;

    std::vector<double> input_ring_;              // shifted scalar inputs, size kernel
    std::vector<std::vector<double>> layer_rings_; // per stack level, cap rows of residual width
    std::vector<std::size_t> ring_caps_;
    std::vector<std::vector<double>> cond_proj_;  // per layer, cached projection
    std::vector<std::ptrdiff_t> cond_proj_frame_; // frame index the cache holds (-1 = none)
    std::vector<double> skip_row_;
    std::vector<double> logits_;
    std::vector<double> scratch_pre_;
    std::vector<double> scratch_z_;
};

// Emit one sample per conditioning row, starting from the zero initial
// condition. reverse runs the loop over time-reversed conditioning and
// un-reverses the result (weights must have been trained on reversed data).
// Deterministic given (seed, mode, direction).
Waveform generate(const ConditioningMatrix& cond, const WaveNetConfig& cfg,
                  std::span<const double> params, SampleMode mode, Direction direction,
                  std::uint64_t seed, int sample_rate);

// Weights container ".ttwn": magic "TTWN", u8 version=1, eight u32 config
// words (layers, cycle, kernel, residual, skip, gate, cond_channels,
// quant_levels), u8 has_ema, f32 little-endian payload in layout order
// (parameters, then the EMA shadow when present), u32 CRC32 of the payload.
void save_weights(const std::string& path, const WaveNetWeights& w);
WaveNetWeights load_weights(const std::string& path);
// Throws ShapeMismatch when the stored config differs from `expected`.
WaveNetWeights load_weights(const std::string& path, const WaveNetConfig& expected);

} // namespace timbre
