#include "timbre/wavenet.hpp"

#include "timbre/errors.hpp"
#include "timbre/mulaw.hpp"
#include "timbre/rng.hpp"
#include "timbre/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace timbre {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_finite(std::span<const double> params) {
    for (double v : params)
        if (!std::isfinite(v)) throw InvalidWeights("wavenet: non-finite weight");
}

} // namespace

void WaveNetConfig::validate() const {
    if (n_layers < 1) throw std::invalid_argument("wavenet: n_layers must be >= 1");
    if (dilation_cycle < 1) throw std::invalid_argument("wavenet: dilation_cycle must be >= 1");
    if (kernel_size < 1) throw std::invalid_argument("wavenet: kernel_size must be >= 1");
    if (residual_width < 1 || skip_width < 1 || cond_channels < 1)
        throw std::invalid_argument("wavenet: widths must be positive");
    if (gate_width != 2 * residual_width)
        throw std::invalid_argument("wavenet: gate_width must equal 2*residual_width");
    if (quant_levels != 256) throw std::invalid_argument("wavenet: quant_levels must be 256");
    if (input_channels != 1) throw std::invalid_argument("wavenet: input_channels must be 1");
}

long long receptive_field(const WaveNetConfig& cfg) {
    long long rf = 1 + static_cast<long long>(cfg.kernel_size - 1);
    for (int l = 0; l < cfg.n_layers; ++l)
        rf += static_cast<long long>(cfg.kernel_size - 1) * cfg.dilation(l);
    return rf;
}

WaveNetLayout::WaveNetLayout(const WaveNetConfig& cfg) {
    cfg.validate();
    const std::size_t K = static_cast<std::size_t>(cfg.kernel_size);
    const std::size_t R = static_cast<std::size_t>(cfg.residual_width);
    const std::size_t S = static_cast<std::size_t>(cfg.skip_width);
    const std::size_t G = static_cast<std::size_t>(cfg.gate_width);
    const std::size_t C = static_cast<std::size_t>(cfg.cond_channels);
    const std::size_t Q = static_cast<std::size_t>(cfg.quant_levels);

    std::size_t off = 0;
    auto take = [&off](std::size_t count) {
        Range r{off, count};
        off += count;
        return r;
    };

    in_w = take(K * R);
    in_b = take(R);
    layers.resize(static_cast<std::size_t>(cfg.n_layers));
    for (auto& layer : layers) {
        layer.dil_w = take(K * G * R);
        layer.dil_b = take(G);
        layer.cond_w = take(G * C);
        layer.cond_b = take(G);
        layer.res_w = take(R * R);
        layer.res_b = take(R);
        layer.skip_w = take(S * R);
        layer.skip_b = take(S);
    }
    out1_w = take(S * S);
    out1_b = take(S);
    out2_w = take(Q * S);
    out2_b = take(Q);
    total = off;
}

WaveNetWeights init_weights(const WaveNetConfig& cfg, std::uint64_t seed) {
    WaveNetLayout layout(cfg);
    WaveNetWeights w;
    w.config = cfg;
    w.params.assign(layout.total, 0.0);
    Rng rng(seed);
    auto fill = [&](const WaveNetLayout::Range& r, double scale, std::size_t fan_in) {
        const double a = scale / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < r.count; ++i) w.params[r.offset + i] = rng.uniform(-a, a);
    };
    const std::size_t K = static_cast<std::size_t>(cfg.kernel_size);
    const std::size_t R = static_cast<std::size_t>(cfg.residual_width);
    const std::size_t S = static_cast<std::size_t>(cfg.skip_width);
    const std::size_t C = static_cast<std::size_t>(cfg.cond_channels);
    // The scalar input projection runs hot so sample-to-sample differences
    // land in the gates' responsive range; conditioning projections start
    // near silent because log-magnitude conditioning carries values of
    // order 10 and would otherwise saturate every gate at step one.
    fill(layout.in_w, 6.0, K);
    for (const auto& layer : layout.layers) {
        fill(layer.dil_w, 1.0, K * R);
        fill(layer.cond_w, 0.025, C);
        fill(layer.res_w, 1.0, R);
        fill(layer.skip_w, 1.0, R);
    }
    fill(layout.out1_w, 1.0, S);
    fill(layout.out2_w, 1.0, S);
    w.ema = w.params;
    return w;
}

namespace {

// Activations retained for the backward pass.
struct ForwardTrace {
    std::vector<double> x_shift;                // T
    std::vector<std::vector<double>> stream;    // per layer, its input, T*R
    std::vector<std::vector<double>> za, zb;    // per layer, T*R
    std::vector<double> skip_acc;               // T*S, pre-relu
    std::vector<double> o1;                     // T*S, pre-relu
};

std::vector<double> forward_impl(std::span<const double> wave_in, const ConditioningMatrix& cond,
                                 const WaveNetConfig& cfg, std::span<const double> params,
                                 const WaveNetLayout& layout, ForwardTrace* trace) {
    const std::size_t T = wave_in.size();
    if (T == 0) throw std::invalid_argument("wavenet: empty input");
    if (cond.rows() < T) throw std::invalid_argument("wavenet: conditioning shorter than input");
    if (cond.cols() != static_cast<std::size_t>(cfg.cond_channels))
        throw std::invalid_argument("wavenet: conditioning channel mismatch");
    if (params.size() != layout.total) throw ShapeMismatch("wavenet: parameter count mismatch");

    const int K = cfg.kernel_size;
    const std::size_t R = static_cast<std::size_t>(cfg.residual_width);
    const std::size_t S = static_cast<std::size_t>(cfg.skip_width);
    const std::size_t G = static_cast<std::size_t>(cfg.gate_width);
    const std::size_t C = static_cast<std::size_t>(cfg.cond_channels);
    const std::size_t Q = static_cast<std::size_t>(cfg.quant_levels);
    const double* p = params.data();

    // The stack consumes the one-step-shifted signal so that row t of the
    // output never depends on wave_in[t].
    std::vector<double> xs(T, 0.0);
    for (std::size_t t = 1; t < T; ++t) xs[t] = wave_in[t - 1];

    std::vector<double> cur(T * R);
    {
        const double* in_w = p + layout.in_w.offset;
        const double* in_b = p + layout.in_b.offset;
        for (std::size_t t = 0; t < T; ++t) {
            double* row = cur.data() + t * R;
            for (std::size_t r = 0; r < R; ++r) row[r] = in_b[r];
            for (int j = 0; j < K && static_cast<std::size_t>(j) <= t; ++j) {
                const double x = xs[t - static_cast<std::size_t>(j)];
                if (x == 0.0) continue;
                const double* wj = in_w + static_cast<std::size_t>(j) * R;
                for (std::size_t r = 0; r < R; ++r) row[r] += wj[r] * x;
            }
        }
    }

    std::vector<double> skip(T * S, 0.0);
    std::vector<double> pre(T * G);
    std::vector<double> proj(G);

    if (trace) {
        trace->x_shift = xs;
        trace->stream.resize(static_cast<std::size_t>(cfg.n_layers));
        trace->za.resize(static_cast<std::size_t>(cfg.n_layers));
        trace->zb.resize(static_cast<std::size_t>(cfg.n_layers));
    }

    for (int l = 0; l < cfg.n_layers; ++l) {
        const auto& lw = layout.layers[static_cast<std::size_t>(l)];
        const long long d = cfg.dilation(l);
        const double* dil_w = p + lw.dil_w.offset;
        const double* dil_b = p + lw.dil_b.offset;
        const double* cond_w = p + lw.cond_w.offset;
        const double* cond_b = p + lw.cond_b.offset;
        const double* res_w = p + lw.res_w.offset;
        const double* res_b = p + lw.res_b.offset;
        const double* skip_w = p + lw.skip_w.offset;
        const double* skip_b = p + lw.skip_b.offset;

        std::ptrdiff_t proj_frame = -1;
        for (std::size_t t = 0; t < T; ++t) {
            const std::ptrdiff_t f = static_cast<std::ptrdiff_t>(cond.frame_of(t));
            if (f != proj_frame) {
                const auto row = cond.frame_row(static_cast<std::size_t>(f));
                for (std::size_t g = 0; g < G; ++g) {
                    const double* wg = cond_w + g * C;
                    double acc = 0.0;
                    for (std::size_t c = 0; c < C; ++c) acc += wg[c] * row[c];
                    proj[g] = acc;
                }
                proj_frame = f;
            }
            double* pr = pre.data() + t * G;
            for (std::size_t g = 0; g < G; ++g) pr[g] = dil_b[g] + cond_b[g] + proj[g];
            for (int j = 0; j < K; ++j) {
                const long long src = static_cast<long long>(t) - static_cast<long long>(j) * d;
                if (src < 0) continue;
                const double* in_row = cur.data() + static_cast<std::size_t>(src) * R;
                const double* wj = dil_w + static_cast<std::size_t>(j) * G * R;
                for (std::size_t g = 0; g < G; ++g) {
                    const double* wg = wj + g * R;
                    double acc = 0.0;
                    for (std::size_t r = 0; r < R; ++r) acc += wg[r] * in_row[r];
                    pr[g] += acc;
                }
            }
        }

        if (trace) {
            trace->stream[static_cast<std::size_t>(l)] = cur;
            trace->za[static_cast<std::size_t>(l)].resize(T * R);
            trace->zb[static_cast<std::size_t>(l)].resize(T * R);
        }

        for (std::size_t t = 0; t < T; ++t) {
            const double* pr = pre.data() + t * G;
            double* h = cur.data() + t * R;
            double* sk = skip.data() + t * S;
            for (std::size_t i = 0; i < R; ++i) {
                const double a = std::tanh(pr[i]);
                const double b = sigmoid(pr[R + i]);
                const double z = a * b;
                if (trace) {
                    trace->za[static_cast<std::size_t>(l)][t * R + i] = a;
                    trace->zb[static_cast<std::size_t>(l)][t * R + i] = b;
                }
                // Accumulate z's contributions column-wise.
                const double* rw = res_w; // res_w[r][i]
                for (std::size_t r = 0; r < R; ++r) h[r] += rw[r * R + i] * z;
                for (std::size_t s = 0; s < S; ++s) sk[s] += skip_w[s * R + i] * z;
            }
            for (std::size_t r = 0; r < R; ++r) h[r] += res_b[r];
            for (std::size_t s = 0; s < S; ++s) sk[s] += skip_b[s];
        }
    }

    // Head: relu -> 1x1 -> relu -> 1x1.
    std::vector<double> logits(T * Q);
    std::vector<double> o1(T * S);
    const double* out1_w = p + layout.out1_w.offset;
    const double* out1_b = p + layout.out1_b.offset;
    const double* out2_w = p + layout.out2_w.offset;
    const double* out2_b = p + layout.out2_b.offset;
    std::vector<double> sk1(S);
    for (std::size_t t = 0; t < T; ++t) {
        const double* sk = skip.data() + t * S;
        for (std::size_t s = 0; s < S; ++s) sk1[s] = std::max(sk[s], 0.0);
        double* o = o1.data() + t * S;
        for (std::size_t s2 = 0; s2 < S; ++s2) {
            const double* wrow = out1_w + s2 * S;
            double acc = out1_b[s2];
            for (std::size_t s = 0; s < S; ++s) acc += wrow[s] * sk1[s];
            o[s2] = acc;
        }
        double* lg = logits.data() + t * Q;
        for (std::size_t q = 0; q < Q; ++q) {
            const double* wrow = out2_w + q * S;
            double acc = out2_b[q];
            for (std::size_t s = 0; s < S; ++s) acc += wrow[s] * std::max(o[s], 0.0);
            lg[q] = acc;
        }
    }

    if (trace) {
        trace->skip_acc = std::move(skip);
        trace->o1 = std::move(o1);
    }
    return logits;
}

} // namespace

std::vector<double> wavenet_forward(std::span<const double> wave_in,
                                    const ConditioningMatrix& cond, const WaveNetConfig& cfg,
                                    std::span<const double> params) {
    if (cond.rows() != wave_in.size())
        throw std::invalid_argument("wavenet_forward: input/conditioning length mismatch");
    check_finite(params);
    WaveNetLayout layout(cfg);
    return forward_impl(wave_in, cond, cfg, params, layout, nullptr);
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    double m = logits[0];
    for (double v : logits) m = std::max(m, v);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

double wavenet_loss_and_gradient(std::span<const double> wave_in, std::span<const int> targets,
                                 const ConditioningMatrix& cond, const WaveNetConfig& cfg,
                                 std::span<const double> params, std::span<double> grad) {
    const std::size_t T = wave_in.size();
    if (targets.size() != T)
        throw std::invalid_argument("wavenet: target length mismatch");
    WaveNetLayout layout(cfg);
    if (grad.size() != layout.total) throw ShapeMismatch("wavenet: gradient size mismatch");
    if (cond.rows() != T) throw std::invalid_argument("wavenet: conditioning length mismatch");

    const int K = cfg.kernel_size;
    const std::size_t R = static_cast<std::size_t>(cfg.residual_width);
    const std::size_t S = static_cast<std::size_t>(cfg.skip_width);
    const std::size_t G = static_cast<std::size_t>(cfg.gate_width);
    const std::size_t C = static_cast<std::size_t>(cfg.cond_channels);
    const std::size_t Q = static_cast<std::size_t>(cfg.quant_levels);
    const double* p = params.data();
    double* gp = grad.data();

    ForwardTrace trace;
    std::vector<double> logits = forward_impl(wave_in, cond, cfg, params, layout, &trace);

    // Loss and dlogits.
    double total_nll = 0.0;
    std::vector<double> dlogits(T * Q);
    for (std::size_t t = 0; t < T; ++t) {
        const double* lg = logits.data() + t * Q;
        const int target = targets[t];
        if (target < 0 || target >= cfg.quant_levels)
            throw std::invalid_argument("wavenet: target code out of range");
        double m = lg[0];
        for (std::size_t q = 1; q < Q; ++q) m = std::max(m, lg[q]);
        double sum = 0.0;
        for (std::size_t q = 0; q < Q; ++q) sum += std::exp(lg[q] - m);
        const double lse = m + std::log(sum);
        total_nll += lse - lg[static_cast<std::size_t>(target)];
        double* dl = dlogits.data() + t * Q;
        for (std::size_t q = 0; q < Q; ++q) dl[q] = std::exp(lg[q] - lse);
        dl[static_cast<std::size_t>(target)] -= 1.0;
    }

    // Head backward.
    const double* out1_w = p + layout.out1_w.offset;
    const double* out2_w = p + layout.out2_w.offset;
    double* dout1_w = gp + layout.out1_w.offset;
    double* dout1_b = gp + layout.out1_b.offset;
    double* dout2_w = gp + layout.out2_w.offset;
    double* dout2_b = gp + layout.out2_b.offset;

    std::vector<double> dskip(T * S);
    std::vector<double> sk1(S), sk2(S), do1(S);
    for (std::size_t t = 0; t < T; ++t) {
        const double* sk = trace.skip_acc.data() + t * S;
        const double* o = trace.o1.data() + t * S;
        const double* dl = dlogits.data() + t * Q;
        for (std::size_t s = 0; s < S; ++s) {
            sk1[s] = std::max(sk[s], 0.0);
            sk2[s] = std::max(o[s], 0.0);
            do1[s] = 0.0;
        }
        for (std::size_t q = 0; q < Q; ++q) {
            const double d = dl[q];
            if (d == 0.0) continue;
            const double* wrow = out2_w + q * S;
            double* gw = dout2_w + q * S;
            for (std::size_t s = 0; s < S; ++s) {
                gw[s] += d * sk2[s];
                do1[s] += d * wrow[s];
            }
            dout2_b[q] += d;
        }
        double* dsk = dskip.data() + t * S;
        for (std::size_t s = 0; s < S; ++s) dsk[s] = 0.0;
        for (std::size_t s2 = 0; s2 < S; ++s2) {
            if (o[s2] <= 0.0) continue; // relu gate
            const double d = do1[s2];
            const double* wrow = out1_w + s2 * S;
            double* gw = dout1_w + s2 * S;
            for (std::size_t s = 0; s < S; ++s) {
                gw[s] += d * sk1[s];
                dsk[s] += d * wrow[s];
            }
            dout1_b[s2] += d;
        }
        for (std::size_t s = 0; s < S; ++s)
            if (sk[s] <= 0.0) dsk[s] = 0.0;
    }

    // Stack backward. dh holds the gradient w.r.t. the current layer's output.
    std::vector<double> dh(T * R, 0.0);
    std::vector<double> dpre(T * G);
    std::vector<double> fsum(G);

    for (int l = cfg.n_layers - 1; l >= 0; --l) {
        const auto& lw = layout.layers[static_cast<std::size_t>(l)];
        const long long d = cfg.dilation(l);
        const double* dil_w = p + lw.dil_w.offset;
        const double* res_w = p + lw.res_w.offset;
        const double* skip_w = p + lw.skip_w.offset;
        double* gdil_w = gp + lw.dil_w.offset;
        double* gdil_b = gp + lw.dil_b.offset;
        double* gcond_w = gp + lw.cond_w.offset;
        double* gcond_b = gp + lw.cond_b.offset;
        double* gres_w = gp + lw.res_w.offset;
        double* gres_b = gp + lw.res_b.offset;
        double* gskip_w = gp + lw.skip_w.offset;
        double* gskip_b = gp + lw.skip_b.offset;
        const std::vector<double>& za = trace.za[static_cast<std::size_t>(l)];
        const std::vector<double>& zb = trace.zb[static_cast<std::size_t>(l)];
        const std::vector<double>& h_in = trace.stream[static_cast<std::size_t>(l)];

        for (std::size_t t = 0; t < T; ++t) {
            const double* dsk = dskip.data() + t * S;
            const double* dhr = dh.data() + t * R;
            const double* a = za.data() + t * R;
            const double* b = zb.data() + t * R;
            double* dp = dpre.data() + t * G;
            for (std::size_t i = 0; i < R; ++i) {
                double dz = 0.0;
                for (std::size_t s = 0; s < S; ++s) dz += skip_w[s * R + i] * dsk[s];
                for (std::size_t r = 0; r < R; ++r) dz += res_w[r * R + i] * dhr[r];
                const double zi = a[i] * b[i];
                dp[i] = dz * b[i] * (1.0 - a[i] * a[i]);
                dp[R + i] = dz * a[i] * b[i] * (1.0 - b[i]);
                // Weight grads that consume z directly.
                for (std::size_t s = 0; s < S; ++s) gskip_w[s * R + i] += dsk[s] * zi;
                for (std::size_t r = 0; r < R; ++r) gres_w[r * R + i] += dhr[r] * zi;
            }
            for (std::size_t s = 0; s < S; ++s) gskip_b[s] += dsk[s];
            for (std::size_t r = 0; r < R; ++r) gres_b[r] += dhr[r];
        }

        // Bias + conditioning gradients (per-frame grouping).
        std::fill(fsum.begin(), fsum.end(), 0.0);
        std::ptrdiff_t cur_frame = static_cast<std::ptrdiff_t>(cond.frame_of(0));
        auto flush = [&](std::ptrdiff_t frame) {
            const auto row = cond.frame_row(static_cast<std::size_t>(frame));
            for (std::size_t g = 0; g < G; ++g) {
                const double fs = fsum[g];
                if (fs == 0.0) continue;
                double* gw = gcond_w + g * C;
                for (std::size_t c = 0; c < C; ++c) gw[c] += fs * row[c];
            }
        };
        for (std::size_t t = 0; t < T; ++t) {
            const std::ptrdiff_t f = static_cast<std::ptrdiff_t>(cond.frame_of(t));
            if (f != cur_frame) {
                flush(cur_frame);
                std::fill(fsum.begin(), fsum.end(), 0.0);
                cur_frame = f;
            }
            const double* dp = dpre.data() + t * G;
            for (std::size_t g = 0; g < G; ++g) {
                fsum[g] += dp[g];
                gdil_b[g] += dp[g];
                gcond_b[g] += dp[g];
            }
        }
        flush(cur_frame);

        // Dilated conv: weight grads and input grads.
        for (std::size_t t = 0; t < T; ++t) {
            const double* dp = dpre.data() + t * G;
            for (int j = 0; j < K; ++j) {
                const long long src = static_cast<long long>(t) - static_cast<long long>(j) * d;
                if (src < 0) continue;
                const double* hr = h_in.data() + static_cast<std::size_t>(src) * R;
                double* dhr = dh.data() + static_cast<std::size_t>(src) * R;
                const double* wj = dil_w + static_cast<std::size_t>(j) * G * R;
                double* gwj = gdil_w + static_cast<std::size_t>(j) * G * R;
                for (std::size_t g = 0; g < G; ++g) {
                    const double dg = dp[g];
                    if (dg == 0.0) continue;
                    const double* wg = wj + g * R;
                    double* gwg = gwj + g * R;
                    for (std::size_t r = 0; r < R; ++r) {
                        gwg[r] += dg * hr[r];
                        dhr[r] += dg * wg[r];
                    }
                }
            }
        }
        // dh now holds dL/d(stream[l]): residual bypass contribution is already
        // in place (dh was dL/d(stream[l+1]) and stream[l+1] += stream[l]).
    }

    // Initial conv.
    double* gin_w = gp + layout.in_w.offset;
    double* gin_b = gp + layout.in_b.offset;
    for (std::size_t t = 0; t < T; ++t) {
        const double* dhr = dh.data() + t * R;
        for (std::size_t r = 0; r < R; ++r) gin_b[r] += dhr[r];
        for (int j = 0; j < K && static_cast<std::size_t>(j) <= t; ++j) {
            const double x = trace.x_shift[t - static_cast<std::size_t>(j)];
            if (x == 0.0) continue;
            double* gwj = gin_w + static_cast<std::size_t>(j) * R;
            for (std::size_t r = 0; r < R; ++r) gwj[r] += dhr[r] * x;
        }
    }

    return total_nll;
}

void ema_update(std::span<double> ema, std::span<const double> w, double decay) {
    if (ema.size() != w.size()) throw ShapeMismatch("ema_update: size mismatch");
    for (std::size_t i = 0; i < ema.size(); ++i)
        ema[i] = decay * ema[i] + (1.0 - decay) * w[i];
}

TrainStepResult train_step(std::span<const TrainBatchItem> batch, const WaveNetConfig& cfg,
                           WaveNetWeights weights, AdamState opt, const TrainConfig& tc) {
    if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
    WaveNetLayout layout(cfg);
    if (weights.params.size() != layout.total)
        throw ShapeMismatch("train_step: weights do not match config");

    std::vector<double> grad(layout.total, 0.0);
    double total_nll = 0.0;
    std::size_t total_samples = 0;
    for (const auto& item : batch) {
        if (item.wave.empty()) throw std::invalid_argument("train_step: empty batch item");
        if (item.cond.rows() != item.wave.size())
            throw std::invalid_argument("train_step: wave/conditioning length mismatch");
        std::vector<int> codes(item.wave.size());
        std::vector<double> quantized(item.wave.size());
        for (std::size_t t = 0; t < item.wave.size(); ++t) {
            codes[t] = mulaw_encode(item.wave[t]);
            quantized[t] = mulaw_decode(codes[t]);
        }
        total_nll += wavenet_loss_and_gradient(quantized, codes, item.cond, cfg, weights.params, grad);
        total_samples += item.wave.size();
    }
    const double mean_nll = total_nll / static_cast<double>(total_samples);
    if (!std::isfinite(mean_nll))
        throw NumericFailure("train_step: non-finite loss", static_cast<std::size_t>(opt.step));

    const double scale = 1.0 / static_cast<double>(total_samples);
    for (auto& g : grad) g *= scale;

    if (opt.m.empty()) opt.m.assign(layout.total, 0.0);
    if (opt.v.empty()) opt.v.assign(layout.total, 0.0);
    if (opt.m.size() != layout.total || opt.v.size() != layout.total)
        throw ShapeMismatch("train_step: optimizer state does not match config");
    opt.step += 1;
    const double b1 = tc.adam_beta1, b2 = tc.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(opt.step));
    for (std::size_t i = 0; i < layout.total; ++i) {
        opt.m[i] = b1 * opt.m[i] + (1.0 - b1) * grad[i];
        opt.v[i] = b2 * opt.v[i] + (1.0 - b2) * grad[i] * grad[i];
        const double mhat = opt.m[i] / bc1;
        const double vhat = opt.v[i] / bc2;
        weights.params[i] -= tc.learning_rate * mhat / (std::sqrt(vhat) + tc.adam_eps);
    }

    if (weights.ema.empty()) weights.ema = weights.params;
    else ema_update(weights.ema, weights.params, tc.ema_decay);

    return {std::move(weights), std::move(opt), mean_nll};
}

GenerationStream::GenerationStream(const WaveNetConfig& cfg, std::span<const double> params,
                                   const ConditioningMatrix* cond)
    : cfg_(cfg), params_(params), cond_(cond), layout_(cfg) {
    if (cond_ == nullptr || cond_->rows() == 0)
        throw std::invalid_argument("generation: empty conditioning");
    if (cond_->cols() != static_cast<std::size_t>(cfg.cond_channels))
        throw std::invalid_argument("generation: conditioning channel mismatch");
    if (params_.size() != layout_.total) throw ShapeMismatch("generation: parameter count mismatch");
    check_finite(params_);

    const std::size_t R = static_cast<std::size_t>(cfg_.residual_width);
    input_ring_.assign(static_cast<std::size_t>(cfg_.kernel_size), 0.0);
    layer_rings_.resize(static_cast<std::size_t>(cfg_.n_layers));
    ring_caps_.resize(static_cast<std::size_t>(cfg_.n_layers));
    for (int l = 0; l < cfg_.n_layers; ++l) {
        // Ring must cover taps back to (kernel-1)*dilation.
        const std::size_t cap =
            static_cast<std::size_t>((cfg_.kernel_size - 1) * cfg_.dilation(l) + 1);
        ring_caps_[static_cast<std::size_t>(l)] = cap;
        layer_rings_[static_cast<std::size_t>(l)].assign(cap * R, 0.0);
    }
    cond_proj_.assign(static_cast<std::size_t>(cfg_.n_layers),
                      std::vector<double>(static_cast<std::size_t>(cfg_.gate_width), 0.0));
    cond_proj_frame_.assign(static_cast<std::size_t>(cfg_.n_layers), -1);
    skip_row_.assign(static_cast<std::size_t>(cfg_.skip_width), 0.0);
    logits_.assign(static_cast<std::size_t>(cfg_.quant_levels), 0.0);
    scratch_pre_.assign(static_cast<std::size_t>(cfg_.gate_width), 0.0);
    scratch_z_.assign(R, 0.0);
}

void GenerationStream::advance_if_needed() {
    if (advanced_) return;
    if (pos_ >= cond_->rows())
        throw std::invalid_argument("generation: position beyond conditioning");
    const std::size_t t = pos_;
    const int K = cfg_.kernel_size;
    const std::size_t R = static_cast<std::size_t>(cfg_.residual_width);
    const std::size_t S = static_cast<std::size_t>(cfg_.skip_width);
    const std::size_t G = static_cast<std::size_t>(cfg_.gate_width);
    const std::size_t C = static_cast<std::size_t>(cfg_.cond_channels);
    const double* p = params_.data();

    // x_shift[t] = previously fed sample (zero at t = 0).
    input_ring_[t % static_cast<std::size_t>(K)] = (t == 0) ? 0.0 : last_fed_;

    std::vector<double> h_row(R);
    {
        const double* in_w = p + layout_.in_w.offset;
        const double* in_b = p + layout_.in_b.offset;
        for (std::size_t r = 0; r < R; ++r) h_row[r] = in_b[r];
        for (int j = 0; j < K && static_cast<std::size_t>(j) <= t; ++j) {
            const double x = input_ring_[(t - static_cast<std::size_t>(j)) % static_cast<std::size_t>(K)];
            if (x == 0.0) continue;
            const double* wj = in_w + static_cast<std::size_t>(j) * R;
            for (std::size_t r = 0; r < R; ++r) h_row[r] += wj[r] * x;
        }
    }

    std::fill(skip_row_.begin(), skip_row_.end(), 0.0);
    const std::size_t frame = cond_->frame_of(t);

    for (int l = 0; l < cfg_.n_layers; ++l) {
        const auto& lw = layout_.layers[static_cast<std::size_t>(l)];
        const std::size_t cap = ring_caps_[static_cast<std::size_t>(l)];
        std::vector<double>& ring = layer_rings_[static_cast<std::size_t>(l)];
        std::copy_n(h_row.data(), R, ring.data() + (t % cap) * R);

        auto& proj = cond_proj_[static_cast<std::size_t>(l)];
        if (cond_proj_frame_[static_cast<std::size_t>(l)] != static_cast<std::ptrdiff_t>(frame)) {
            const auto row = cond_->frame_row(frame);
            const double* cond_w = p + lw.cond_w.offset;
            for (std::size_t g = 0; g < G; ++g) {
                const double* wg = cond_w + g * C;
                double acc = 0.0;
                for (std::size_t c = 0; c < C; ++c) acc += wg[c] * row[c];
                proj[g] = acc;
            }
            cond_proj_frame_[static_cast<std::size_t>(l)] = static_cast<std::ptrdiff_t>(frame);
        }

        const double* dil_w = p + lw.dil_w.offset;
        const double* dil_b = p + lw.dil_b.offset;
        const double* cond_b = p + lw.cond_b.offset;
        const long long d = cfg_.dilation(l);
        for (std::size_t g = 0; g < G; ++g) scratch_pre_[g] = dil_b[g] + cond_b[g] + proj[g];
        for (int j = 0; j < K; ++j) {
            const long long src = static_cast<long long>(t) - static_cast<long long>(j) * d;
            if (src < 0) continue;
            const double* in_row = ring.data() + (static_cast<std::size_t>(src) % cap) * R;
            const double* wj = dil_w + static_cast<std::size_t>(j) * G * R;
            for (std::size_t g = 0; g < G; ++g) {
                const double* wg = wj + g * R;
                double acc = 0.0;
                for (std::size_t r = 0; r < R; ++r) acc += wg[r] * in_row[r];
                scratch_pre_[g] += acc;
            }
        }

        const double* res_w = p + lw.res_w.offset;
        const double* res_b = p + lw.res_b.offset;
        const double* skip_w = p + lw.skip_w.offset;
        const double* skip_b = p + lw.skip_b.offset;
        for (std::size_t i = 0; i < R; ++i)
            scratch_z_[i] = std::tanh(scratch_pre_[i]) * sigmoid(scratch_pre_[R + i]);
        for (std::size_t r = 0; r < R; ++r) {
            const double* wr = res_w + r * R;
            double acc = res_b[r];
            for (std::size_t i = 0; i < R; ++i) acc += wr[i] * scratch_z_[i];
            h_row[r] += acc;
        }
        for (std::size_t s = 0; s < S; ++s) {
            const double* ws = skip_w + s * R;
            double acc = skip_b[s];
            for (std::size_t i = 0; i < R; ++i) acc += ws[i] * scratch_z_[i];
            skip_row_[s] += acc;
        }
    }
    advanced_ = true;
}

const std::vector<double>& GenerationStream::next_logits() {
    advance_if_needed();
    const std::size_t S = static_cast<std::size_t>(cfg_.skip_width);
    const std::size_t Q = static_cast<std::size_t>(cfg_.quant_levels);
    const double* p = params_.data();
    const double* out1_w = p + layout_.out1_w.offset;
    const double* out1_b = p + layout_.out1_b.offset;
    const double* out2_w = p + layout_.out2_w.offset;
    const double* out2_b = p + layout_.out2_b.offset;
    std::vector<double> sk1(S), sk2(S);
    for (std::size_t s = 0; s < S; ++s) sk1[s] = std::max(skip_row_[s], 0.0);
    for (std::size_t s2 = 0; s2 < S; ++s2) {
        const double* wrow = out1_w + s2 * S;
        double acc = out1_b[s2];
        for (std::size_t s = 0; s < S; ++s) acc += wrow[s] * sk1[s];
        sk2[s2] = std::max(acc, 0.0);
    }
    for (std::size_t q = 0; q < Q; ++q) {
        const double* wrow = out2_w + q * S;
        double acc = out2_b[q];
        for (std::size_t s = 0; s < S; ++s) acc += wrow[s] * sk2[s];
        logits_[q] = acc;
    }
    for (double v : logits_)
        if (!std::isfinite(v)) throw NumericFailure("generation: non-finite logits", pos_);
    return logits_;
}

void GenerationStream::feed(double sample) {
    advance_if_needed();
    last_fed_ = sample;
    pos_ += 1;
    advanced_ = false;
}

int draw_code(std::span<const double> logits, SampleMode mode, Rng& rng) {
    if (mode == SampleMode::greedy) {
        int best = 0;
        for (std::size_t q = 1; q < logits.size(); ++q)
            if (logits[q] > logits[static_cast<std::size_t>(best)]) best = static_cast<int>(q);
        return best;
    }
    std::vector<double> probs = softmax(logits);
    const double u = rng.next_double();
    double cum = 0.0;
    for (std::size_t q = 0; q < probs.size(); ++q) {
        cum += probs[q];
        if (u < cum) return static_cast<int>(q);
    }
    return static_cast<int>(probs.size()) - 1;
}

Waveform generate(const ConditioningMatrix& cond, const WaveNetConfig& cfg,
                  std::span<const double> params, SampleMode mode, Direction direction,
                  std::uint64_t seed, int sample_rate) {
    const ConditioningMatrix work =
        (direction == Direction::reverse) ? cond.reversed() : cond;
    GenerationStream stream(cfg, params, &work);
    Rng rng(seed);
    const std::size_t total = work.rows();
    Waveform out;
    out.sample_rate = sample_rate;
    out.samples.resize(total);
    for (std::size_t t = 0; t < total; ++t) {
        const int code = draw_code(stream.next_logits(), mode, rng);
        const double x = mulaw_decode(code);
        out.samples[t] = x;
        stream.feed(x);
    }
    if (direction == Direction::reverse)
        std::reverse(out.samples.begin(), out.samples.end());
    return out;
}

namespace {

constexpr char kWeightsMagic[4] = {'T', 'T', 'W', 'N'};

std::vector<std::uint8_t> payload_bytes(const WaveNetWeights& w) {
    const std::size_t n = w.params.size() + w.ema.size();
    std::vector<std::uint8_t> bytes(n * 4);
    auto put = [&bytes](std::size_t idx, double v) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        for (int b = 0; b < 4; ++b)
            bytes[idx * 4 + static_cast<std::size_t>(b)] =
                static_cast<std::uint8_t>((bits >> (8 * b)) & 0xFF);
    };
    for (std::size_t i = 0; i < w.params.size(); ++i) put(i, w.params[i]);
    for (std::size_t i = 0; i < w.ema.size(); ++i) put(w.params.size() + i, w.ema[i]);
    return bytes;
}

} // namespace

void save_weights(const std::string& path, const WaveNetWeights& w) {
    WaveNetLayout layout(w.config);
    if (w.params.size() != layout.total)
        throw ShapeMismatch("save_weights: parameter count does not match config");
    if (!w.ema.empty() && w.ema.size() != layout.total)
        throw ShapeMismatch("save_weights: EMA size does not match config");

    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("save_weights: cannot open for writing: " + path);
    os.write(kWeightsMagic, 4);
    write_u8(os, 1);
    const WaveNetConfig& c = w.config;
    for (int v : {c.n_layers, c.dilation_cycle, c.kernel_size, c.residual_width, c.skip_width,
                  c.gate_width, c.cond_channels, c.quant_levels})
        write_u32(os, static_cast<std::uint32_t>(v));
    write_u8(os, w.ema.empty() ? 0 : 1);
    const auto bytes = payload_bytes(w);
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    write_u32(os, crc32(bytes.data(), bytes.size()));
    if (!os) throw Error("save_weights: write failed: " + path);
}

WaveNetWeights load_weights(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("load_weights: cannot open: " + path);
    char magic[4];
    read_exact(is, magic, 4);
    if (std::memcmp(magic, kWeightsMagic, 4) != 0) throw CorruptFile("ttwn: bad magic");
    if (read_u8(is) != 1) throw CorruptFile("ttwn: unsupported version");
    WaveNetConfig c;
    c.n_layers = static_cast<int>(read_u32(is));
    c.dilation_cycle = static_cast<int>(read_u32(is));
    c.kernel_size = static_cast<int>(read_u32(is));
    c.residual_width = static_cast<int>(read_u32(is));
    c.skip_width = static_cast<int>(read_u32(is));
    c.gate_width = static_cast<int>(read_u32(is));
    c.cond_channels = static_cast<int>(read_u32(is));
    c.quant_levels = static_cast<int>(read_u32(is));
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw CorruptFile(std::string("ttwn: invalid stored config: ") + e.what());
    }
    const bool has_ema = read_u8(is) != 0;
    WaveNetLayout layout(c);
    const std::size_t n = layout.total * (has_ema ? 2 : 1);
    std::vector<std::uint8_t> bytes(n * 4);
    read_exact(is, bytes.data(), bytes.size());
    const std::uint32_t expected = read_u32(is);
    if (crc32(bytes.data(), bytes.size()) != expected) throw CorruptFile("ttwn: payload CRC mismatch");

    auto get = [&bytes](std::size_t idx) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b)
            bits |= static_cast<std::uint32_t>(bytes[idx * 4 + static_cast<std::size_t>(b)]) << (8 * b);
        float f;
        std::memcpy(&f, &bits, 4);
        return static_cast<double>(f);
    };
    WaveNetWeights w;
    w.config = c;
    w.params.resize(layout.total);
    for (std::size_t i = 0; i < layout.total; ++i) w.params[i] = get(i);
    if (has_ema) {
        w.ema.resize(layout.total);
        for (std::size_t i = 0; i < layout.total; ++i) w.ema[i] = get(layout.total + i);
    }
    return w;
}

WaveNetWeights load_weights(const std::string& path, const WaveNetConfig& expected) {
    WaveNetWeights w = load_weights(path);
    if (!(w.config == expected))
        throw ShapeMismatch("load_weights: stored config does not match requested config");
    return w;
}

} // namespace timbre
