// Command-line surface over the analysis/synthesis pipeline: WAV in,
// spectrograms and rainbowgrams out, pitch/tempo manipulation, synthesizer
// training and (beam-searched) generation, corpus preparation, schedule dumps.
//
// Exit codes: 0 success, 1 usage error, 2 bad input data, 3 numeric failure.

#include "timbre/beam_search.hpp"
#include "timbre/conditioning.hpp"
#include "timbre/cqt.hpp"
#include "timbre/dataset.hpp"
#include "timbre/errors.hpp"
#include "timbre/gan_objectives.hpp"
#include "timbre/griffin_lim.hpp"
#include "timbre/musical_ops.hpp"
#include "timbre/png_io.hpp"
#include "timbre/rng.hpp"
#include "timbre/spectrogram_ops.hpp"
#include "timbre/stft.hpp"
#include "timbre/ttsg.hpp"
#include "timbre/wav_io.hpp"
#include "timbre/wavenet.hpp"
#include "timbre/wavenet_beam.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace timbre;

namespace {

struct AnalyzeArgs {
    std::string in, out, png, repr = "cqt";
    bool complex_out = false;
};

struct GriffinLimArgs {
    std::string in, out, init = "random", mse_log;
    int iters = 100;
    std::uint64_t seed = 0;
};

struct PitchShiftArgs {
    std::string in, out;
    int semitones = 0;
};

struct SynthArgs {
    std::string spec, weights, out, beam_log;
    std::uint64_t seed = 0;
    double stretch = 1.0;
    double cond_shift = 2.0;
    bool greedy = false;
    bool reverse = false;
    bool no_ema = false;
    int beam_width = 1;
    int beam_step = 2048;
};

struct TrainArgs {
    std::string config, data, out, log;
    int steps = 500;
    int layers = 10;
    int cycle = 10;
    int kernel = 3;
    int residual = 32;
    int skip = 32;
    int lr_warmup = 0;
    double lr_floor = -1.0; // default: learning_rate / 100
    bool lr_cosine = false;
    bool augment = false;
    bool reverse = false;
};

struct ChunkArgs {
    std::string in, outdir, prefix = "chunk";
    double seconds = 4.0;
};

struct SplitArgs {
    std::string manifest, train_out, test_out;
    double fraction = 0.2;
    std::uint64_t seed = 0;
};

struct StatsArgs {
    std::vector<std::string> inputs;
    std::string domain, out;
};

struct SchedulesArgs {
    std::string out;
    long long stride = 10000;
};

LogMagSpectrogram reversed_frames(const LogMagSpectrogram& spec) {
    LogMagSpectrogram out = spec;
    for (std::size_t t = 0; t < spec.frames; ++t)
        for (std::size_t k = 0; k < spec.bins; ++k)
            out.at(t, k) = spec.at(spec.frames - 1 - t, k);
    return out;
}

int run_analyze(const AnalyzeArgs& a) {
    const Waveform wave = read_wav(a.in);
    ComplexSpectrogram spec;
    if (a.repr == "cqt") {
        spec = cqt(wave, CqtParams{});
    } else if (a.repr == "stft") {
        spec = stft(wave, StftParams{});
    } else {
        std::cerr << "analyze: --repr must be cqt or stft\n";
        return 1;
    }
    if (!a.png.empty()) {
        const auto lm = log_magnitude(spec);
        const auto ifreq = instantaneous_frequency(spec);
        write_png_rgb(a.png, lm.frames, lm.bins, rainbowgram_rgb(lm, ifreq));
    }
    if (a.complex_out) save_ttsg(a.out, spec);
    else save_ttsg(a.out, log_magnitude(spec));
    std::cout << "analyze: " << spec.frames << " frames x " << spec.bins << " bins -> " << a.out
              << "\n";
    return 0;
}

int run_griffinlim(const GriffinLimArgs& a) {
    const TtsgContent content = load_ttsg(a.in);
    MagnitudeSpectrogram mag;
    if (std::holds_alternative<LogMagSpectrogram>(content)) {
        mag = magnitude_from_log(std::get<LogMagSpectrogram>(content));
    } else {
        const auto& spec = std::get<ComplexSpectrogram>(content);
        if (spec.repr() != Repr::stft)
            throw UnsupportedRepresentation("griffinlim: input must be STFT content");
        mag.frames = spec.frames;
        mag.bins = spec.bins;
        mag.params = std::get<StftParams>(spec.params);
        mag.sample_rate = spec.sample_rate;
        mag.data.resize(spec.data.size());
        for (std::size_t i = 0; i < spec.data.size(); ++i) mag.data[i] = std::abs(spec.data[i]);
    }

    GriffinLimConfig cfg;
    cfg.iterations = a.iters;
    cfg.seed = a.seed;
    if (a.init == "random") cfg.phase_init = PhaseInit::random_uniform;
    else if (a.init == "zero") cfg.phase_init = PhaseInit::zero;
    else {
        std::cerr << "griffinlim: --init must be random or zero\n";
        return 1;
    }
    const auto result = griffin_lim(mag, cfg);
    write_wav(a.out, result.wave);
    if (!a.mse_log.empty()) {
        std::ofstream os(a.mse_log);
        os << "iteration,mse\n";
        for (std::size_t i = 0; i < result.mse.size(); ++i) os << i << "," << result.mse[i] << "\n";
    }
    std::cout << "griffinlim: mse " << result.mse.front() << " -> " << result.mse.back() << " over "
              << a.iters << " iterations\n";
    return 0;
}

int run_pitchshift(const PitchShiftArgs& a) {
    const auto spec = load_ttsg_logmag(a.in);
    save_ttsg(a.out, pitch_shift_cqt(spec, a.semitones));
    std::cout << "pitchshift: " << a.semitones << " semitones -> " << a.out << "\n";
    return 0;
}

int run_synth(const SynthArgs& a) {
    LogMagSpectrogram spec = load_ttsg_logmag(a.spec);
    if (spec.repr() != Repr::cqt)
        throw UnsupportedRepresentation("synth: spectrogram must be CQT content");
    if (spec.normalization != NormalizationState::raw)
        throw WrongNormalizationState("synth: spectrogram must be raw (denormalize first)");

    const WaveNetWeights w = load_weights(a.weights);
    const bool use_ema = !a.no_ema && !w.ema.empty();
    const std::span<const double> params(use_ema ? w.ema : w.params);
    if (w.config.cond_channels != static_cast<int>(spec.bins))
        throw ShapeMismatch("synth: weights expect " + std::to_string(w.config.cond_channels) +
                            " conditioning channels, spectrogram has " + std::to_string(spec.bins));

    Waveform out;
    if (a.beam_width > 1) {
        if (a.stretch != 1.0)
            throw std::invalid_argument("synth: beam search requires --stretch 1.0");
        LogMagSpectrogram target = a.reverse ? reversed_frames(spec) : spec;
        const auto schedule = retime_conditioning(target, 1.0);
        const auto cond = prepare_conditioning(target, a.cond_shift, schedule);
        WaveNetBeamSynth synth(w.config, params, &cond);
        BeamConfig bc;
        bc.beam_width = a.beam_width;
        bc.step = a.beam_step;
        bc.seed = a.seed;
        const auto result = beam_synthesize(target, synth, bc);
        out = result.wave;
        if (a.reverse) std::reverse(out.samples.begin(), out.samples.end());
        if (!a.beam_log.empty()) {
            std::ofstream os(a.beam_log);
            for (const auto& it : result.iterations) {
                nlohmann::json j;
                j["iteration"] = it.iteration;
                j["committed_before"] = it.committed_before;
                j["chosen_probe"] = it.chosen_probe;
                j["probe_scores"] = it.probe_scores;
                j["committed_score"] = it.committed_score;
                j["beam_width"] = result.beam_width;
                j["step"] = result.step;
                os << j.dump() << "\n";
            }
        }
        std::cout << "synth: beam width " << result.beam_width << ", step " << result.step
                  << ", committed score " << result.total_committed_score << "\n";
    } else {
        const auto schedule = retime_conditioning(spec, a.stretch);
        const auto cond = prepare_conditioning(spec, a.cond_shift, schedule);
        out = generate(cond, w.config, params,
                       a.greedy ? SampleMode::greedy : SampleMode::sample,
                       a.reverse ? Direction::reverse : Direction::forward, a.seed,
                       spec.sample_rate);
    }
    write_wav(a.out, out);
    std::cout << "synth: " << out.samples.size() << " samples -> " << a.out << "\n";
    return 0;
}

TrainConfig parse_train_config(const std::string& path) {
    TrainConfig tc;
    if (path.empty()) return tc;
    std::ifstream is(path);
    if (!is) throw Error("train-wavenet: cannot open config: " + path);
    std::map<std::string, double*> numeric = {
        {"learning_rate", &tc.learning_rate}, {"adam_beta1", &tc.adam_beta1},
        {"adam_beta2", &tc.adam_beta2},       {"adam_eps", &tc.adam_eps},
        {"ema_decay", &tc.ema_decay},         {"augment_peak_lo", &tc.augment_peak_lo},
        {"augment_peak_hi", &tc.augment_peak_hi}, {"cond_shift", &tc.cond_shift},
    };
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("train-wavenet: config line " + std::to_string(lineno) + " is not key=value");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        try {
            if (auto it = numeric.find(key); it != numeric.end()) *it->second = std::stod(value);
            else if (key == "batch_size") tc.batch_size = std::stoi(value);
            else if (key == "sample_length") tc.sample_length = std::stoi(value);
            else if (key == "seed") tc.seed = std::stoull(value);
            else throw Error("train-wavenet: unknown config key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw Error("train-wavenet: bad value for '" + key + "'");
        }
    }
    return tc;
}

int run_train(const TrainArgs& a) {
    const TrainConfig tc = parse_train_config(a.config);
    Waveform wave = read_wav(a.data);
    if (a.reverse) std::reverse(wave.samples.begin(), wave.samples.end());

    const CqtParams cqt_params;
    const ComplexSpectrogram complex_spec = cqt(wave, cqt_params);
    LogMagSpectrogram base_lm = log_magnitude(complex_spec);

    WaveNetConfig cfg;
    cfg.n_layers = a.layers;
    cfg.dilation_cycle = a.cycle;
    cfg.kernel_size = a.kernel;
    cfg.residual_width = a.residual;
    cfg.gate_width = 2 * a.residual;
    cfg.skip_width = a.skip;
    cfg.cond_channels = static_cast<int>(base_lm.bins);
    cfg.validate();

    const std::size_t hop = static_cast<std::size_t>(cqt_params.hop);
    // Crops snap to frame boundaries so conditioning rows align one-to-one.
    const std::size_t crop_frames =
        std::max<std::size_t>(1, static_cast<std::size_t>(tc.sample_length) / hop);
    const std::size_t usable_frames = std::min(base_lm.frames, wave.samples.size() / hop);
    if (usable_frames == 0) throw std::invalid_argument("train-wavenet: input too short");
    const std::size_t frames_per_crop = std::min(crop_frames, usable_frames);
    const std::size_t crop_len = frames_per_crop * hop;

    // Base conditioning (shift applied); per-draw augmentation rescales the
    // cached complex CQT so waveform and conditioning stay consistent.
    std::vector<double> magnitudes(complex_spec.data.size());
    for (std::size_t i = 0; i < magnitudes.size(); ++i)
        magnitudes[i] = std::abs(complex_spec.data[i]);

    double peak = 0.0;
    for (double v : wave.samples) peak = std::max(peak, std::fabs(v));
    if (peak <= 0.0) throw NoSignal("train-wavenet: silent input");

    auto w = init_weights(cfg, tc.seed);
    AdamState opt;
    Rng rng(mix64(tc.seed ^ 0xC0FFEE));
    std::ofstream log;
    if (!a.log.empty()) {
        log.open(a.log);
        log << "step,nll\n";
    }

    // Optional warmup plus cosine annealing around the configured rate.
    const double lr_peak = tc.learning_rate;
    const double lr_floor = a.lr_floor >= 0.0 ? a.lr_floor : lr_peak / 100.0;
    TrainConfig step_tc = tc;
    for (int step = 0; step < a.steps; ++step) {
        std::vector<TrainBatchItem> batch;
        for (int b = 0; b < tc.batch_size; ++b) {
            const std::size_t start_frame =
                usable_frames > frames_per_crop
                    ? static_cast<std::size_t>(rng.next_below(usable_frames - frames_per_crop + 1))
                    : 0;
            double scale = 1.0;
            if (a.augment) scale = rng.uniform(tc.augment_peak_lo, tc.augment_peak_hi) / peak;

            TrainBatchItem item;
            item.wave.resize(crop_len);
            for (std::size_t i = 0; i < crop_len; ++i)
                item.wave[i] = scale * wave.samples[start_frame * hop + i];

            std::vector<double> cond_rows(frames_per_crop * base_lm.bins);
            for (std::size_t f = 0; f < frames_per_crop; ++f)
                for (std::size_t k = 0; k < base_lm.bins; ++k) {
                    const double m = magnitudes[(start_frame + f) * base_lm.bins + k];
                    cond_rows[f * base_lm.bins + k] =
                        std::log(scale * m + kMagnitudeFloor) + tc.cond_shift;
                }
            item.cond = ConditioningMatrix(frames_per_crop, base_lm.bins, static_cast<int>(hop),
                                           std::move(cond_rows));
            batch.push_back(std::move(item));
        }
        if (a.lr_warmup > 0 && step < a.lr_warmup) {
            step_tc.learning_rate =
                lr_floor + (lr_peak - lr_floor) * static_cast<double>(step) / a.lr_warmup;
        } else if (a.lr_cosine) {
            const int tail = a.steps - a.lr_warmup;
            step_tc.learning_rate =
                lr_floor + (lr_peak - lr_floor) * 0.5 *
                               (1.0 + std::cos(M_PI * (step - a.lr_warmup) / std::max(1, tail)));
        } else {
            step_tc.learning_rate = lr_peak;
        }
        auto result = train_step(batch, cfg, std::move(w), std::move(opt), step_tc);
        w = std::move(result.weights);
        opt = std::move(result.opt);
        if (log.is_open()) log << step + 1 << "," << result.mean_nll << "\n";
        if ((step + 1) % 50 == 0 || step == 0)
            std::cout << "train-wavenet: step " << step + 1 << " nll " << result.mean_nll << "\n";
    }
    save_weights(a.out, w);
    std::cout << "train-wavenet: saved " << a.out << "\n";
    return 0;
}

int run_chunk(const ChunkArgs& a) {
    const Waveform wave = read_wav(a.in);
    const auto chunks = chunk_waveform(wave, a.seconds);
    if (chunks.empty()) {
        std::cerr << "chunk: warning: input shorter than one chunk, nothing written\n";
        return 0;
    }
    std::filesystem::create_directories(a.outdir);
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "%s_%03zu.wav", a.prefix.c_str(), i);
        write_wav((std::filesystem::path(a.outdir) / name).string(), chunks[i]);
    }
    std::cout << "chunk: wrote " << chunks.size() << " chunks\n";
    return 0;
}

int run_split(const SplitArgs& a) {
    const auto manifest = load_manifest(a.manifest);
    const auto split = split_by_piece(manifest, a.fraction, a.seed);
    save_manifest(a.train_out, split.train);
    save_manifest(a.test_out, split.test);
    std::cout << "split: " << split.train.entries.size() << " train / "
              << split.test.entries.size() << " test entries\n";
    return 0;
}

int run_stats(const StatsArgs& a) {
    std::vector<LogMagSpectrogram> corpus;
    for (const auto& path : a.inputs) {
        auto spec = load_ttsg_logmag(path);
        if (spec.normalization != NormalizationState::raw)
            throw WrongNormalizationState("stats: inputs must be raw spectrograms: " + path);
        corpus.push_back(std::move(spec));
    }
    const auto stats = compute_domain_stats(corpus, a.domain);
    std::ofstream os(a.out);
    if (!os) throw Error("stats: cannot open for writing: " + a.out);
    os << stats_to_json(stats) << "\n";
    std::cout << "stats: mean " << stats.mean << " std " << stats.std_dev << " -> " << a.out
              << "\n";
    return 0;
}

int run_schedules(const SchedulesArgs& a) {
    const ObjectiveConfig cfg;
    std::ofstream os(a.out);
    if (!os) throw Error("schedules: cannot open for writing: " + a.out);
    os << "step,identity_weight,lr\n";
    for (long long step = 0; step <= cfg.total_steps; step += a.stride)
        os << step << "," << identity_weight(step, cfg) << "," << lr_schedule(step, cfg) << "\n";
    std::cout << "schedules: wrote " << a.out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CQT-domain music analysis and neural resynthesis toolkit"};
    app.require_subcommand(1);

    AnalyzeArgs analyze_args;
    auto* analyze_cmd = app.add_subcommand("analyze", "Waveform -> spectrogram (.ttsg), optional rainbowgram PNG");
    analyze_cmd->add_option("--in", analyze_args.in, "input WAV (PCM16 mono 16 kHz)")->required();
    analyze_cmd->add_option("--out", analyze_args.out, "output .ttsg")->required();
    analyze_cmd->add_option("--repr", analyze_args.repr, "cqt|stft (default cqt)");
    analyze_cmd->add_option("--png", analyze_args.png, "rainbowgram PNG path");
    analyze_cmd->add_flag("--complex", analyze_args.complex_out, "store complex values instead of log magnitude");

    GriffinLimArgs gl_args;
    auto* gl_cmd = app.add_subcommand("griffinlim", "Phase reconstruction from an STFT magnitude .ttsg");
    gl_cmd->add_option("--in", gl_args.in, "input .ttsg (stft)")->required();
    gl_cmd->add_option("--out", gl_args.out, "output WAV")->required();
    gl_cmd->add_option("--iters", gl_args.iters, "iteration count (default 100)");
    gl_cmd->add_option("--seed", gl_args.seed, "phase init seed");
    gl_cmd->add_option("--init", gl_args.init, "random|zero (default random)");
    gl_cmd->add_option("--mse-log", gl_args.mse_log, "write per-iteration MSE CSV");

    PitchShiftArgs ps_args;
    auto* ps_cmd = app.add_subcommand("pitchshift", "Translate a CQT .ttsg along the log-frequency axis");
    ps_cmd->add_option("--in", ps_args.in)->required();
    ps_cmd->add_option("--out", ps_args.out)->required();
    ps_cmd->add_option("--semitones", ps_args.semitones, "integer semitones (positive = up)")->required();

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "Synthesize a waveform from a CQT .ttsg");
    synth_cmd->add_option("--spec", synth_args.spec, "conditioning .ttsg (cqt log-magnitude, raw)")->required();
    synth_cmd->add_option("--weights", synth_args.weights, "synthesizer weights .ttwn")->required();
    synth_cmd->add_option("--out", synth_args.out, "output WAV")->required();
    synth_cmd->add_option("--seed", synth_args.seed, "sampling seed");
    synth_cmd->add_option("--stretch", synth_args.stretch, "samples-per-frame stretch in [0.25, 4]");
    synth_cmd->add_option("--cond-shift", synth_args.cond_shift, "conditioning shift (default +2)");
    synth_cmd->add_flag("--greedy", synth_args.greedy, "argmax decoding instead of sampling");
    synth_cmd->add_flag("--reverse", synth_args.reverse, "generate in reverse time order");
    synth_cmd->add_flag("--no-ema", synth_args.no_ema, "use raw weights even when an EMA shadow exists");
    synth_cmd->add_option("--beam-width", synth_args.beam_width, "probes per beam iteration (1 = plain)");
    synth_cmd->add_option("--beam-step", synth_args.beam_step, "samples committed per beam iteration");
    synth_cmd->add_option("--beam-log", synth_args.beam_log, "write per-iteration beam scores as JSON lines");

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train-wavenet", "Train the synthesizer on one WAV (toy scale)");
    train_cmd->add_option("--config", train_args.config, "key=value training config file");
    train_cmd->add_option("--data", train_args.data, "training WAV")->required();
    train_cmd->add_option("--out", train_args.out, "output .ttwn")->required();
    train_cmd->add_option("--steps", train_args.steps, "training steps (default 500)");
    train_cmd->add_option("--layers", train_args.layers, "layer count (default 10)");
    train_cmd->add_option("--cycle", train_args.cycle, "dilation cycle (default 10)");
    train_cmd->add_option("--kernel", train_args.kernel, "kernel size (default 3)");
    train_cmd->add_option("--residual", train_args.residual, "residual width (default 32)");
    train_cmd->add_option("--skip", train_args.skip, "skip width (default 32)");
    train_cmd->add_option("--lr-warmup", train_args.lr_warmup, "linear learning-rate warmup steps");
    train_cmd->add_flag("--lr-cosine", train_args.lr_cosine, "cosine-anneal the learning rate after warmup");
    train_cmd->add_option("--lr-floor", train_args.lr_floor, "schedule floor (default learning_rate/100)");
    train_cmd->add_flag("--augment", train_args.augment, "enable peak-rescale augmentation");
    train_cmd->add_flag("--reverse", train_args.reverse, "train on time-reversed data");
    train_cmd->add_option("--log", train_args.log, "write per-step NLL CSV");

    ChunkArgs chunk_args;
    auto* chunk_cmd = app.add_subcommand("chunk", "Cut a WAV into fixed-length training chunks");
    chunk_cmd->add_option("--in", chunk_args.in)->required();
    chunk_cmd->add_option("--outdir", chunk_args.outdir)->required();
    chunk_cmd->add_option("--seconds", chunk_args.seconds, "chunk length in seconds (default 4)");
    chunk_cmd->add_option("--prefix", chunk_args.prefix, "output filename prefix");

    SplitArgs split_args;
    auto* split_cmd = app.add_subcommand("split", "Piece-disjoint train/test split of a manifest");
    split_cmd->add_option("--manifest", split_args.manifest)->required();
    split_cmd->add_option("--fraction", split_args.fraction, "test fraction (default 0.2)");
    split_cmd->add_option("--seed", split_args.seed);
    split_cmd->add_option("--train-out", split_args.train_out)->required();
    split_cmd->add_option("--test-out", split_args.test_out)->required();

    StatsArgs stats_args;
    auto* stats_cmd = app.add_subcommand("stats", "Domain normalization statistics over .ttsg files");
    stats_cmd->add_option("--inputs", stats_args.inputs, "log-magnitude .ttsg files")->required();
    stats_cmd->add_option("--domain", stats_args.domain, "domain label")->required();
    stats_cmd->add_option("--out", stats_args.out, "output JSON")->required();

    SchedulesArgs sched_args;
    auto* sched_cmd = app.add_subcommand("schedules", "Dump loss-weight and learning-rate schedules as CSV");
    sched_cmd->add_option("--out", sched_args.out)->required();
    sched_cmd->add_option("--stride", sched_args.stride, "step stride (default 10000)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (analyze_cmd->parsed()) return run_analyze(analyze_args);
        if (gl_cmd->parsed()) return run_griffinlim(gl_args);
        if (ps_cmd->parsed()) return run_pitchshift(ps_args);
        if (synth_cmd->parsed()) return run_synth(synth_args);
        if (train_cmd->parsed()) return run_train(train_args);
        if (chunk_cmd->parsed()) return run_chunk(chunk_args);
        if (split_cmd->parsed()) return run_split(split_args);
        if (stats_cmd->parsed()) return run_stats(stats_args);
        if (sched_cmd->parsed()) return run_schedules(sched_args);
    } catch (const NumericFailure& e) {
        std::cerr << "numeric failure: " << e.what() << " (position " << e.position() << ")\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
