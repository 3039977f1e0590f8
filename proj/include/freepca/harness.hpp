#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "freepca/analysis.hpp"
#include "freepca/decompose.hpp"
#include "freepca/errors.hpp"
#include "freepca/fusion.hpp"
#include "freepca/noise.hpp"
#include "freepca/pca.hpp"
#include "freepca/rng.hpp"
#include "freepca/tensor.hpp"
#include "freepca/tensor_io.hpp"

namespace freepca {

// ---------------------------------------------------------------------------
// Synthetic videos

enum class BackgroundKind { Constant, Gradient, SeededTexture };
enum class MoverShape { Square, Dot };

struct Mover {
    MoverShape shape = MoverShape::Dot;
    std::size_t size = 1;      // square edge or dot diameter, px
    double velocity_y = 0.0;   // px per frame
    double velocity_x = 1.0;
    double intensity = 0.25;   // added to the background inside the shape
};

struct SynthSpec {
    std::size_t frames = 32;
    std::size_t height = 32;
    std::size_t width = 32;
    std::size_t channels = 1;
    BackgroundKind background = BackgroundKind::Gradient;
    std::vector<Mover> movers;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

// Deterministic render: static background, movers composited per frame with
// wrap-around kinematics, then seeded Gaussian pixel noise.
inline VideoTensor synth_video(const SynthSpec& spec) {
    if (spec.noise_sigma < 0.0) throw DomainError("synth_video: noise_sigma must be >= 0");
    for (const Mover& m : spec.movers) {
        if (m.size < 1 || m.size > std::min(spec.height, spec.width)) {
            throw DomainError("synth_video: mover size " + std::to_string(m.size) +
                              " does not fit a " + std::to_string(spec.height) + "x" +
                              std::to_string(spec.width) + " frame");
        }
    }

    VideoTensor video(spec.frames, spec.height, spec.width, spec.channels);
    const auto H = static_cast<long long>(spec.height);
    const auto W = static_cast<long long>(spec.width);
    auto wrap = [](long long v, long long n) { return static_cast<std::size_t>(((v % n) + n) % n); };

    std::vector<double> background(spec.height * spec.width, 0.0);
    switch (spec.background) {
        case BackgroundKind::Constant:
            background.assign(background.size(), 0.25);
            break;
        case BackgroundKind::Gradient:
            for (std::size_t y = 0; y < spec.height; ++y)
                for (std::size_t x = 0; x < spec.width; ++x)
                    background[y * spec.width + x] =
                        spec.width > 1
                            ? 0.5 * static_cast<double>(x) / static_cast<double>(spec.width - 1)
                            : 0.0;
            break;
        case BackgroundKind::SeededTexture: {
            Rng rng(derive_seed(spec.seed, 0xb6));
            for (double& p : background) p = 0.5 * rng.next_unit();
            break;
        }
    }
    for (std::size_t t = 0; t < spec.frames; ++t)
        for (std::size_t y = 0; y < spec.height; ++y)
            for (std::size_t x = 0; x < spec.width; ++x)
                for (std::size_t c = 0; c < spec.channels; ++c)
                    video.at(t, y, x, c) = background[y * spec.width + x];

    for (std::size_t m = 0; m < spec.movers.size(); ++m) {
        const Mover& mover = spec.movers[m];
        Rng rng(derive_seed(spec.seed, 0x40 + m));
        const auto y0 = static_cast<long long>(rng.next_index(spec.height));
        const auto x0 = static_cast<long long>(rng.next_index(spec.width));
        const double radius = static_cast<double>(mover.size) / 2.0;
        const auto reach = static_cast<long long>(std::ceil(radius));

        for (std::size_t t = 0; t < spec.frames; ++t) {
            const auto td = static_cast<double>(t);
            const long long cy = y0 + std::llround(td * mover.velocity_y);
            const long long cx = x0 + std::llround(td * mover.velocity_x);
            if (mover.shape == MoverShape::Square) {
                for (long long dy = 0; dy < static_cast<long long>(mover.size); ++dy)
                    for (long long dx = 0; dx < static_cast<long long>(mover.size); ++dx) {
                        const std::size_t y = wrap(cy + dy, H);
                        const std::size_t x = wrap(cx + dx, W);
                        for (std::size_t c = 0; c < spec.channels; ++c)
                            video.at(t, y, x, c) += mover.intensity;
                    }
            } else {
                // size is the diameter; size 1 marks exactly the center pixel
                const double r2 = (radius - 0.5) * (radius - 0.5) + 0.25;
                for (long long dy = -reach; dy <= reach; ++dy)
                    for (long long dx = -reach; dx <= reach; ++dx) {
                        if (static_cast<double>(dy * dy + dx * dx) > r2) continue;
                        const std::size_t y = wrap(cy + dy, H);
                        const std::size_t x = wrap(cx + dx, W);
                        for (std::size_t c = 0; c < spec.channels; ++c)
                            video.at(t, y, x, c) += mover.intensity;
                    }
            }
        }
    }

    if (spec.noise_sigma > 0.0) {
        Rng rng(derive_seed(spec.seed, 0x7e));
        for (double& v : video.data) v += spec.noise_sigma * rng.next_normal();
    }
    return video;
}

// ---------------------------------------------------------------------------
// Run configuration

enum class RunMode { FreePca, LocalOnly, GlobalOnly };

inline const char* to_string(RunMode m) {
    switch (m) {
        case RunMode::FreePca: return "freepca";
        case RunMode::LocalOnly: return "local";
        case RunMode::GlobalOnly: return "global";
    }
    return "freepca";
}

inline RunMode run_mode_from_string(const std::string& s) {
    if (s == "freepca") return RunMode::FreePca;
    if (s == "local") return RunMode::LocalOnly;
    if (s == "global") return RunMode::GlobalOnly;
    throw ConfigError("unknown mode '" + s + "' (expected freepca|local|global)");
}

struct RunConfig {
    std::size_t frames = 64;
    std::size_t height = 8;
    std::size_t width = 8;
    std::size_t channels = 4;
    std::size_t window = 16;
    std::size_t stride = 4;  // f/4, the sliding-window default
    FusionSchedule schedule{};
    std::uint64_t attention_seed = 1001;
    std::uint64_t noise_seed = 2002;
    std::size_t noise_block = 16;
    bool scalar_mean = false;
    bool direct_reuse = false;
    bool shuffle = true;
    RunMode mode = RunMode::FreePca;

    // Rejects any combination that would violate a module precondition,
    // before any compute starts.
    void validate() const {
        if (frames < 1 || height < 1 || width < 1 || channels < 1) {
            throw ConfigError("config: video dims must all be >= 1");
        }
        if (window < 2) throw ConfigError("config: window must be >= 2 frames");
        if (window > frames) throw ConfigError("config: window exceeds frame count");
        if (stride < 1 || stride > window) {
            throw ConfigError("config: need 1 <= stride <= window");
        }
        if (schedule.k_max > window) {
            throw ConfigError("config: k_max exceeds window frame count");
        }
        if (schedule.mode_switch_step > schedule.total_steps) {
            throw ConfigError("config: mode_switch_step past total_steps");
        }
        if (noise_block < 1 || noise_block > frames) {
            throw ConfigError("config: need 1 <= noise block <= frames");
        }
    }
};

inline nlohmann::json config_to_json(const RunConfig& c) {
    return nlohmann::json{
        {"video",
         {{"frames", c.frames}, {"height", c.height}, {"width", c.width}, {"channels", c.channels}}},
        {"window", {{"size", c.window}, {"stride", c.stride}}},
        {"schedule",
         {{"k_max", c.schedule.k_max},
          {"mode_switch_step", c.schedule.mode_switch_step},
          {"total_steps", c.schedule.total_steps}}},
        {"seeds", {{"attention", c.attention_seed}, {"noise", c.noise_seed}}},
        {"noise",
         {{"block", c.noise_block},
          {"scalar_mean", c.scalar_mean},
          {"direct_reuse", c.direct_reuse},
          {"shuffle", c.shuffle}}},
        {"mode", to_string(c.mode)}};
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
        if (j.contains("video")) {
            const auto& v = j.at("video");
            c.frames = v.value("frames", c.frames);
            c.height = v.value("height", c.height);
            c.width = v.value("width", c.width);
            c.channels = v.value("channels", c.channels);
        }
        if (j.contains("window")) {
            const auto& w = j.at("window");
            c.window = w.value("size", c.window);
            c.stride = w.value("stride", c.stride);
        }
        if (j.contains("schedule")) {
            const auto& s = j.at("schedule");
            c.schedule.k_max = s.value("k_max", c.schedule.k_max);
            c.schedule.mode_switch_step = s.value("mode_switch_step", c.schedule.mode_switch_step);
            c.schedule.total_steps = s.value("total_steps", c.schedule.total_steps);
        }
        if (j.contains("seeds")) {
            const auto& s = j.at("seeds");
            c.attention_seed = s.value("attention", c.attention_seed);
            c.noise_seed = s.value("noise", c.noise_seed);
        }
        if (j.contains("noise")) {
            const auto& n = j.at("noise");
            c.noise_block = n.value("block", c.noise_block);
            c.scalar_mean = n.value("scalar_mean", c.scalar_mean);
            c.direct_reuse = n.value("direct_reuse", c.direct_reuse);
            c.shuffle = n.value("shuffle", c.shuffle);
        }
        if (j.contains("mode")) c.mode = run_mode_from_string(j.at("mode").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: malformed JSON value: ") + e.what());
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
    return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Baselines and the demo pipeline

// The initialized noise of a run: sample, reuse the first block's mean
// statistics (or copy the block verbatim), then shuffle later blocks.
inline NoiseSequence prepare_noise(const RunConfig& config) {
    NoiseSequence noise = sample_noise(config.frames, config.height, config.width,
                                       config.channels, config.noise_seed);
    if (config.direct_reuse) {
        noise = direct_reuse(std::move(noise), config.noise_block);
    } else {
        noise = reuse_mean(std::move(noise), config.noise_block,
                           config.scalar_mean ? MeanMode::Scalar : MeanMode::PerSite);
    }
    if (config.shuffle) {
        noise = shuffle_blocks(std::move(noise), config.noise_block,
                               derive_seed(config.noise_seed, 0x5f));
    }
    return noise;
}

// Direct-sampling analog: full-sequence attention every step, no windows,
// same contraction as the windowed runs.
inline VideoTensor run_global_baseline(const NoiseSequence& noise,
                                       const FusionSchedule& schedule,
                                       const AttentionParams& params) {
    const VideoTensor& video = noise.frames;
    if (params.channels != video.channels) {
        throw ShapeError("run_global_baseline: params.channels does not match noise");
    }
    FeatureTensor x = features_from_video(video);
    if (schedule.total_steps == 0) return video;
    const FeatureTensor target = residual_target(x.frames, x.sites, x.channels, params.seed);
    AttentionParams p = params;
    p.lambda = 1.0;
    for (std::size_t step = 0; step < schedule.total_steps; ++step) {
        const FeatureTensor attention_out = mock_temporal_attention(x, p);
        apply_residual_update(x, attention_out, target);
    }
    return video_from_features(x, video.height, video.width);
}

struct DemoStats {
    // Motion-set aggregates over every window at the first fusion step,
    // taken from the run's own (query-amplified) pathways; only meaningful
    // for RunMode::FreePca.
    double motion_diff_local_mean = 0.0;
    double motion_diff_global_mean = 0.0;
    // Observation-style comparison (plain lambda = 1 pathways) of the
    // generated video's motion sets; computed for every mode.
    MotionComparison observation;
    double final_mean_temporal_diff = 0.0;
    std::size_t final_edge_pixels = 0;
};

struct DemoArtifacts {
    std::filesystem::path out_dir;
    std::map<std::string, std::string> hashes;  // artifact name -> fnv1a64 hex
    DemoStats stats;
};

inline std::string hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("hash_file: cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
    return std::string(buf);
}

namespace detail {

// Reconstruction of one side's motion set alone: zero everything except the
// motion components, taken from `source`, then P^T.
inline FeatureTensor motion_only_reconstruction(const PcaBasis& basis,
                                                const ComponentSpace& source,
                                                const ComponentSplit& split) {
    const std::size_t row = split.sites * split.channels;
    ComponentSpace masked;
    masked.basis_id = source.basis_id;
    masked.z = FeatureTensor(split.frames, split.sites, split.channels, FeatureLayout::FrameMajor);
    for (const ComponentSlice& slice : split.motion) {
        std::copy_n(source.z.data.begin() + static_cast<std::ptrdiff_t>(slice.component * row),
                    row,
                    masked.z.data.begin() + static_cast<std::ptrdiff_t>(slice.component * row));
    }
    return reconstruct(basis, masked);
}

inline std::string window_csv_name(std::size_t index) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "window_%03zu_similarity.csv", index);
    return std::string(buf);
}

}  // namespace detail

// End-to-end run: noise init -> pseudo-denoiser (or baseline) -> analysis
// artifacts, all under out_dir, plus a manifest that reproduces the run
// bit-exactly.
inline DemoArtifacts demo_pipeline(const RunConfig& config, const std::filesystem::path& out_dir) {
    config.validate();
    std::filesystem::create_directories(out_dir);

    const NoiseSequence noise = prepare_noise(config);
    const WindowPlan plan = WindowPlan::make(config.frames, config.window, config.stride);
    AttentionParams params;
    params.seed = config.attention_seed;
    params.channels = config.channels;
    params.lambda = config.frames == config.window ? 1.0
                                                   : entropy_scale(config.frames, config.window);

    DemoArtifacts artifacts;
    artifacts.out_dir = out_dir;
    std::vector<std::string> names;

    write_video(noise.frames, (out_dir / "noise_init.ften").string());
    names.push_back("noise_init.ften");

    double local_abs = 0.0, global_abs = 0.0;
    std::size_t diff_count = 0;
    VideoTensor final_video;

    if (config.mode == RunMode::FreePca) {
        std::vector<std::pair<std::size_t, SimilarityRanking>> step0_rankings;
        WindowHook hook = [&](const WindowEvent& ev) {
            if (ev.step != 0) return;
            step0_rankings.emplace_back(ev.window.index, *ev.ranking);
            const FeatureTensor from_local =
                detail::motion_only_reconstruction(*ev.basis, *ev.z_local, *ev.split);
            const FeatureTensor from_global =
                detail::motion_only_reconstruction(*ev.basis, *ev.z_global, *ev.split);
            const FeatureTensor dl = temporal_diff(from_local);
            const FeatureTensor dg = temporal_diff(from_global);
            for (double v : dl.data) local_abs += std::abs(v);
            for (double v : dg.data) global_abs += std::abs(v);
            diff_count += dl.data.size();
        };
        final_video = run_pseudo_denoiser(noise, plan, config.schedule, params, hook);
        for (const auto& [index, ranking] : step0_rankings) {
            const std::string name = detail::window_csv_name(index);
            write_ranking_csv(ranking, (out_dir / name).string());
            names.push_back(name);
        }
    } else if (config.mode == RunMode::LocalOnly) {
        FusionSchedule local = config.schedule;
        local.mode_switch_step = 0;
        final_video = run_pseudo_denoiser(noise, plan, local, params);
    } else {
        final_video = run_global_baseline(noise, config.schedule, params);
    }

    if (diff_count > 0) {
        artifacts.stats.motion_diff_local_mean = local_abs / static_cast<double>(diff_count);
        artifacts.stats.motion_diff_global_mean = global_abs / static_cast<double>(diff_count);
    }

    write_video(final_video, (out_dir / "final.ften").string());
    names.push_back("final.ften");

    if (final_video.frames >= 2) {
        artifacts.stats.final_mean_temporal_diff = mean_temporal_diff(final_video);
    }
    if (config.window >= 2) {
        artifacts.stats.observation =
            compare_motion_sets(features_from_video(final_video), plan, config.attention_seed,
                                config.schedule.k_max);
    }
    if (final_video.height >= 3 && final_video.width >= 3) {
        const GrayImage overlay = edge_overlay(final_video);
        artifacts.stats.final_edge_pixels = nonzero_pixels(overlay);
        write_pgm(overlay, (out_dir / "edge_overlay.pgm").string());
        names.push_back("edge_overlay.pgm");
    }

    for (const std::string& name : names) {
        artifacts.hashes[name] = hash_file(out_dir / name);
    }

    nlohmann::json manifest{
        {"tool", "freepca"},
        {"kind", "demo"},
        {"version", 1},
        {"config", config_to_json(config)},
        {"noise_shuffle_perms", noise.shuffle_perms},
        {"artifacts", artifacts.hashes},
        {"stats",
         {{"motion_diff_local_mean", artifacts.stats.motion_diff_local_mean},
          {"motion_diff_global_mean", artifacts.stats.motion_diff_global_mean},
          {"observation_motion_diff_local_mean", artifacts.stats.observation.diff_local_mean},
          {"observation_motion_diff_global_mean", artifacts.stats.observation.diff_global_mean},
          {"observation_motion_value_local_mean", artifacts.stats.observation.value_local_mean},
          {"observation_motion_value_global_mean",
           artifacts.stats.observation.value_global_mean},
          {"final_mean_temporal_diff", artifacts.stats.final_mean_temporal_diff},
          {"final_edge_pixels", artifacts.stats.final_edge_pixels}}}};
    std::ofstream mf(out_dir / "manifest.json", std::ios::trunc);
    if (!mf) throw IoError("demo_pipeline: cannot open manifest.json");
    mf << manifest.dump(2) << "\n";
    if (!mf) throw IoError("demo_pipeline: short write to manifest.json");

    return artifacts;
}

struct ReplayResult {
    bool ok = false;
    std::vector<std::string> mismatches;
};

// Re-run a demo from its manifest into a fresh directory and compare the
// artifact hashes against the recorded ones.
inline ReplayResult replay_manifest(const std::filesystem::path& manifest_path,
                                    const std::filesystem::path& out_dir) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("replay_manifest: cannot open " + manifest_path.string());
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(manifest_path.string() + ": invalid JSON: " + e.what());
    }
    if (!manifest.contains("config") || !manifest.contains("artifacts")) {
        throw ConfigError(manifest_path.string() + ": not a demo manifest");
    }

    const RunConfig config = config_from_json(manifest.at("config"));
    const DemoArtifacts replay = demo_pipeline(config, out_dir);

    ReplayResult result;
    result.ok = true;
    for (const auto& [name, hash] : manifest.at("artifacts").items()) {
        const auto it = replay.hashes.find(name);
        if (it == replay.hashes.end()) {
            result.ok = false;
            result.mismatches.push_back(name + ": missing from replay");
        } else if (it->second != hash.get<std::string>()) {
            result.ok = false;
            result.mismatches.push_back(name + ": " + hash.get<std::string>() + " -> " +
                                        it->second);
        }
    }
    return result;
}

}  // namespace freepca
