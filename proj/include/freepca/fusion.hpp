#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "freepca/decompose.hpp"
#include "freepca/errors.hpp"
#include "freepca/noise.hpp"
#include "freepca/pca.hpp"
#include "freepca/tensor.hpp"

namespace freepca {

struct FusionSchedule {
    std::size_t k_max = 3;
    std::size_t mode_switch_step = 25;
    std::size_t total_steps = 50;
};

enum class DenoiseMode { FreePca, LocalOnly };

// k = min(i, K_max). Window indices start at 0, so the first window stays
// pure-local and consistency features ramp in as the window slides.
inline std::size_t schedule_k(std::size_t window_index, std::size_t k_max) noexcept {
    return std::min(window_index, k_max);
}

inline DenoiseMode denoise_mode(std::size_t step, const FusionSchedule& schedule) {
    if (step >= schedule.total_steps) {
        throw DomainError("denoise_mode: step " + std::to_string(step) +
                          " outside schedule of " + std::to_string(schedule.total_steps));
    }
    return step < schedule.mode_switch_step ? DenoiseMode::FreePca : DenoiseMode::LocalOnly;
}

// Reassemble the f components, scattering every slice back to its original
// component index. Concatenating in rank order instead would pair component
// t with a basis row != t and break the transpose reconstruction.
inline ComponentSpace fuse_components(const ComponentSplit& split) {
    const std::size_t f = split.frames;
    const std::size_t row = split.sites * split.channels;

    ComponentSpace fused;
    fused.z = FeatureTensor(f, split.sites, split.channels, FeatureLayout::FrameMajor);
    fused.basis_id = split.basis_id;

    std::vector<bool> seen(f, false);
    auto scatter = [&](const ComponentSlice& slice) {
        if (slice.component >= f) {
            throw ConsistencyError("fuse_components: component index " +
                                   std::to_string(slice.component) + " out of range");
        }
        if (seen[slice.component]) {
            throw ConsistencyError("fuse_components: component " +
                                   std::to_string(slice.component) + " assigned twice");
        }
        if (slice.values.size() != row) {
            throw ShapeError("fuse_components: slice size mismatch");
        }
        seen[slice.component] = true;
        std::copy(slice.values.begin(), slice.values.end(),
                  fused.z.data.begin() + static_cast<std::ptrdiff_t>(slice.component * row));
    };
    for (const ComponentSlice& s : split.consistency) scatter(s);
    for (const ComponentSlice& s : split.motion) scatter(s);
    for (std::size_t t = 0; t < f; ++t) {
        if (!seen[t]) {
            throw ConsistencyError("fuse_components: component " + std::to_string(t) +
                                   " missing from the split");
        }
    }
    return fused;
}

// Average the per-window tensors into the full F-frame sequence. Each output
// frame is the arithmetic mean of every window contribution covering it;
// elements whose contributions agree bitwise pass through untouched, so
// windows that all emit the same sequence reproduce it exactly. Windows are
// reduced in plan order, independent of any parallelism upstream.
inline FeatureTensor accumulate_windows(
    const std::vector<std::pair<WindowSpec, FeatureTensor>>& fused, const WindowPlan& plan) {
    if (fused.size() != plan.windows.size()) {
        throw PlanError("accumulate_windows: " + std::to_string(fused.size()) +
                        " tensors for " + std::to_string(plan.windows.size()) + " windows");
    }
    const std::size_t F = plan.total_frames;
    const std::size_t f = plan.window_frames;

    std::size_t sites = 0, channels = 0;
    for (std::size_t i = 0; i < fused.size(); ++i) {
        const WindowSpec& w = fused[i].first;
        const FeatureTensor& x = fused[i].second;
        const WindowSpec& expect = plan.windows[i];
        if (w.index != expect.index || w.start != expect.start || w.end != expect.end) {
            throw PlanError("accumulate_windows: window " + std::to_string(i) +
                            " does not match the plan");
        }
        if (x.layout != FeatureLayout::FrameMajor || x.frames != f) {
            throw ShapeError("accumulate_windows: window tensor " + x.dims_string() +
                             " is not an f-frame block");
        }
        if (i == 0) {
            sites = x.sites;
            channels = x.channels;
        } else if (x.sites != sites || x.channels != channels) {
            throw ShapeError("accumulate_windows: inconsistent window shapes");
        }
    }

    const std::size_t row = sites * channels;
    FeatureTensor out(F, sites, channels, FeatureLayout::FrameMajor);
    std::vector<double> sum(F * row, 0.0);
    std::vector<double> first(F * row, 0.0);
    std::vector<std::uint32_t> count(F * row, 0);
    std::vector<bool> agree(F * row, true);

    for (const auto& [w, x] : fused) {
        for (std::size_t t = 0; t < f; ++t) {
            const std::size_t dst = (w.start + t) * row;
            const std::size_t src = t * row;
            for (std::size_t e = 0; e < row; ++e) {
                const double v = x.data[src + e];
                if (count[dst + e] == 0) {
                    first[dst + e] = v;
                } else if (v != first[dst + e]) {
                    agree[dst + e] = false;
                }
                sum[dst + e] += v;
                count[dst + e] += 1;
            }
        }
    }
    for (std::size_t t = 0; t < F; ++t) {
        for (std::size_t e = 0; e < row; ++e) {
            const std::size_t i = t * row + e;
            if (count[i] == 0) {
                throw PlanError("accumulate_windows: frame " + std::to_string(t) +
                                " not covered by any window");
            }
            out.data[i] = agree[i] ? first[i] : sum[i] / static_cast<double>(count[i]);
        }
    }
    return out;
}

// Everything one window produced during a pseudo-denoiser step; handed to
// the optional observer so callers can emit reports without the run loop
// knowing about them.
struct WindowEvent {
    std::size_t step = 0;
    WindowSpec window;
    std::size_t k = 0;
    const PcaBasis* basis = nullptr;
    const SimilarityRanking* ranking = nullptr;
    const ComponentSplit* split = nullptr;
    const ComponentSpace* z_global = nullptr;
    const ComponentSpace* z_local = nullptr;
};

using WindowHook = std::function<void(const WindowEvent&)>;

// Per-step residual stand-in: pull the attention output toward a fixed
// seeded target. The 0.5 keeps each step a strict contraction, so the
// trajectory converges and stays insensitive to round-off in the windows.
inline constexpr double kResidualContraction = 0.5;

inline FeatureTensor residual_target(std::size_t frames, std::size_t sites,
                                     std::size_t channels, std::uint64_t seed) {
    FeatureTensor target(frames, sites, channels, FeatureLayout::FrameMajor);
    Rng rng(derive_seed(seed, 0x7a46));
    for (double& v : target.data) v = rng.next_normal();
    return target;
}

inline void apply_residual_update(FeatureTensor& x, const FeatureTensor& attention_out,
                                  const FeatureTensor& target) {
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        x.data[i] = target.data[i] +
                    kResidualContraction * (attention_out.data[i] - target.data[i]);
    }
}

// The iterative harness: per step, run the scheduled mode's attention
// pathways, decompose and fuse per window (FreePca) or stitch the plain
// local windows (LocalOnly), average overlaps, then contract toward the
// seeded target. Deterministic in (noise, plan, schedule, params).
inline VideoTensor run_pseudo_denoiser(const NoiseSequence& noise, const WindowPlan& plan,
                                       const FusionSchedule& schedule,
                                       const AttentionParams& params,
                                       const WindowHook& hook = {}) {
    const VideoTensor& video = noise.frames;
    if (video.frames != plan.total_frames) {
        throw ShapeError("run_pseudo_denoiser: noise has " + std::to_string(video.frames) +
                         " frames, plan expects " + std::to_string(plan.total_frames));
    }
    if (params.channels != video.channels) {
        throw ShapeError("run_pseudo_denoiser: params.channels does not match noise");
    }
    if (schedule.mode_switch_step > schedule.total_steps) {
        throw DomainError("run_pseudo_denoiser: mode_switch_step past total_steps");
    }

    FeatureTensor x = features_from_video(video);
    if (schedule.total_steps == 0) return video;

    const FeatureTensor target =
        residual_target(x.frames, x.sites, x.channels, params.seed);
    AttentionParams local_params = params;
    local_params.lambda = 1.0;

    for (std::size_t step = 0; step < schedule.total_steps; ++step) {
        const DenoiseMode mode = denoise_mode(step, schedule);
        std::vector<std::pair<WindowSpec, FeatureTensor>> window_outputs;
        window_outputs.reserve(plan.windows.size());

        if (mode == DenoiseMode::FreePca) {
            const std::vector<WindowPathways> pathways =
                global_local_features(x, plan, params);
            for (const WindowPathways& p : pathways) {
                const std::size_t k = schedule_k(p.window.index, schedule.k_max);
                WindowDecomposition d = decompose_window(p.global, p.local, k);
                if (hook) {
                    hook(WindowEvent{step, p.window, k, &d.basis, &d.ranking, &d.split,
                                     &d.z_global, &d.z_local});
                }
                const ComponentSpace fused = fuse_components(d.split);
                window_outputs.emplace_back(p.window, reconstruct(d.basis, fused));
            }
        } else {
            for (const WindowSpec& w : plan.windows) {
                window_outputs.emplace_back(
                    w, mock_temporal_attention(slice_frames(x, w.start, w.end), local_params));
            }
        }

        const FeatureTensor attention_out = accumulate_windows(window_outputs, plan);
        apply_residual_update(x, attention_out, target);
    }
    return video_from_features(x, video.height, video.width);
}

}  // namespace freepca
