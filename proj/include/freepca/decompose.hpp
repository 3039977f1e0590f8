#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "freepca/errors.hpp"
#include "freepca/pca.hpp"
#include "freepca/rng.hpp"
#include "freepca/tensor.hpp"

namespace freepca {

struct WindowSpec {
    std::size_t index = 0;
    std::size_t start = 0;
    std::size_t end = 0;  // exclusive; end - start == window_frames
};

// Sliding-window coverage of F frames: window i starts at
// min(i * stride, F - f), so the last window is clamped to end exactly at F
// and every frame is covered at least once. stride > f would leave gaps and
// is rejected.
struct WindowPlan {
    std::size_t total_frames = 0;   // F
    std::size_t window_frames = 0;  // f
    std::size_t stride = 0;
    std::vector<WindowSpec> windows;

    static WindowPlan make(std::size_t total_frames, std::size_t window_frames,
                           std::size_t stride) {
        if (window_frames < 1 || window_frames > total_frames) {
            throw PlanError("WindowPlan: need 1 <= f <= F, got f=" +
                            std::to_string(window_frames) + " F=" +
                            std::to_string(total_frames));
        }
        if (stride < 1 || stride > window_frames) {
            throw PlanError("WindowPlan: need 1 <= stride <= f, got stride=" +
                            std::to_string(stride));
        }
        WindowPlan plan;
        plan.total_frames = total_frames;
        plan.window_frames = window_frames;
        plan.stride = stride;
        const std::size_t last_start = total_frames - window_frames;
        for (std::size_t i = 0;; ++i) {
            const std::size_t start = std::min(i * stride, last_start);
            plan.windows.push_back({i, start, start + window_frames});
            if (start == last_start) break;
        }
        return plan;
    }
};

struct AttentionParams {
    std::uint64_t seed = 0;
    std::size_t channels = 0;
    double lambda = 1.0;  // query amplification; >= 1 whenever F >= f
};

// sqrt(log_f F): query scaling that compensates the longer context of the
// full-sequence pathway.
inline double entropy_scale(std::size_t total_frames, std::size_t window_frames) {
    if (window_frames < 2) {
        throw DomainError("entropy_scale: need f >= 2, got " + std::to_string(window_frames));
    }
    if (total_frames < window_frames) {
        throw DomainError("entropy_scale: need F >= f, got F=" + std::to_string(total_frames) +
                          " f=" + std::to_string(window_frames));
    }
    return std::sqrt(std::log(static_cast<double>(total_frames)) /
                     std::log(static_cast<double>(window_frames)));
}

namespace detail {

// Random matrix with orthonormal rows: Gaussian draws + modified
// Gram-Schmidt, rows re-drawn deterministically if one degenerates.
inline std::vector<double> random_orthogonal(std::size_t n, Rng& rng) {
    std::vector<double> m(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        while (true) {
            double* row = &m[i * n];
            for (std::size_t j = 0; j < n; ++j) row[j] = rng.next_normal();
            for (std::size_t k = 0; k < i; ++k) {
                const double* prev = &m[k * n];
                double dot = 0.0;
                for (std::size_t j = 0; j < n; ++j) dot += row[j] * prev[j];
                for (std::size_t j = 0; j < n; ++j) row[j] -= dot * prev[j];
            }
            double norm2 = 0.0;
            for (std::size_t j = 0; j < n; ++j) norm2 += row[j] * row[j];
            if (norm2 > 1e-12) {
                const double inv = 1.0 / std::sqrt(norm2);
                for (std::size_t j = 0; j < n; ++j) row[j] *= inv;
                break;
            }
        }
    }
    return m;
}

inline void softmax_in_place(double* row, std::size_t n) {
    double mx = row[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, row[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        row[i] = std::exp(row[i] - mx);
        sum += row[i];
    }
    const double inv = 1.0 / sum;
    for (std::size_t i = 0; i < n; ++i) row[i] *= inv;
}

struct AttentionMaps {
    std::vector<double> wq, wk, wv;  // channels x channels each
};

inline AttentionMaps attention_maps(std::uint64_t seed, std::size_t channels) {
    AttentionMaps maps;
    Rng rq(derive_seed(seed, 0x71));
    Rng rk(derive_seed(seed, 0x72));
    Rng rv(derive_seed(seed, 0x73));
    maps.wq = random_orthogonal(channels, rq);
    maps.wk = random_orthogonal(channels, rk);
    maps.wv = random_orthogonal(channels, rv);
    return maps;
}

// T x T softmax rows for one site: entry (t, u) is frame t's weight on
// frame u under lambda-scaled queries.
inline std::vector<double> site_attention_probs(const FeatureTensor& x,
                                                const AttentionMaps& maps, double lambda,
                                                std::size_t site) {
    const std::size_t T = x.frames;
    const std::size_t C = x.channels;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(C));

    std::vector<double> q(T * C), k(T * C);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t a = 0; a < C; ++a) {
            double aq = 0.0, ak = 0.0;
            for (std::size_t b = 0; b < C; ++b) {
                const double xv = x.at(t, site, b);
                aq += maps.wq[a * C + b] * xv;
                ak += maps.wk[a * C + b] * xv;
            }
            q[t * C + a] = lambda * aq;
            k[t * C + a] = ak;
        }
    }
    std::vector<double> probs(T * T);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t u = 0; u < T; ++u) {
            double dot = 0.0;
            for (std::size_t a = 0; a < C; ++a) dot += q[t * C + a] * k[u * C + a];
            probs[t * T + u] = dot * inv_sqrt_d;
        }
        softmax_in_place(&probs[t * T], T);
    }
    return probs;
}

}  // namespace detail

// Diagnostic view of the mock attention: the softmax rows it would use for
// one site. Shares the exact computation path of mock_temporal_attention.
inline std::vector<double> attention_probabilities(const FeatureTensor& x,
                                                   const AttentionParams& params,
                                                   std::size_t site) {
    if (x.layout != FeatureLayout::FrameMajor || params.channels != x.channels ||
        site >= x.sites) {
        throw ShapeError("attention_probabilities: bad arguments");
    }
    return detail::site_attention_probs(x, detail::attention_maps(params.seed, params.channels),
                                        params.lambda, site);
}

// Deterministic stand-in for a trained temporal attention layer: one head,
// fixed random orthogonal query/key/value maps drawn from params.seed,
// softmax over frames, evaluated independently per site. params.lambda
// scales the queries before the softmax, which can only sharpen it.
inline FeatureTensor mock_temporal_attention(const FeatureTensor& x,
                                             const AttentionParams& params) {
    if (x.layout != FeatureLayout::FrameMajor) {
        throw ShapeError("mock_temporal_attention: input must be frame-major");
    }
    if (params.channels != x.channels) {
        throw ShapeError("mock_temporal_attention: params.channels=" +
                         std::to_string(params.channels) + " but tensor has " +
                         std::to_string(x.channels));
    }
    require_finite(x.data, "mock_temporal_attention");

    const std::size_t T = x.frames;
    const std::size_t S = x.sites;
    const std::size_t C = x.channels;
    const detail::AttentionMaps maps = detail::attention_maps(params.seed, C);

    FeatureTensor out(T, S, C, FeatureLayout::FrameMajor);
    std::vector<double> v(T * C);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t a = 0; a < C; ++a) {
                double av = 0.0;
                for (std::size_t b = 0; b < C; ++b) av += maps.wv[a * C + b] * x.at(t, s, b);
                v[t * C + a] = av;
            }
        }
        const std::vector<double> probs = detail::site_attention_probs(x, maps, params.lambda, s);
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t a = 0; a < C; ++a) {
                double acc = 0.0;
                for (std::size_t u = 0; u < T; ++u) acc += probs[t * T + u] * v[u * C + a];
                out.at(t, s, a) = acc;
            }
        }
    }
    return out;
}

// The two temporal-attention pathways for one window: `global` is the
// full-sequence result sliced to the window, `local` is attention run on the
// sliced input alone.
struct WindowPathways {
    WindowSpec window;
    FeatureTensor global;
    FeatureTensor local;
};

// Global pathway: attention once over all F frames with the entropy-scaled
// query amplification, then slice per window. Local pathway: slice first,
// then attention per window with lambda = 1. Both paths share the projection
// maps drawn from params.seed; params.lambda is ignored here because the
// scaling is fixed by (F, f).
inline std::vector<WindowPathways> global_local_features(const FeatureTensor& x,
                                                         const WindowPlan& plan,
                                                         const AttentionParams& params) {
    if (x.layout != FeatureLayout::FrameMajor || x.frames != plan.total_frames) {
        throw ShapeError("global_local_features: tensor " + x.dims_string() +
                         " does not match plan F=" + std::to_string(plan.total_frames));
    }

    AttentionParams global_params = params;
    global_params.lambda = plan.total_frames == plan.window_frames
                               ? 1.0
                               : entropy_scale(plan.total_frames, plan.window_frames);
    AttentionParams local_params = params;
    local_params.lambda = 1.0;

    const FeatureTensor global_full = mock_temporal_attention(x, global_params);

    std::vector<WindowPathways> out;
    out.reserve(plan.windows.size());
    for (const WindowSpec& w : plan.windows) {
        WindowPathways p;
        p.window = w;
        p.global = slice_frames(global_full, w.start, w.end);
        p.local = mock_temporal_attention(slice_frames(x, w.start, w.end), local_params);
        out.push_back(std::move(p));
    }
    return out;
}

// Full per-window decomposition: basis fitted on the global slice only,
// both pathways projected with it, components ranked by cosine similarity
// and split at k.
struct WindowDecomposition {
    PcaBasis basis;
    ComponentSpace z_global;
    ComponentSpace z_local;
    SimilarityRanking ranking;
    ComponentSplit split;
};

inline WindowDecomposition decompose_window(const FeatureTensor& x_global,
                                            const FeatureTensor& x_local, std::size_t k) {
    if (!x_global.same_shape(x_local)) {
        throw ShapeError("decompose_window: pathway shapes differ, " + x_global.dims_string() +
                         " vs " + x_local.dims_string());
    }
    WindowDecomposition d;
    d.basis = fit_basis(x_global);
    d.z_global = project(d.basis, x_global);
    d.z_local = project(d.basis, x_local);
    d.ranking = component_cosine(d.z_global, d.z_local);
    d.split = split_components(d.z_global, d.z_local, d.ranking, k);
    return d;
}

}  // namespace freepca
