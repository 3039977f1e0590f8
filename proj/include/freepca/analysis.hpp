#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <string>
#include <vector>

#include "freepca/decompose.hpp"
#include "freepca/errors.hpp"
#include "freepca/pca.hpp"
#include "freepca/tensor.hpp"

namespace freepca {

inline constexpr double kPsnrCapDb = 99.0;
inline constexpr double kDefaultConsistencyThresholdDb = 35.0;

enum class VideoClass { HighConsistency, LowConsistency };

struct ComponentPsnr {
    std::size_t component = 0;
    double psnr_db = 0.0;
    bool is_consistent = false;
};

struct ConsistencyReport {
    std::vector<ComponentPsnr> per_component;
    double threshold_db = kDefaultConsistencyThresholdDb;
    double peak = 1.0;
    VideoClass video_class = VideoClass::LowConsistency;

    std::size_t consistent_count() const {
        std::size_t n = 0;
        for (const ComponentPsnr& c : per_component) n += c.is_consistent ? 1 : 0;
        return n;
    }
};

// PSNR peak convention: the input's own dynamic range (synthetic tensors
// are not 8-bit images), or a fixed 1.0.
enum class PeakMode { Range, One };

inline double psnr(const VideoTensor& a, const VideoTensor& b, double peak) {
    if (!a.same_shape(b)) {
        throw ShapeError("psnr: shape mismatch " + a.dims_string() + " vs " + b.dims_string());
    }
    if (!(peak > 0.0)) throw DomainError("psnr: peak must be positive");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    const double mse = acc / static_cast<double>(a.data.size());
    if (mse == 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(peak * peak / mse));
}

inline double dynamic_range_peak(const VideoTensor& v) {
    const auto [lo, hi] = std::minmax_element(v.data.begin(), v.data.end());
    const double range = *hi - *lo;
    return range > 1e-12 ? range : 1.0;
}

namespace detail {

// Keep component t of the projection, zero the rest, map back with P^T.
inline VideoTensor single_component_video(const PcaBasis& basis, const ComponentSpace& space,
                                          std::size_t component, std::size_t height,
                                          std::size_t width) {
    const std::size_t row = space.z.sites * space.z.channels;
    ComponentSpace only;
    only.basis_id = space.basis_id;
    only.z = FeatureTensor(space.z.frames, space.z.sites, space.z.channels,
                           FeatureLayout::FrameMajor);
    std::copy_n(space.z.data.begin() + static_cast<std::ptrdiff_t>(component * row), row,
                only.z.data.begin() + static_cast<std::ptrdiff_t>(component * row));
    return video_from_features(reconstruct(basis, only), height, width);
}

}  // namespace detail

// Project the video on its own temporal basis (each pixel site is one
// sample), keep a single component, reconstruct.
inline VideoTensor per_component_video(const VideoTensor& video, std::size_t component) {
    if (component >= video.frames) {
        throw DomainError("per_component_video: component " + std::to_string(component) +
                          " out of range for " + std::to_string(video.frames) + " frames");
    }
    const FeatureTensor features = features_from_video(video);
    const PcaBasis basis = fit_basis(features);
    const ComponentSpace space = project(basis, features);
    return detail::single_component_video(basis, space, component, video.height, video.width);
}

inline ConsistencyReport classify_components(const VideoTensor& video,
                                             double threshold_db = kDefaultConsistencyThresholdDb,
                                             PeakMode peak_mode = PeakMode::Range) {
    const FeatureTensor features = features_from_video(video);
    const PcaBasis basis = fit_basis(features);  // rejects single-frame videos
    const ComponentSpace space = project(basis, features);

    ConsistencyReport report;
    report.threshold_db = threshold_db;
    report.peak = peak_mode == PeakMode::Range ? dynamic_range_peak(video) : 1.0;
    report.per_component.reserve(video.frames);
    bool any = false;
    for (std::size_t t = 0; t < video.frames; ++t) {
        const VideoTensor rec =
            detail::single_component_video(basis, space, t, video.height, video.width);
        const double db = psnr(rec, video, report.peak);
        const bool consistent = db >= threshold_db;
        any = any || consistent;
        report.per_component.push_back({t, db, consistent});
    }
    report.video_class = any ? VideoClass::HighConsistency : VideoClass::LowConsistency;
    return report;
}

struct GrayImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> pixels;  // in [0, 1]

    double at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
    double& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
};

struct EdgeParams {
    double sigma = 1.4;        // Gaussian blur before the gradients
    double low_ratio = 0.1;    // hysteresis thresholds as fractions of the
    double high_ratio = 0.2;   // max suppressed gradient magnitude
};

namespace detail {

inline GrayImage channel_mean_frame(const VideoTensor& v, std::size_t frame) {
    GrayImage img{v.height, v.width, std::vector<double>(v.height * v.width, 0.0)};
    const double inv_c = 1.0 / static_cast<double>(v.channels);
    for (std::size_t y = 0; y < v.height; ++y)
        for (std::size_t x = 0; x < v.width; ++x) {
            double acc = 0.0;
            for (std::size_t c = 0; c < v.channels; ++c) acc += v.at(frame, y, x, c);
            img.at(y, x) = acc * inv_c;
        }
    return img;
}

inline GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += kernel[i + radius];
    }
    for (double& k : kernel) k /= sum;

    const int H = static_cast<int>(img.height);
    const int W = static_cast<int>(img.width);
    auto clampi = [](int v, int hi) { return std::clamp(v, 0, hi - 1); };

    GrayImage tmp{img.height, img.width, std::vector<double>(img.pixels.size(), 0.0)};
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * img.at(y, clampi(x + i, W));
            tmp.at(y, x) = acc;
        }
    GrayImage out{img.height, img.width, std::vector<double>(img.pixels.size(), 0.0)};
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * tmp.at(clampi(y + i, H), x);
            out.at(y, x) = acc;
        }
    return out;
}

// Canny-style binary edge map: blur, Sobel, non-maximum suppression along
// the quantized gradient direction, double threshold, hysteresis grow.
inline GrayImage edge_map(const GrayImage& frame, const EdgeParams& params) {
    const int H = static_cast<int>(frame.height);
    const int W = static_cast<int>(frame.width);
    const GrayImage smooth = gaussian_blur(frame, params.sigma);
    auto clampi = [](int v, int hi) { return std::clamp(v, 0, hi - 1); };
    auto px = [&](int y, int x) { return smooth.at(clampi(y, H), clampi(x, W)); };

    std::vector<double> mag(frame.pixels.size(), 0.0);
    std::vector<double> dir(frame.pixels.size(), 0.0);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double gx = px(y - 1, x + 1) + 2.0 * px(y, x + 1) + px(y + 1, x + 1) -
                              px(y - 1, x - 1) - 2.0 * px(y, x - 1) - px(y + 1, x - 1);
            const double gy = px(y + 1, x - 1) + 2.0 * px(y + 1, x) + px(y + 1, x + 1) -
                              px(y - 1, x - 1) - 2.0 * px(y - 1, x) - px(y - 1, x + 1);
            mag[y * W + x] = std::hypot(gx, gy);
            dir[y * W + x] = std::atan2(gy, gx);
        }

    std::vector<double> thin(frame.pixels.size(), 0.0);
    double max_mag = 0.0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double m = mag[y * W + x];
            if (m == 0.0) continue;
            // quantize direction to 0/45/90/135 degrees
            double angle = dir[y * W + x] * 180.0 / 3.14159265358979323846;
            if (angle < 0.0) angle += 180.0;
            int dy = 0, dx = 0;
            if (angle < 22.5 || angle >= 157.5) {
                dx = 1;
            } else if (angle < 67.5) {
                dy = 1;
                dx = 1;
            } else if (angle < 112.5) {
                dy = 1;
            } else {
                dy = 1;
                dx = -1;
            }
            const double m1 = mag[clampi(y + dy, H) * W + clampi(x + dx, W)];
            const double m2 = mag[clampi(y - dy, H) * W + clampi(x - dx, W)];
            if (m >= m1 && m >= m2) {
                thin[y * W + x] = m;
                max_mag = std::max(max_mag, m);
            }
        }

    GrayImage edges{frame.height, frame.width, std::vector<double>(frame.pixels.size(), 0.0)};
    if (max_mag == 0.0) return edges;
    const double high = params.high_ratio * max_mag;
    const double low = params.low_ratio * max_mag;

    std::deque<std::pair<int, int>> frontier;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            if (thin[y * W + x] >= high) {
                edges.at(y, x) = 1.0;
                frontier.emplace_back(y, x);
            }
    while (!frontier.empty()) {
        const auto [y, x] = frontier.front();
        frontier.pop_front();
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int ny = y + dy, nx = x + dx;
                if (ny < 0 || ny >= H || nx < 0 || nx >= W) continue;
                if (edges.at(ny, nx) == 0.0 && thin[ny * W + nx] >= low) {
                    edges.at(ny, nx) = 1.0;
                    frontier.emplace_back(ny, nx);
                }
            }
    }
    return edges;
}

}  // namespace detail

// Per-frame edge maps overlaid by per-pixel maximum. Concentrated edges
// mean the appearance stays put; a dispersed band means it moves.
inline GrayImage edge_overlay(const VideoTensor& video, const EdgeParams& params = {}) {
    if (video.height < 3 || video.width < 3) {
        throw DomainError("edge_overlay: frames must be at least 3x3, got " +
                          video.dims_string());
    }
    GrayImage overlay{video.height, video.width,
                      std::vector<double>(video.height * video.width, 0.0)};
    for (std::size_t t = 0; t < video.frames; ++t) {
        const GrayImage edges = detail::edge_map(detail::channel_mean_frame(video, t), params);
        for (std::size_t i = 0; i < overlay.pixels.size(); ++i) {
            overlay.pixels[i] = std::max(overlay.pixels[i], edges.pixels[i]);
        }
    }
    return overlay;
}

inline std::size_t nonzero_pixels(const GrayImage& img) {
    std::size_t n = 0;
    for (double p : img.pixels) n += p > 0.0 ? 1 : 0;
    return n;
}

// |frame(t+1) - frame(t)| element-wise; one slice per adjacent pair.
inline VideoTensor temporal_diff(const VideoTensor& v) {
    if (v.frames < 2) throw DomainError("temporal_diff: need at least 2 frames");
    VideoTensor out(v.frames - 1, v.height, v.width, v.channels);
    const std::size_t frame = v.height * v.width * v.channels;
    for (std::size_t t = 0; t + 1 < v.frames; ++t)
        for (std::size_t e = 0; e < frame; ++e)
            out.data[t * frame + e] = std::abs(v.data[(t + 1) * frame + e] - v.data[t * frame + e]);
    return out;
}

inline FeatureTensor temporal_diff(const FeatureTensor& x) {
    if (x.layout != FeatureLayout::FrameMajor) {
        throw ShapeError("temporal_diff: input must be frame-major");
    }
    if (x.frames < 2) throw DomainError("temporal_diff: need at least 2 frames");
    FeatureTensor out(x.frames - 1, x.sites, x.channels, FeatureLayout::FrameMajor);
    const std::size_t row = x.sites * x.channels;
    for (std::size_t t = 0; t + 1 < x.frames; ++t)
        for (std::size_t e = 0; e < row; ++e)
            out.data[t * row + e] = std::abs(x.data[(t + 1) * row + e] - x.data[t * row + e]);
    return out;
}

inline double mean_abs(const std::vector<double>& values) {
    double acc = 0.0;
    for (double v : values) acc += std::abs(v);
    return values.empty() ? 0.0 : acc / static_cast<double>(values.size());
}

// Mean adjacent-frame change of a frame-major block.
inline double mean_temporal_diff(const FeatureTensor& x) {
    return mean_abs(temporal_diff(x).data);
}

inline double mean_temporal_diff(const VideoTensor& v) {
    return mean_abs(temporal_diff(v).data);
}

// Motion-set comparison between the plain global and local attention
// pathways, the observation-report form of the decomposition: both pathways
// run with lambda = 1 (no query amplification), each window is split at
// k = min(index, k_max), and the motion components of each side are
// reconstructed alone. Reported are the mean adjacent-frame change and the
// mean magnitude of the two reconstructions.
struct MotionComparison {
    double diff_local_mean = 0.0;
    double diff_global_mean = 0.0;
    double value_local_mean = 0.0;
    double value_global_mean = 0.0;
};

inline MotionComparison compare_motion_sets(const FeatureTensor& x, const WindowPlan& plan,
                                            std::uint64_t attention_seed, std::size_t k_max) {
    const AttentionParams params{attention_seed, x.channels, 1.0};
    const FeatureTensor global_full = mock_temporal_attention(x, params);

    MotionComparison out;
    double diff_local = 0.0, diff_global = 0.0, value_local = 0.0, value_global = 0.0;
    std::size_t diff_count = 0, value_count = 0;

    for (const WindowSpec& w : plan.windows) {
        const FeatureTensor global_slice = slice_frames(global_full, w.start, w.end);
        const FeatureTensor local_window =
            mock_temporal_attention(slice_frames(x, w.start, w.end), params);
        const std::size_t k = std::min(w.index, k_max);
        const WindowDecomposition d = decompose_window(global_slice, local_window, k);

        const std::size_t row = d.split.sites * d.split.channels;
        auto motion_only = [&](const ComponentSpace& source) {
            ComponentSpace masked;
            masked.basis_id = source.basis_id;
            masked.z =
                FeatureTensor(d.split.frames, d.split.sites, d.split.channels);
            for (const ComponentSlice& slice : d.split.motion) {
                std::copy_n(
                    source.z.data.begin() + static_cast<std::ptrdiff_t>(slice.component * row),
                    row,
                    masked.z.data.begin() + static_cast<std::ptrdiff_t>(slice.component * row));
            }
            return reconstruct(d.basis, masked);
        };
        const FeatureTensor from_local = motion_only(d.z_local);
        const FeatureTensor from_global = motion_only(d.z_global);
        for (double v : temporal_diff(from_local).data) diff_local += std::abs(v);
        for (double v : temporal_diff(from_global).data) diff_global += std::abs(v);
        diff_count += (d.split.frames - 1) * row;
        for (double v : from_local.data) value_local += std::abs(v);
        for (double v : from_global.data) value_global += std::abs(v);
        value_count += d.split.frames * row;
    }
    if (diff_count > 0) {
        out.diff_local_mean = diff_local / static_cast<double>(diff_count);
        out.diff_global_mean = diff_global / static_cast<double>(diff_count);
    }
    if (value_count > 0) {
        out.value_local_mean = value_local / static_cast<double>(value_count);
        out.value_global_mean = value_global / static_cast<double>(value_count);
    }
    return out;
}

// Binary 8-bit PGM (P5). Values are clamped to [0, 1] and scaled to 255.
inline void write_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("write_pgm: cannot open " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    for (double p : img.pixels) {
        const double clamped = std::clamp(p, 0.0, 1.0);
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(clamped * 255.0))));
    }
    if (!out) throw IoError("write_pgm: short write to " + path);
}

inline const char* to_string(VideoClass c) {
    return c == VideoClass::HighConsistency ? "HighConsistency" : "LowConsistency";
}

inline void write_consistency_csv(const ConsistencyReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("write_consistency_csv: cannot open " + path);
    out << "component,psnr_db,is_consistent\n";
    out.precision(17);
    for (const ComponentPsnr& c : report.per_component) {
        out << c.component << ',' << c.psnr_db << ',' << (c.is_consistent ? 1 : 0) << '\n';
    }
    if (!out) throw IoError("write_consistency_csv: short write to " + path);
}

}  // namespace freepca
