#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "freepca/errors.hpp"

namespace freepca {

inline void require_finite(const std::vector<double>& values, const char* what) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw ValueError(std::string(what) + ": non-finite value at flat index " +
                             std::to_string(i));
        }
    }
}

// Dense video volume, row-major frame-first: ((f*H + h)*W + w)*C + c.
// This is the one canonical memory order; every other layout in the library
// is an explicit, named permutation of it.
struct VideoTensor {
    std::size_t frames = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    std::vector<double> data;

    VideoTensor() = default;
    VideoTensor(std::size_t f, std::size_t h, std::size_t w, std::size_t c)
        : frames(f), height(h), width(w), channels(c) {
        if (f < 1 || h < 1 || w < 1 || c < 1) {
            throw ShapeError("VideoTensor: all dims must be >= 1, got " + dims_string());
        }
        data.assign(f * h * w * c, 0.0);
    }

    std::size_t size() const { return frames * height * width * channels; }

    std::size_t offset(std::size_t f, std::size_t h, std::size_t w, std::size_t c) const {
        return ((f * height + h) * width + w) * channels + c;
    }
    double& at(std::size_t f, std::size_t h, std::size_t w, std::size_t c) {
        return data[offset(f, h, w, c)];
    }
    double at(std::size_t f, std::size_t h, std::size_t w, std::size_t c) const {
        return data[offset(f, h, w, c)];
    }

    bool same_shape(const VideoTensor& o) const {
        return frames == o.frames && height == o.height && width == o.width &&
               channels == o.channels;
    }

    std::string dims_string() const {
        return "(" + std::to_string(frames) + "x" + std::to_string(height) + "x" +
               std::to_string(width) + "x" + std::to_string(channels) + ")";
    }
};

// Storage order of a feature block. FrameMajor is the PCA layout
// (frames, sites, channels); SiteMajor is the attention-input layout
// (sites, frames, channels) with sites = b*h*w collapsed.
enum class FeatureLayout { FrameMajor, SiteMajor };

// Temporal-attention feature block. Element (t, s, c) is addressable in
// either layout; `layout` only selects the memory order.
struct FeatureTensor {
    FeatureLayout layout = FeatureLayout::FrameMajor;
    std::size_t frames = 0;
    std::size_t sites = 0;
    std::size_t channels = 0;
    std::vector<double> data;

    FeatureTensor() = default;
    FeatureTensor(std::size_t t, std::size_t s, std::size_t c,
                  FeatureLayout l = FeatureLayout::FrameMajor)
        : layout(l), frames(t), sites(s), channels(c) {
        if (t < 1 || s < 1 || c < 1) {
            throw ShapeError("FeatureTensor: all dims must be >= 1, got " + dims_string());
        }
        data.assign(t * s * c, 0.0);
    }

    std::size_t size() const { return frames * sites * channels; }

    std::size_t offset(std::size_t t, std::size_t s, std::size_t c) const {
        return layout == FeatureLayout::FrameMajor ? (t * sites + s) * channels + c
                                                   : (s * frames + t) * channels + c;
    }
    double& at(std::size_t t, std::size_t s, std::size_t c) { return data[offset(t, s, c)]; }
    double at(std::size_t t, std::size_t s, std::size_t c) const { return data[offset(t, s, c)]; }

    bool same_shape(const FeatureTensor& o) const {
        return frames == o.frames && sites == o.sites && channels == o.channels &&
               layout == o.layout;
    }

    std::string dims_string() const {
        return "(" + std::to_string(frames) + "x" + std::to_string(sites) + "x" +
               std::to_string(channels) + ")";
    }
};

// Axis permutation (sites, frames, channels) -> (frames, sites, channels).
// Pure data movement; reshape_from_pca composes with it to the identity.
inline FeatureTensor reshape_for_pca(const FeatureTensor& x) {
    if (x.layout != FeatureLayout::SiteMajor) {
        throw ShapeError("reshape_for_pca: input must be site-major " + x.dims_string());
    }
    FeatureTensor out(x.frames, x.sites, x.channels, FeatureLayout::FrameMajor);
    for (std::size_t t = 0; t < x.frames; ++t)
        for (std::size_t s = 0; s < x.sites; ++s)
            for (std::size_t c = 0; c < x.channels; ++c) out.at(t, s, c) = x.at(t, s, c);
    return out;
}

inline FeatureTensor reshape_from_pca(const FeatureTensor& x) {
    if (x.layout != FeatureLayout::FrameMajor) {
        throw ShapeError("reshape_from_pca: input must be frame-major " + x.dims_string());
    }
    FeatureTensor out(x.frames, x.sites, x.channels, FeatureLayout::SiteMajor);
    for (std::size_t t = 0; t < x.frames; ++t)
        for (std::size_t s = 0; s < x.sites; ++s)
            for (std::size_t c = 0; c < x.channels; ++c) out.at(t, s, c) = x.at(t, s, c);
    return out;
}

// F x H x W x C -> F x (H*W) x C. The video order is already frame-first,
// so this is a reinterpretation of the same linear data.
inline FeatureTensor features_from_video(const VideoTensor& v) {
    FeatureTensor out(v.frames, v.height * v.width, v.channels, FeatureLayout::FrameMajor);
    out.data = v.data;
    return out;
}

inline VideoTensor video_from_features(const FeatureTensor& x, std::size_t height,
                                       std::size_t width) {
    if (x.layout != FeatureLayout::FrameMajor) {
        throw ShapeError("video_from_features: input must be frame-major");
    }
    if (height * width != x.sites) {
        throw ShapeError("video_from_features: " + std::to_string(height) + "x" +
                         std::to_string(width) + " does not match sites=" +
                         std::to_string(x.sites));
    }
    VideoTensor out(x.frames, height, width, x.channels);
    out.data = x.data;
    return out;
}

// Rows [start, end) of a frame-major feature block.
inline FeatureTensor slice_frames(const FeatureTensor& x, std::size_t start, std::size_t end) {
    if (x.layout != FeatureLayout::FrameMajor) {
        throw ShapeError("slice_frames: input must be frame-major");
    }
    if (start >= end || end > x.frames) {
        throw ShapeError("slice_frames: [" + std::to_string(start) + ", " +
                         std::to_string(end) + ") out of range for frames=" +
                         std::to_string(x.frames));
    }
    FeatureTensor out(end - start, x.sites, x.channels, FeatureLayout::FrameMajor);
    const std::size_t row = x.sites * x.channels;
    std::copy(x.data.begin() + static_cast<std::ptrdiff_t>(start * row),
              x.data.begin() + static_cast<std::ptrdiff_t>(end * row), out.data.begin());
    return out;
}

}  // namespace freepca
