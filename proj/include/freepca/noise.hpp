#pragma once

#include <cstdint>
#include <vector>

#include "freepca/errors.hpp"
#include "freepca/rng.hpp"
#include "freepca/tensor.hpp"

namespace freepca {

// Initial Gaussian noise with its block bookkeeping. shuffle_perms[b][t] is
// the source frame (within block b) that produced output frame t; block 0 is
// never shuffled and keeps the identity.
struct NoiseSequence {
    VideoTensor frames;
    std::size_t block_size = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<std::size_t>> shuffle_perms;
};

// Which mean is reused across blocks: the per-site temporal mean map
// (default, one value per (h, w, c)) or a single scalar per block.
enum class MeanMode { PerSite, Scalar };

inline NoiseSequence sample_noise(std::size_t frames, std::size_t height, std::size_t width,
                                  std::size_t channels, std::uint64_t seed) {
    NoiseSequence noise;
    noise.frames = VideoTensor(frames, height, width, channels);
    noise.block_size = frames;  // one block until a block op imposes f
    noise.seed = seed;
    noise.shuffle_perms = {identity_permutation(frames)};
    Rng rng(seed);
    for (double& v : noise.frames.data) v = rng.next_normal();
    return noise;
}

namespace detail {

inline std::size_t block_count(std::size_t total, std::size_t block) {
    return (total + block - 1) / block;
}

}  // namespace detail

// Every block after the first has its temporal mean replaced by the first
// block's: eps' = eps - mean(block) + mean(first f frames). A trailing
// partial block is processed with its own length so the whole sequence is
// covered. Idempotent up to round-off, and a no-op on frames 1..f.
inline NoiseSequence reuse_mean(NoiseSequence noise, std::size_t block,
                                MeanMode mode = MeanMode::PerSite) {
    const std::size_t F = noise.frames.frames;
    if (block < 1 || F < block) {
        throw DomainError("reuse_mean: need 1 <= f <= F, got f=" + std::to_string(block) +
                          " F=" + std::to_string(F));
    }
    VideoTensor& v = noise.frames;
    const std::size_t sites = v.height * v.width * v.channels;  // one frame's scalars

    auto site_means = [&](std::size_t start, std::size_t len) {
        std::vector<double> mean(sites, 0.0);
        for (std::size_t t = start; t < start + len; ++t) {
            const double* frame = &v.data[t * sites];
            for (std::size_t e = 0; e < sites; ++e) mean[e] += frame[e];
        }
        const double inv = 1.0 / static_cast<double>(len);
        for (double& m : mean) m *= inv;
        return mean;
    };
    auto scalar_mean = [&](std::size_t start, std::size_t len) {
        double acc = 0.0;
        for (std::size_t t = start; t < start + len; ++t) {
            const double* frame = &v.data[t * sites];
            for (std::size_t e = 0; e < sites; ++e) acc += frame[e];
        }
        return acc / static_cast<double>(len * sites);
    };

    if (mode == MeanMode::PerSite) {
        const std::vector<double> first = site_means(0, block);
        for (std::size_t start = block; start < F; start += block) {
            const std::size_t len = std::min(block, F - start);
            const std::vector<double> own = site_means(start, len);
            for (std::size_t t = start; t < start + len; ++t) {
                double* frame = &v.data[t * sites];
                for (std::size_t e = 0; e < sites; ++e) frame[e] += first[e] - own[e];
            }
        }
    } else {
        const double first = scalar_mean(0, block);
        for (std::size_t start = block; start < F; start += block) {
            const std::size_t len = std::min(block, F - start);
            const double shift = first - scalar_mean(start, len);
            for (std::size_t t = start; t < start + len; ++t) {
                double* frame = &v.data[t * sites];
                for (std::size_t e = 0; e < sites; ++e) frame[e] += shift;
            }
        }
    }

    noise.block_size = block;
    noise.shuffle_perms.clear();
    for (std::size_t start = 0; start < F; start += block) {
        noise.shuffle_perms.push_back(identity_permutation(std::min(block, F - start)));
    }
    return noise;
}

// A/B baseline for the mean-reuse ablation: later blocks become verbatim
// copies of the first block's frames (truncated for a partial tail).
inline NoiseSequence direct_reuse(NoiseSequence noise, std::size_t block) {
    const std::size_t F = noise.frames.frames;
    if (block < 1 || F < block) {
        throw DomainError("direct_reuse: need 1 <= f <= F, got f=" + std::to_string(block) +
                          " F=" + std::to_string(F));
    }
    VideoTensor& v = noise.frames;
    const std::size_t sites = v.height * v.width * v.channels;
    for (std::size_t start = block; start < F; start += block) {
        const std::size_t len = std::min(block, F - start);
        std::copy_n(v.data.begin(), len * sites,
                    v.data.begin() + static_cast<std::ptrdiff_t>(start * sites));
    }
    noise.block_size = block;
    noise.shuffle_perms.clear();
    for (std::size_t start = 0; start < F; start += block) {
        noise.shuffle_perms.push_back(identity_permutation(std::min(block, F - start)));
    }
    return noise;
}

// Frame order within every block after the first is permuted by a seeded
// uniform shuffle; permutations derive from (seed, block index) so blocks
// are independent and individually reproducible.
inline NoiseSequence shuffle_blocks(NoiseSequence noise, std::size_t block,
                                    std::uint64_t seed) {
    const std::size_t F = noise.frames.frames;
    if (block < 1 || F < block) {
        throw DomainError("shuffle_blocks: need 1 <= f <= F, got f=" + std::to_string(block) +
                          " F=" + std::to_string(F));
    }
    VideoTensor& v = noise.frames;
    const std::size_t sites = v.height * v.width * v.channels;

    noise.block_size = block;
    noise.shuffle_perms.assign(detail::block_count(F, block), {});
    noise.shuffle_perms[0] = identity_permutation(std::min(block, F));

    std::vector<double> scratch;
    std::size_t index = 1;
    for (std::size_t start = block; start < F; start += block, ++index) {
        const std::size_t len = std::min(block, F - start);
        Rng rng(derive_seed(seed, index));
        const std::vector<std::size_t> perm = random_permutation(len, rng);

        scratch.assign(v.data.begin() + static_cast<std::ptrdiff_t>(start * sites),
                       v.data.begin() + static_cast<std::ptrdiff_t>((start + len) * sites));
        for (std::size_t t = 0; t < len; ++t) {
            std::copy_n(scratch.begin() + static_cast<std::ptrdiff_t>(perm[t] * sites), sites,
                        v.data.begin() + static_cast<std::ptrdiff_t>((start + t) * sites));
        }
        noise.shuffle_perms[index] = perm;
    }
    return noise;
}

}  // namespace freepca
