#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "freepca/errors.hpp"
#include "freepca/rng.hpp"
#include "freepca/symmetric_eigen.hpp"
#include "freepca/tensor.hpp"
#include "freepca/tensor_io.hpp"

namespace freepca {

// Orthonormal temporal basis fitted on one feature block. Row t of
// `components` is the t-th principal component; rows are sorted by
// descending eigenvalue and sign-fixed so their largest-magnitude entry is
// positive. `center` is the per-frame sample mean used for covariance
// estimation only: projection multiplies raw features, which keeps
// transpose-reconstruction an exact inverse.
struct PcaBasis {
    std::size_t frames = 0;
    std::vector<double> components;   // frames x frames, row-major
    std::vector<double> eigenvalues;  // descending, clamped at >= 0
    std::vector<double> center;
    std::uint64_t id = 0;             // content hash; projections carry it

    double component(std::size_t t, std::size_t u) const { return components[t * frames + u]; }
};

// A feature block expressed in a basis' principal component space. The
// frame axis of `z` indexes components of `basis_id`, not time.
struct ComponentSpace {
    FeatureTensor z;
    std::uint64_t basis_id = 0;
};

struct SimilarityRanking {
    std::vector<double> similarities;   // per component, in [-1, 1]
    std::vector<std::size_t> order;     // descending similarity, ties by index
};

// One component row lifted out of a ComponentSpace, flattened over
// (sites x channels) and remembering its original component index.
struct ComponentSlice {
    std::size_t component = 0;
    std::vector<double> values;
};

// Partition of the f components: the consistency set is taken from the
// global projection, the motion set from the local projection, and the two
// index sets are disjoint with union {0..f-1}.
struct ComponentSplit {
    std::size_t frames = 0;
    std::size_t sites = 0;
    std::size_t channels = 0;
    std::vector<ComponentSlice> consistency;
    std::vector<ComponentSlice> motion;
    std::uint64_t basis_id = 0;
};

struct FitOptions {
    // Standardize per-frame variance before the eigendecomposition
    // (correlation instead of covariance). Off by default; projection is
    // unaffected either way.
    bool whiten = false;
};

namespace detail {

inline std::uint64_t basis_content_id(std::size_t frames, const std::vector<double>& rows) {
    std::uint64_t h = fnv1a64(&frames, sizeof frames);
    return fnv1a64(rows.data(), rows.size() * sizeof(double), h);
}

inline std::size_t argmax_abs(const double* row, std::size_t n) {
    std::size_t best = 0;
    double best_abs = std::abs(row[0]);
    for (std::size_t j = 1; j < n; ++j) {
        const double a = std::abs(row[j]);
        if (a > best_abs) {
            best_abs = a;
            best = j;
        }
    }
    return best;
}

}  // namespace detail

inline PcaBasis fit_basis(const FeatureTensor& x, FitOptions options = {}) {
    if (x.layout != FeatureLayout::FrameMajor) {
        throw ShapeError("fit_basis: input must be frame-major " + x.dims_string());
    }
    if (x.frames < 2) {
        throw DomainError("fit_basis: need at least 2 frames, got " +
                          std::to_string(x.frames));
    }
    require_finite(x.data, "fit_basis");

    const std::size_t f = x.frames;
    const std::size_t samples = x.sites * x.channels;  // one sample per (site, channel)
    const double inv_n = 1.0 / static_cast<double>(samples);

    PcaBasis basis;
    basis.frames = f;
    basis.center.assign(f, 0.0);
    for (std::size_t t = 0; t < f; ++t) {
        double acc = 0.0;
        for (std::size_t s = 0; s < x.sites; ++s)
            for (std::size_t c = 0; c < x.channels; ++c) acc += x.at(t, s, c);
        basis.center[t] = acc * inv_n;
    }

    std::vector<double> scale(f, 1.0);
    if (options.whiten) {
        for (std::size_t t = 0; t < f; ++t) {
            double acc = 0.0;
            for (std::size_t s = 0; s < x.sites; ++s)
                for (std::size_t c = 0; c < x.channels; ++c) {
                    const double d = x.at(t, s, c) - basis.center[t];
                    acc += d * d;
                }
            const double sd = std::sqrt(acc * inv_n);
            scale[t] = sd > 1e-12 ? 1.0 / sd : 1.0;
        }
    }

    // population covariance over the (site, channel) samples
    std::vector<double> cov(f * f, 0.0);
    std::vector<double> dev(f);
    double max_abs_value = 0.0;
    for (std::size_t s = 0; s < x.sites; ++s) {
        for (std::size_t c = 0; c < x.channels; ++c) {
            for (std::size_t t = 0; t < f; ++t) {
                dev[t] = (x.at(t, s, c) - basis.center[t]) * scale[t];
                max_abs_value = std::max(max_abs_value, std::abs(x.at(t, s, c)));
            }
            for (std::size_t a = 0; a < f; ++a)
                for (std::size_t b = a; b < f; ++b) cov[a * f + b] += dev[a] * dev[b];
        }
    }
    double max_abs_cov = 0.0;
    for (std::size_t a = 0; a < f; ++a) {
        for (std::size_t b = a; b < f; ++b) {
            cov[a * f + b] *= inv_n;
            cov[b * f + a] = cov[a * f + b];
            max_abs_cov = std::max(max_abs_cov, std::abs(cov[a * f + b]));
        }
    }

    // Degenerate block: every sample equals the per-frame mean. Any
    // orthonormal basis diagonalizes this; pick the identity so golden
    // files do not depend on round-off.
    const double zero_tol = 1e-28 * (1.0 + max_abs_value * max_abs_value);
    if (max_abs_cov <= zero_tol) {
        basis.eigenvalues.assign(f, 0.0);
        basis.components.assign(f * f, 0.0);
        for (std::size_t t = 0; t < f; ++t) basis.components[t * f + t] = 1.0;
        basis.id = detail::basis_content_id(f, basis.components);
        return basis;
    }

    const SymmetricEigen eig = jacobi_eigen_symmetric(cov, f);

    std::vector<std::size_t> order(f);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return eig.values[i] > eig.values[j];
    });

    // Near-equal eigenvalues leave the eigenvector order arbitrary; fix it
    // by the index of each vector's largest-magnitude entry.
    double lambda_max = 0.0;
    for (double v : eig.values) lambda_max = std::max(lambda_max, std::abs(v));
    const double tie_tol = 1e-9 * std::max(1.0, lambda_max);
    std::size_t group_start = 0;
    while (group_start < f) {
        std::size_t group_end = group_start + 1;
        while (group_end < f && std::abs(eig.values[order[group_start]] -
                                         eig.values[order[group_end]]) <= tie_tol) {
            ++group_end;
        }
        if (group_end - group_start > 1) {
            std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(group_start),
                             order.begin() + static_cast<std::ptrdiff_t>(group_end),
                             [&](std::size_t i, std::size_t j) {
                                 return detail::argmax_abs(&eig.vectors[i * f], f) <
                                        detail::argmax_abs(&eig.vectors[j * f], f);
                             });
        }
        group_start = group_end;
    }

    basis.eigenvalues.resize(f);
    basis.components.resize(f * f);
    for (std::size_t t = 0; t < f; ++t) {
        const std::size_t src = order[t];
        basis.eigenvalues[t] = std::max(0.0, eig.values[src]);
        double* row = &basis.components[t * f];
        std::copy_n(&eig.vectors[src * f], f, row);
        if (row[detail::argmax_abs(row, f)] < 0.0) {
            for (std::size_t j = 0; j < f; ++j) row[j] = -row[j];
        }
    }
    basis.id = detail::basis_content_id(f, basis.components);
    return basis;
}

// z = P x applied along the frame axis, on raw (uncentered) features.
inline ComponentSpace project(const PcaBasis& basis, const FeatureTensor& x) {
    if (x.layout != FeatureLayout::FrameMajor) {
        throw ShapeError("project: input must be frame-major " + x.dims_string());
    }
    if (x.frames != basis.frames) {
        throw ShapeError("project: frame count " + std::to_string(x.frames) +
                         " does not match basis f=" + std::to_string(basis.frames));
    }
    const std::size_t f = basis.frames;
    const std::size_t row = x.sites * x.channels;
    ComponentSpace out;
    out.z = FeatureTensor(f, x.sites, x.channels, FeatureLayout::FrameMajor);
    out.basis_id = basis.id;
    for (std::size_t t = 0; t < f; ++t) {
        double* dst = &out.z.data[t * row];
        for (std::size_t u = 0; u < f; ++u) {
            const double w = basis.component(t, u);
            if (w == 0.0) continue;
            const double* src = &x.data[u * row];
            for (std::size_t e = 0; e < row; ++e) dst[e] += w * src[e];
        }
    }
    return out;
}

// x = P^T z along the frame axis; exact inverse of project up to round-off
// because the rows of P are orthonormal.
inline FeatureTensor reconstruct(const PcaBasis& basis, const ComponentSpace& space) {
    const FeatureTensor& z = space.z;
    if (z.layout != FeatureLayout::FrameMajor) {
        throw ShapeError("reconstruct: input must be frame-major");
    }
    if (z.frames != basis.frames) {
        throw ShapeError("reconstruct: component count " + std::to_string(z.frames) +
                         " does not match basis f=" + std::to_string(basis.frames));
    }
    const std::size_t f = basis.frames;
    const std::size_t row = z.sites * z.channels;
    FeatureTensor out(f, z.sites, z.channels, FeatureLayout::FrameMajor);
    for (std::size_t u = 0; u < f; ++u) {
        double* dst = &out.data[u * row];
        for (std::size_t t = 0; t < f; ++t) {
            const double w = basis.component(t, u);
            if (w == 0.0) continue;
            const double* src = &z.data[t * row];
            for (std::size_t e = 0; e < row; ++e) dst[e] += w * src[e];
        }
    }
    return out;
}

// Per-component cosine similarity of two projections in the same basis.
// A component whose vector norm is below 1e-12 on either side counts as
// maximally dissimilar (similarity 0): a dead component carries no
// appearance information and must never be selected as consistency.
inline SimilarityRanking component_cosine(const ComponentSpace& a, const ComponentSpace& b) {
    if (!a.z.same_shape(b.z)) {
        throw ShapeError("component_cosine: shape mismatch " + a.z.dims_string() + " vs " +
                         b.z.dims_string());
    }
    if (a.basis_id != b.basis_id) {
        throw ConsistencyError("component_cosine: projections come from different bases");
    }
    const std::size_t f = a.z.frames;
    const std::size_t row = a.z.sites * a.z.channels;

    SimilarityRanking ranking;
    ranking.similarities.resize(f);
    for (std::size_t t = 0; t < f; ++t) {
        const double* pa = &a.z.data[t * row];
        const double* pb = &b.z.data[t * row];
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t e = 0; e < row; ++e) {
            dot += pa[e] * pb[e];
            na += pa[e] * pa[e];
            nb += pb[e] * pb[e];
        }
        const double norm_a = std::sqrt(na);
        const double norm_b = std::sqrt(nb);
        ranking.similarities[t] =
            (norm_a < 1e-12 || norm_b < 1e-12) ? 0.0 : dot / (norm_a * norm_b);
    }

    ranking.order.resize(f);
    std::iota(ranking.order.begin(), ranking.order.end(), std::size_t{0});
    std::sort(ranking.order.begin(), ranking.order.end(), [&](std::size_t i, std::size_t j) {
        if (ranking.similarities[i] != ranking.similarities[j]) {
            return ranking.similarities[i] > ranking.similarities[j];
        }
        return i < j;
    });
    return ranking;
}

// Consistency set = the k highest-similarity components of the global
// projection; motion set = the remaining f-k components of the local
// projection. Both keep their original component indices so the later
// scatter puts component t back against basis row t.
inline ComponentSplit split_components(const ComponentSpace& z_global,
                                       const ComponentSpace& z_local,
                                       const SimilarityRanking& ranking, std::size_t k) {
    if (!z_global.z.same_shape(z_local.z)) {
        throw ShapeError("split_components: shape mismatch");
    }
    if (z_global.basis_id != z_local.basis_id) {
        throw ConsistencyError("split_components: projections come from different bases");
    }
    const std::size_t f = z_global.z.frames;
    if (ranking.order.size() != f || ranking.similarities.size() != f) {
        throw ShapeError("split_components: ranking has wrong component count");
    }
    if (k > f) {
        throw DomainError("split_components: k=" + std::to_string(k) + " exceeds f=" +
                          std::to_string(f));
    }

    const std::size_t row = z_global.z.sites * z_global.z.channels;
    auto take = [row](const ComponentSpace& src, std::size_t t) {
        ComponentSlice slice;
        slice.component = t;
        slice.values.assign(src.z.data.begin() + static_cast<std::ptrdiff_t>(t * row),
                            src.z.data.begin() + static_cast<std::ptrdiff_t>((t + 1) * row));
        return slice;
    };

    ComponentSplit split;
    split.frames = f;
    split.sites = z_global.z.sites;
    split.channels = z_global.z.channels;
    split.basis_id = z_global.basis_id;
    split.consistency.reserve(k);
    split.motion.reserve(f - k);
    for (std::size_t r = 0; r < k; ++r) split.consistency.push_back(take(z_global, ranking.order[r]));
    for (std::size_t r = k; r < f; ++r) split.motion.push_back(take(z_local, ranking.order[r]));
    return split;
}

// Packed basis file: a (f+2) x f .ften holding the rows of P, then the
// eigenvalues, then the center vector.
inline void write_basis(const PcaBasis& basis, const std::string& path) {
    TensorData t;
    t.dims = {basis.frames + 2, basis.frames};
    t.values.reserve((basis.frames + 2) * basis.frames);
    t.values.insert(t.values.end(), basis.components.begin(), basis.components.end());
    t.values.insert(t.values.end(), basis.eigenvalues.begin(), basis.eigenvalues.end());
    t.values.insert(t.values.end(), basis.center.begin(), basis.center.end());
    write_tensor(t, path);
}

inline PcaBasis read_basis(const std::string& path) {
    const TensorData t = read_tensor(path);
    if (t.dims.size() != 2 || t.dims[0] != t.dims[1] + 2) {
        throw FormatError(path + ": not a packed basis file");
    }
    const auto f = static_cast<std::size_t>(t.dims[1]);
    PcaBasis basis;
    basis.frames = f;
    basis.components.assign(t.values.begin(), t.values.begin() + static_cast<std::ptrdiff_t>(f * f));
    basis.eigenvalues.assign(t.values.begin() + static_cast<std::ptrdiff_t>(f * f),
                             t.values.begin() + static_cast<std::ptrdiff_t>(f * f + f));
    basis.center.assign(t.values.begin() + static_cast<std::ptrdiff_t>(f * f + f), t.values.end());

    // f32 storage costs ~1e-7 of orthonormality; anything worse is not a basis
    double max_dev = 0.0;
    for (std::size_t i = 0; i < f; ++i) {
        for (std::size_t j = 0; j < f; ++j) {
            double dot = 0.0;
            for (std::size_t u = 0; u < f; ++u)
                dot += basis.component(i, u) * basis.component(j, u);
            max_dev = std::max(max_dev, std::abs(dot - (i == j ? 1.0 : 0.0)));
        }
    }
    if (max_dev > 1e-4) {
        throw FormatError(path + ": stored components are not orthonormal (max deviation " +
                          std::to_string(max_dev) + ")");
    }
    basis.id = detail::basis_content_id(f, basis.components);
    return basis;
}

inline void write_ranking_csv(const SimilarityRanking& ranking, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("write_ranking_csv: cannot open " + path);
    std::vector<std::size_t> rank_of(ranking.order.size());
    for (std::size_t r = 0; r < ranking.order.size(); ++r) rank_of[ranking.order[r]] = r;
    out << "component_index,similarity,rank\n";
    out.precision(17);
    for (std::size_t t = 0; t < ranking.similarities.size(); ++t) {
        out << t << ',' << ranking.similarities[t] << ',' << rank_of[t] << '\n';
    }
    if (!out) throw IoError("write_ranking_csv: short write to " + path);
}

}  // namespace freepca
