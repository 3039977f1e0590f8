#pragma once

// Independent oracles used by the test suites. Everything here recomputes
// results from first principles (loops, closed forms, bisection) and stays
// off the library's code paths for the quantities it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "freepca/tensor.hpp"

namespace oracles {

// Closed-form eigendecomposition of a symmetric 2x2 [[a, b], [b, d]].
// Returns eigenvalues descending and unit eigenvectors as rows.
struct Eigen2 {
    double values[2];
    double vectors[2][2];
};

inline Eigen2 eigen2x2(double a, double b, double d) {
    Eigen2 out{};
    const double tr = a + d;
    const double disc = std::sqrt(std::max(0.0, (a - d) * (a - d) + 4.0 * b * b));
    out.values[0] = 0.5 * (tr + disc);
    out.values[1] = 0.5 * (tr - disc);
    for (int i = 0; i < 2; ++i) {
        // (A - lambda I) v = 0; pick the better-conditioned row
        double vx, vy;
        if (std::abs(b) > 1e-300) {
            vx = b;
            vy = out.values[i] - a;
        } else {
            vx = (i == 0) == (a >= d) ? 1.0 : 0.0;
            vy = 1.0 - vx;
        }
        const double n = std::hypot(vx, vy);
        out.vectors[i][0] = vx / n;
        out.vectors[i][1] = vy / n;
    }
    return out;
}

// Number of eigenvalues of symmetric A strictly below x, from the inertia of
// A - x I (sign changes of the leading-principal-minor sequence of the
// shifted characteristic problem, computed by symmetric elimination).
// Elimination without pivoting breaks down when x is (numerically) a root of
// a leading principal minor; the count is then taken at a jittered query
// point instead, which a bisection caller cannot distinguish.
inline std::size_t eigen_count_below(const std::vector<double>& a, std::size_t n, double x) {
    double scale = std::abs(x);
    for (double v : a) scale = std::max(scale, std::abs(v));
    const double breakdown_tol = 1e-11 * (scale + 1e-300);

    std::size_t negatives = 0;
    for (int attempt = 0; attempt < 60; ++attempt) {
        const double query = x + static_cast<double>(attempt) * 4.0 * breakdown_tol;
        std::vector<double> work = a;
        for (std::size_t i = 0; i < n; ++i) work[i * n + i] -= query;

        negatives = 0;
        bool breakdown = false;
        for (std::size_t k = 0; k < n && !breakdown; ++k) {
            const double pivot = work[k * n + k];
            if (std::abs(pivot) <= breakdown_tol) {
                breakdown = true;
                break;
            }
            if (pivot < 0.0) ++negatives;
            for (std::size_t i = k + 1; i < n; ++i) {
                const double factor = work[i * n + k] / pivot;
                for (std::size_t j = k + 1; j < n; ++j)
                    work[i * n + j] -= factor * work[k * n + j];
            }
        }
        if (!breakdown) return negatives;
    }
    return negatives;
}

// All eigenvalues of symmetric A by bisection on the count function,
// bracketed by Gershgorin discs. Returned in descending order.
inline std::vector<double> eigenvalues_by_bisection(const std::vector<double>& a,
                                                    std::size_t n) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double radius = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) radius += std::abs(a[i * n + j]);
        lo = std::min(lo, a[i * n + i] - radius);
        hi = std::max(hi, a[i * n + i] + radius);
    }
    lo -= 1.0;
    hi += 1.0;

    std::vector<double> ascending(n);
    for (std::size_t k = 0; k < n; ++k) {
        double xlo = lo, xhi = hi;
        for (int iter = 0; iter < 120; ++iter) {
            const double mid = 0.5 * (xlo + xhi);
            if (eigen_count_below(a, n, mid) >= k + 1) {
                xhi = mid;
            } else {
                xlo = mid;
            }
        }
        ascending[k] = 0.5 * (xlo + xhi);
    }
    std::reverse(ascending.begin(), ascending.end());
    return ascending;
}

// Per-frame mean and population covariance of a frame-major block, by
// direct loops over the (site, channel) samples.
struct CovarianceOracle {
    std::vector<double> center;  // f
    std::vector<double> cov;     // f x f
};

inline CovarianceOracle covariance_by_loops(const freepca::FeatureTensor& x) {
    const std::size_t f = x.frames;
    const std::size_t samples = x.sites * x.channels;
    CovarianceOracle out;
    out.center.assign(f, 0.0);
    out.cov.assign(f * f, 0.0);
    for (std::size_t t = 0; t < f; ++t) {
        double acc = 0.0;
        for (std::size_t s = 0; s < x.sites; ++s)
            for (std::size_t c = 0; c < x.channels; ++c) acc += x.at(t, s, c);
        out.center[t] = acc / static_cast<double>(samples);
    }
    for (std::size_t a = 0; a < f; ++a)
        for (std::size_t b = 0; b < f; ++b) {
            double acc = 0.0;
            for (std::size_t s = 0; s < x.sites; ++s)
                for (std::size_t c = 0; c < x.channels; ++c)
                    acc += (x.at(a, s, c) - out.center[a]) * (x.at(b, s, c) - out.center[b]);
            out.cov[a * f + b] = acc / static_cast<double>(samples);
        }
    return out;
}

// Shannon entropy of a probability row, in nats.
inline double row_entropy(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace oracles
