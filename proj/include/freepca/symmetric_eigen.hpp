#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "freepca/errors.hpp"

namespace freepca {

// Eigenpairs of a dense symmetric matrix. values[i] pairs with row i of
// vectors (row-major n x n); pairs are returned in diagonal order, unsorted.
struct SymmetricEigen {
    std::vector<double> values;
    std::vector<double> vectors;
};

// Cyclic Jacobi rotations. Quadratically convergent for symmetric input and
// fully deterministic: fixed (p, q) sweep order, no pivot search, so the
// same input bits always produce the same output bits. Matrices here are
// small (frame counts), where Jacobi is both fast and highly accurate.
inline SymmetricEigen jacobi_eigen_symmetric(std::vector<double> a, std::size_t n) {
    if (n == 0) throw DomainError("jacobi_eigen_symmetric: empty matrix");
    if (a.size() != n * n) {
        throw ShapeError("jacobi_eigen_symmetric: matrix size mismatch");
    }

    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

    SymmetricEigen out;
    out.values.resize(n);
    if (n == 1) {
        out.values[0] = a[0];
        out.vectors = {1.0};
        return out;
    }

    double frob2 = 0.0;
    for (double x : a) frob2 += x * x;
    const double off_tol = 1e-15 * std::sqrt(frob2);

    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off2 = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off2 += 2.0 * a[p * n + q] * a[p * n + q];
        if (std::sqrt(off2) <= off_tol) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0) continue;

                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                // large theta would overflow theta^2; the rotation angle is
                // ~1/(2 theta) there anyway
                double t;
                if (std::abs(theta) > 1e150) {
                    t = 1.0 / (2.0 * theta);
                } else {
                    t = ((theta >= 0.0) ? 1.0 : -1.0) /
                        (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                a[p * n + p] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                a[q * n + q] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;

                for (std::size_t r = 0; r < n; ++r) {
                    if (r == p || r == q) continue;
                    const double arp = a[r * n + p];
                    const double arq = a[r * n + q];
                    a[r * n + p] = c * arp - s * arq;
                    a[p * n + r] = a[r * n + p];
                    a[r * n + q] = s * arp + c * arq;
                    a[q * n + r] = a[r * n + q];
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double vrp = v[r * n + p];
                    const double vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
    }

    // eigenvector i = column i of the accumulated rotations, emitted as row i
    out.vectors.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        out.values[i] = a[i * n + i];
        for (std::size_t j = 0; j < n; ++j) out.vectors[i * n + j] = v[j * n + i];
    }
    return out;
}

}  // namespace freepca
