#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "freepca/pca.hpp"
#include "freepca/rng.hpp"
#include "freepca/symmetric_eigen.hpp"
#include "oracles.hpp"

using namespace freepca;
namespace fs = std::filesystem;

namespace {

FeatureTensor random_features(std::size_t t, std::size_t s, std::size_t c, std::uint64_t seed) {
    FeatureTensor x(t, s, c);
    Rng rng(seed);
    for (double& v : x.data) v = rng.next_normal();
    return x;
}

double orthonormality_defect(const PcaBasis& basis) {
    const std::size_t f = basis.frames;
    double worst = 0.0;
    for (std::size_t i = 0; i < f; ++i)
        for (std::size_t j = 0; j < f; ++j) {
            double dot = 0.0;
            for (std::size_t u = 0; u < f; ++u)
                dot += basis.component(i, u) * basis.component(j, u);
            worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
        }
    return worst;
}

// spec example block: two samples v1=(1,-1), v2=(-1,1)
FeatureTensor two_sample_block() {
    FeatureTensor x(2, 2, 1);
    x.at(0, 0, 0) = 1.0;
    x.at(1, 0, 0) = -1.0;
    x.at(0, 1, 0) = -1.0;
    x.at(1, 1, 0) = 1.0;
    return x;
}

ComponentSpace make_space(std::size_t f, std::size_t sites, std::uint64_t id) {
    ComponentSpace s;
    s.z = FeatureTensor(f, sites, 1);
    s.basis_id = id;
    return s;
}

}  // namespace

TEST_CASE("jacobi solver matches the closed-form 2x2 oracle") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const double a = 4.0 * rng.next_normal();
        const double b = 4.0 * rng.next_normal();
        const double d = 4.0 * rng.next_normal();
        const auto oracle = oracles::eigen2x2(a, b, d);
        const SymmetricEigen eig = jacobi_eigen_symmetric({a, b, b, d}, 2);
        std::vector<double> got = eig.values;
        std::sort(got.begin(), got.end(), std::greater<>());
        REQUIRE_THAT(got[0], Catch::Matchers::WithinAbs(oracle.values[0], 1e-10));
        REQUIRE_THAT(got[1], Catch::Matchers::WithinAbs(oracle.values[1], 1e-10));
    }
}

TEST_CASE("fit_basis reproduces the two-sample closed form") {
    const PcaBasis basis = fit_basis(two_sample_block());

    REQUIRE(basis.center[0] == 0.0);
    REQUIRE(basis.center[1] == 0.0);
    REQUIRE_THAT(basis.eigenvalues[0], Catch::Matchers::WithinAbs(2.0, 1e-12));
    REQUIRE_THAT(basis.eigenvalues[1], Catch::Matchers::WithinAbs(0.0, 1e-12));

    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    REQUIRE_THAT(basis.component(0, 0), Catch::Matchers::WithinAbs(inv_sqrt2, 1e-12));
    REQUIRE_THAT(basis.component(0, 1), Catch::Matchers::WithinAbs(-inv_sqrt2, 1e-12));
}

TEST_CASE("zero-covariance blocks get the identity basis") {
    // every site shares the same temporal profile, so deviations vanish
    FeatureTensor x(3, 4, 2);
    const double profile[3] = {0.3, -1.2, 0.7};
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t s = 0; s < 4; ++s)
            for (std::size_t c = 0; c < 2; ++c) x.at(t, s, c) = profile[t];

    const PcaBasis basis = fit_basis(x);
    for (std::size_t t = 0; t < 3; ++t) {
        REQUIRE(basis.eigenvalues[t] == 0.0);
        for (std::size_t u = 0; u < 3; ++u)
            REQUIRE(basis.component(t, u) == (t == u ? 1.0 : 0.0));
    }
}

TEST_CASE("tied eigenvalues order rows by largest-entry index") {
    // samples (1,0), (-1,0), (0,1), (0,-1): covariance diag(0.5, 0.5)
    FeatureTensor x(2, 4, 1);
    x.at(0, 0, 0) = 1.0;
    x.at(0, 1, 0) = -1.0;
    x.at(1, 2, 0) = 1.0;
    x.at(1, 3, 0) = -1.0;

    const PcaBasis basis = fit_basis(x);
    REQUIRE_THAT(basis.eigenvalues[0], Catch::Matchers::WithinAbs(0.5, 1e-12));
    REQUIRE_THAT(basis.eigenvalues[1], Catch::Matchers::WithinAbs(0.5, 1e-12));
    REQUIRE_THAT(basis.component(0, 0), Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(basis.component(1, 1), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("fit_basis rejects bad input") {
    REQUIRE_THROWS_AS(fit_basis(random_features(1, 4, 1, 0)), DomainError);

    FeatureTensor x = random_features(3, 2, 1, 0);
    x.data[2] = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(fit_basis(x), ValueError);

    FeatureTensor site_major(3, 2, 1, FeatureLayout::SiteMajor);
    REQUIRE_THROWS_AS(fit_basis(site_major), ShapeError);
}

TEST_CASE("fitted bases are orthonormal and reproduce the covariance") {
    Rng dims(23);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t f = 4;
        const std::size_t sites = 3 + dims.next_index(8);
        const FeatureTensor x = random_features(f, sites, 2, 100 + trial);
        const PcaBasis basis = fit_basis(x);

        REQUIRE(orthonormality_defect(basis) < 1e-5);

        // P^T diag(lambda) P must rebuild the loop-oracle covariance
        const auto oracle = oracles::covariance_by_loops(x);
        for (std::size_t a = 0; a < f; ++a)
            for (std::size_t b = 0; b < f; ++b) {
                double rebuilt = 0.0;
                for (std::size_t t = 0; t < f; ++t)
                    rebuilt += basis.component(t, a) * basis.eigenvalues[t] * basis.component(t, b);
                REQUIRE_THAT(rebuilt, Catch::Matchers::WithinAbs(oracle.cov[a * f + b], 1e-4));
            }

        // eigenvalues descending and non-negative
        for (std::size_t t = 0; t + 1 < f; ++t)
            REQUIRE(basis.eigenvalues[t] >= basis.eigenvalues[t + 1] - 1e-9);
        REQUIRE(basis.eigenvalues[f - 1] >= 0.0);
    }
}

TEST_CASE("eigenvalues match the bisection oracle and the trace") {
    Rng dims(31);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t f = 2 + dims.next_index(5);  // 2..6
        const std::size_t sites = 2 + dims.next_index(12);
        const FeatureTensor x = random_features(f, sites, 3, 500 + trial);
        const PcaBasis basis = fit_basis(x);
        const auto oracle_cov = oracles::covariance_by_loops(x);
        const std::vector<double> oracle_vals =
            oracles::eigenvalues_by_bisection(oracle_cov.cov, f);

        double trace = 0.0, lambda_sum = 0.0;
        for (std::size_t t = 0; t < f; ++t) {
            trace += oracle_cov.cov[t * f + t];
            lambda_sum += basis.eigenvalues[t];
            const double scale = std::max(1e-12, std::abs(oracle_vals[t]));
            REQUIRE(std::abs(basis.eigenvalues[t] - oracle_vals[t]) / scale < 1e-6);
        }
        REQUIRE(std::abs(lambda_sum - trace) / std::max(1e-12, std::abs(trace)) < 1e-6);
    }
}

TEST_CASE("fit_basis is deterministic on identical input bits") {
    const FeatureTensor x = random_features(8, 16, 2, 77);
    const PcaBasis a = fit_basis(x);
    const PcaBasis b = fit_basis(x);
    REQUIRE(a.components == b.components);
    REQUIRE(a.eigenvalues == b.eigenvalues);
    REQUIRE(a.center == b.center);
    REQUIRE(a.id == b.id);
}

TEST_CASE("whitened fit stays orthonormal and sums eigenvalues to f") {
    FeatureTensor x = random_features(5, 40, 2, 3);
    // spread per-frame variances so whitening actually changes the problem
    for (std::size_t t = 0; t < 5; ++t)
        for (std::size_t s = 0; s < 40; ++s)
            for (std::size_t c = 0; c < 2; ++c) x.at(t, s, c) *= static_cast<double>(t + 1);

    const PcaBasis plain = fit_basis(x);
    const PcaBasis white = fit_basis(x, FitOptions{.whiten = true});
    REQUIRE(orthonormality_defect(white) < 1e-5);
    REQUIRE(white.components != plain.components);

    // trace of a correlation matrix is f
    double sum = 0.0;
    for (double v : white.eigenvalues) sum += v;
    REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(5.0, 1e-9));
}

TEST_CASE("projection with the identity basis is the identity") {
    FeatureTensor constant(4, 3, 1);
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t s = 0; s < 3; ++s) constant.at(t, s, 0) = 0.1 * static_cast<double>(t);
    const PcaBasis identity = fit_basis(constant);  // zero covariance -> identity

    const FeatureTensor x = random_features(4, 3, 1, 9);
    const ComponentSpace z = project(identity, x);
    REQUIRE(z.z.data == x.data);
}

TEST_CASE("project applies the basis rows to raw features") {
    const PcaBasis basis = fit_basis(two_sample_block());
    FeatureTensor x(2, 1, 1);
    x.at(0, 0, 0) = 3.0;
    x.at(1, 0, 0) = 1.0;
    const ComponentSpace z = project(basis, x);
    // hand multiply: ((3-1)/sqrt2, (3+1)/sqrt2)
    REQUIRE_THAT(z.z.at(0, 0, 0), Catch::Matchers::WithinAbs(std::sqrt(2.0), 1e-12));
    REQUIRE_THAT(z.z.at(1, 0, 0), Catch::Matchers::WithinAbs(2.0 * std::sqrt(2.0), 1e-12));

    REQUIRE_THROWS_AS(project(basis, random_features(3, 1, 1, 0)), ShapeError);
}

TEST_CASE("reconstruct inverts project within 1e-5") {
    for (int trial = 0; trial < 8; ++trial) {
        const std::size_t f = 2 + static_cast<std::size_t>(trial);
        const FeatureTensor x = random_features(f, 10, 3, 900 + trial);
        const PcaBasis basis = fit_basis(x);
        const FeatureTensor back = reconstruct(basis, project(basis, x));
        REQUIRE(oracles::max_abs_diff(back.data, x.data) < 1e-5);
    }
}

TEST_CASE("single-component spaces reconstruct as rank-1 outer products") {
    const FeatureTensor x = random_features(5, 6, 2, 41);
    const PcaBasis basis = fit_basis(x);
    ComponentSpace z = project(basis, x);
    const std::size_t keep = 2;
    const std::size_t row = z.z.sites * z.z.channels;
    for (std::size_t t = 0; t < 5; ++t) {
        if (t == keep) continue;
        std::fill_n(z.z.data.begin() + static_cast<std::ptrdiff_t>(t * row), row, 0.0);
    }
    const FeatureTensor rec = reconstruct(basis, z);
    for (std::size_t u = 0; u < 5; ++u)
        for (std::size_t e = 0; e < row; ++e) {
            const double expected = basis.component(keep, u) * z.z.data[keep * row + e];
            REQUIRE_THAT(rec.data[u * row + e], Catch::Matchers::WithinAbs(expected, 1e-12));
        }
}

TEST_CASE("repeated transpose multiplication is stable") {
    const FeatureTensor x = random_features(6, 8, 2, 55);
    const PcaBasis basis = fit_basis(x);
    ComponentSpace z = project(basis, x);
    const FeatureTensor once = reconstruct(basis, z);
    ComponentSpace round;
    round.basis_id = basis.id;
    round.z = reconstruct(basis, project(basis, once));
    REQUIRE(oracles::max_abs_diff(round.z.data, once.data) < 1e-5);
}

TEST_CASE("component_cosine follows the dot-product formula") {
    ComponentSpace a = make_space(3, 2, 7);
    ComponentSpace b = make_space(3, 2, 7);
    // component 0: identical; component 1: orthogonal; component 2: (1,1) vs (1,0)
    a.z.at(0, 0, 0) = 0.5;
    a.z.at(0, 1, 0) = -0.25;
    b.z.at(0, 0, 0) = 0.5;
    b.z.at(0, 1, 0) = -0.25;
    a.z.at(1, 0, 0) = 1.0;
    b.z.at(1, 1, 0) = 1.0;
    a.z.at(2, 0, 0) = 1.0;
    a.z.at(2, 1, 0) = 1.0;
    b.z.at(2, 0, 0) = 1.0;

    const SimilarityRanking r = component_cosine(a, b);
    REQUIRE_THAT(r.similarities[0], Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(r.similarities[1], Catch::Matchers::WithinAbs(0.0, 1e-12));
    REQUIRE_THAT(r.similarities[2], Catch::Matchers::WithinAbs(1.0 / std::sqrt(2.0), 1e-12));
    REQUIRE(r.order == std::vector<std::size_t>{0, 2, 1});
}

TEST_CASE("near-zero components count as dissimilar") {
    ComponentSpace a = make_space(2, 2, 1);
    ComponentSpace b = make_space(2, 2, 1);
    a.z.at(0, 0, 0) = 1e-13;  // norm below the 1e-12 floor
    b.z.at(0, 0, 0) = 1.0;
    a.z.at(1, 0, 0) = 1.0;
    b.z.at(1, 0, 0) = 1.0;
    const SimilarityRanking r = component_cosine(a, b);
    REQUIRE(r.similarities[0] == 0.0);
    REQUIRE(r.similarities[1] == 1.0);
    REQUIRE(r.order == std::vector<std::size_t>{1, 0});
}

TEST_CASE("component_cosine validates shapes and basis ids") {
    ComponentSpace a = make_space(2, 2, 1);
    ComponentSpace b = make_space(2, 3, 1);
    REQUIRE_THROWS_AS(component_cosine(a, b), ShapeError);
    ComponentSpace c = make_space(2, 2, 2);
    REQUIRE_THROWS_AS(component_cosine(a, c), ConsistencyError);
}

TEST_CASE("cosine ties break by ascending component index") {
    ComponentSpace a = make_space(3, 1, 4);
    ComponentSpace b = make_space(3, 1, 4);
    for (std::size_t t = 0; t < 3; ++t) {
        a.z.at(t, 0, 0) = 1.0;
        b.z.at(t, 0, 0) = 1.0;
    }
    const SimilarityRanking r = component_cosine(a, b);
    REQUIRE(r.order == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("split_components keeps original indices per the sort oracle") {
    const std::size_t f = 4;
    ComponentSpace zg = make_space(f, 2, 9);
    ComponentSpace zl = make_space(f, 2, 9);
    for (std::size_t t = 0; t < f; ++t) {
        zg.z.at(t, 0, 0) = static_cast<double>(t + 1);
        zl.z.at(t, 0, 0) = -static_cast<double>(t + 1);
    }
    SimilarityRanking ranking;
    ranking.similarities = {0.9, 0.1, 0.95, 0.5};
    ranking.order = {2, 0, 3, 1};  // sort oracle on the four values

    const ComponentSplit split = split_components(zg, zl, ranking, 2);
    REQUIRE(split.consistency.size() == 2);
    REQUIRE(split.motion.size() == 2);
    REQUIRE(split.consistency[0].component == 2);
    REQUIRE(split.consistency[1].component == 0);
    REQUIRE(split.motion[0].component == 3);
    REQUIRE(split.motion[1].component == 1);
    // consistency slices come from the global projection, motion from local
    REQUIRE(split.consistency[0].values[0] == 3.0);
    REQUIRE(split.motion[0].values[0] == -4.0);

    SECTION("k = 0 and k = f") {
        const ComponentSplit pure_local = split_components(zg, zl, ranking, 0);
        REQUIRE(pure_local.consistency.empty());
        REQUIRE(pure_local.motion.size() == f);
        const ComponentSplit pure_global = split_components(zg, zl, ranking, f);
        REQUIRE(pure_global.consistency.size() == f);
        REQUIRE(pure_global.motion.empty());
    }

    SECTION("k out of range") {
        REQUIRE_THROWS_AS(split_components(zg, zl, ranking, f + 1), DomainError);
    }

    SECTION("partition property for every k") {
        for (std::size_t k = 0; k <= f; ++k) {
            const ComponentSplit s = split_components(zg, zl, ranking, k);
            std::vector<bool> seen(f, false);
            for (const auto& slice : s.consistency) {
                REQUIRE(!seen[slice.component]);
                seen[slice.component] = true;
            }
            for (const auto& slice : s.motion) {
                REQUIRE(!seen[slice.component]);
                seen[slice.component] = true;
            }
            REQUIRE(std::all_of(seen.begin(), seen.end(), [](bool v) { return v; }));
        }
    }
}

TEST_CASE("basis files round trip within f32 precision") {
    const fs::path dir = fs::temp_directory_path() / "freepca_test_pca";
    fs::create_directories(dir);
    const FeatureTensor x = random_features(6, 12, 2, 123);
    const PcaBasis basis = fit_basis(x);
    const fs::path path = dir / "basis.ften";
    write_basis(basis, path.string());
    const PcaBasis loaded = read_basis(path.string());

    REQUIRE(loaded.frames == basis.frames);
    REQUIRE(oracles::max_abs_diff(loaded.components, basis.components) < 1e-6);
    REQUIRE(oracles::max_abs_diff(loaded.eigenvalues, basis.eigenvalues) < 1e-5);
    REQUIRE(oracles::max_abs_diff(loaded.center, basis.center) < 1e-6);

    // a non-basis tensor must be rejected
    const fs::path junk = dir / "junk.ften";
    TensorData t;
    t.dims = {8, 6};
    t.values.assign(48, 0.5);
    write_tensor(t, junk.string());
    REQUIRE_THROWS_AS(read_basis(junk.string()), FormatError);
}

TEST_CASE("ranking csv lists component, similarity, rank") {
    const fs::path dir = fs::temp_directory_path() / "freepca_test_pca";
    fs::create_directories(dir);
    SimilarityRanking ranking;
    ranking.similarities = {0.25, 0.75};
    ranking.order = {1, 0};
    const fs::path path = dir / "ranking.csv";
    write_ranking_csv(ranking, path.string());

    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    REQUIRE(line == "component_index,similarity,rank");
    std::getline(in, line);
    REQUIRE(line == "0,0.25,1");
    std::getline(in, line);
    REQUIRE(line == "1,0.75,0");
}
