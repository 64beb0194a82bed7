#include <gtest/gtest.h>

#include <mfpod/gappy.hpp>
#include <mfpod/pod.hpp>

#include <cmath>
#include <numeric>
#include <random>

using namespace mfpod;

namespace {

Matrix random_matrix(std::size_t m, std::size_t n, std::uint32_t seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix a(m, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < m; ++i) a(i, j) = dist(gen);
    return a;
}

Vector random_vector(std::size_t m, std::uint32_t seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector v(m);
    for (double& x : v) x = dist(gen);
    return v;
}

PodBasis random_basis(std::size_t n, std::size_t r, std::uint32_t seed) {
    const SvdResult f = svd(random_matrix(n, r, seed));
    Matrix modes(n, r);
    for (std::size_t j = 0; j < r; ++j) std::copy_n(f.left.col(j), n, modes.col(j));
    Vector sigma(std::min(n, r));
    for (std::size_t i = 0; i < sigma.size(); ++i)
        sigma[i] = static_cast<double>(sigma.size() - i);
    return PodBasis{std::move(modes), std::move(sigma), r};
}

PodBasis canonical_basis(std::size_t n, std::size_t r) {
    Matrix modes(n, r, 0.0);
    for (std::size_t j = 0; j < r; ++j) modes(j, j) = 1.0;
    Vector sigma(r);
    for (std::size_t i = 0; i < r; ++i) sigma[i] = static_cast<double>(r - i);
    return PodBasis{std::move(modes), std::move(sigma), r};
}

// Frobenius reconstruction error of min-norm gappy recovery over test states.
double placement_error(const PodBasis& basis, const std::vector<std::size_t>& idx,
                       const Matrix& states) {
    const SensorArray sensors(idx, basis.modes.rows());
    double err = 0.0;
    for (std::size_t j = 0; j < states.cols(); ++j) {
        const Vector meas = measure(sensors, states.col_span(j));
        const GappyReconstruction rec = gappy_reconstruct(basis, sensors, meas);
        for (std::size_t i = 0; i < states.rows(); ++i) {
            const double d = rec.full_state[i] - states(i, j);
            err += d * d;
        }
    }
    return std::sqrt(err);
}

} // namespace

TEST(Gappy, SensorArrayValidation) {
    EXPECT_THROW(SensorArray({}, 5), std::invalid_argument);
    EXPECT_THROW(SensorArray({0, 5}, 5), std::invalid_argument);
    EXPECT_THROW(SensorArray({1, 1}, 5), std::invalid_argument);
    EXPECT_NO_THROW(SensorArray({4, 0, 2}, 5));
}

TEST(Gappy, MeasureIdentityAndSingle) {
    const Vector state{10.0, 11.0, 12.0, 13.0};
    const SensorArray all({0, 1, 2, 3}, 4);
    EXPECT_EQ(measure(all, state), state);

    const SensorArray one({2}, 4);
    const Vector m = measure(one, state);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_EQ(m[0], 12.0);

    EXPECT_THROW(measure(all, Vector{1.0, 2.0}), std::invalid_argument);
}

TEST(Gappy, MeasureMatchesDenseMeasurementMatrixOracle) {
    const std::size_t n = 9;
    const Vector state = random_vector(n, 901u);
    const std::vector<std::size_t> idx{7, 2, 5, 0};
    const SensorArray sensors(idx, n);

    // Oracle: materialize C (c x n of canonical rows) and multiply.
    Matrix c(idx.size(), n, 0.0);
    for (std::size_t i = 0; i < idx.size(); ++i) c(i, idx[i]) = 1.0;
    const Vector oracle = matvec(c, state);
    EXPECT_EQ(measure(sensors, state), oracle);
}

TEST(Gappy, PlaceSensorsOnCanonicalModes) {
    const PodBasis basis = canonical_basis(8, 3);
    const SensorPlacement placement = place_sensors(basis, 3);
    EXPECT_TRUE(placement.warning.empty());
    std::vector<std::size_t> got = placement.sensors.indices;
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Gappy, PlaceSensorsBoundsAndWarnings) {
    const PodBasis basis = random_basis(6, 3, 11u);
    EXPECT_THROW(place_sensors(basis, 7), std::invalid_argument);
    EXPECT_THROW(place_sensors(basis, 0), std::invalid_argument);

    const SensorPlacement under = place_sensors(basis, 2);
    EXPECT_FALSE(under.warning.empty());
    EXPECT_EQ(under.sensors.count(), 2u);

    const SensorPlacement over = place_sensors(basis, 5);
    EXPECT_TRUE(over.warning.empty());
    EXPECT_EQ(over.sensors.count(), 5u);
    std::vector<std::size_t> idx = over.sensors.indices;
    std::sort(idx.begin(), idx.end());
    EXPECT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());
}

TEST(Gappy, QrPlacementWithinFactorOfExhaustiveOptimum) {
    // n=8, r=2, c=2: exhaustive search over all C(8,2)=28 placements.
    for (std::uint32_t seed = 50; seed < 56; ++seed) {
        const PodBasis basis = random_basis(8, 2, seed);
        const Matrix states = random_matrix(8, 6, seed + 100);

        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < 8; ++a)
            for (std::size_t b = a + 1; b < 8; ++b)
                best = std::min(best, placement_error(basis, {a, b}, states));

        const SensorPlacement qr = place_sensors(basis, 2);
        const double got = placement_error(basis, qr.sensors.indices, states);
        EXPECT_LE(got, 1.5 * best + 1e-12) << "seed " << seed;
    }
}

TEST(Gappy, QrPlacementBeatsRandomPlacementOnAverage) {
    std::mt19937 gen(7777u);
    double qr_total = 0.0, random_total = 0.0;
    for (std::uint32_t inst = 0; inst < 10; ++inst) {
        const std::size_t n = 8 + inst % 5;
        const std::size_t r = 2 + inst % 2;
        const PodBasis basis = random_basis(n, r, 600 + inst);
        const Matrix states = random_matrix(n, 5, 700 + inst);

        const SensorPlacement qr = place_sensors(basis, r);
        qr_total += placement_error(basis, qr.sensors.indices, states);

        double rnd = 0.0;
        const int trials = 40;
        for (int t = 0; t < trials; ++t) {
            std::vector<std::size_t> all(n);
            std::iota(all.begin(), all.end(), 0);
            std::shuffle(all.begin(), all.end(), gen);
            rnd += placement_error(basis, {all.begin(), all.begin() + r}, states);
        }
        random_total += rnd / trials;
    }
    EXPECT_LE(qr_total, random_total);
}

TEST(Gappy, AllSensorsDegeneratesToProjection) {
    const PodBasis basis = random_basis(10, 3, 21u);
    std::vector<std::size_t> all(10);
    std::iota(all.begin(), all.end(), 0);
    const SensorArray sensors(all, 10);

    const Vector state = random_vector(10, 22u);
    const GappyReconstruction rec = gappy_reconstruct(basis, sensors, measure(sensors, state));
    const Vector proj = project(basis, state);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(rec.coeffs[k], proj[k], 1e-10);
}

TEST(Gappy, RecoversModeCoefficientExactly) {
    const PodBasis basis = random_basis(12, 3, 31u);
    const SensorPlacement placement = place_sensors(basis, 4);  // c > r, full rank
    const Vector meas = measure(placement.sensors, basis.modes.col_span(0));
    const GappyReconstruction rec = gappy_reconstruct(basis, placement.sensors, meas);
    EXPECT_NEAR(rec.coeffs[0], 1.0, 1e-8);
    EXPECT_NEAR(rec.coeffs[1], 0.0, 1e-8);
    EXPECT_NEAR(rec.coeffs[2], 0.0, 1e-8);
}

TEST(Gappy, InSpanStatesRecoverExactly) {
    for (std::uint32_t seed = 80; seed < 85; ++seed) {
        const PodBasis basis = random_basis(11, 3, seed);
        const SensorPlacement placement = place_sensors(basis, 3);
        const Vector a0 = random_vector(3, seed + 10);
        const Vector state = reconstruct(basis, a0);
        const GappyReconstruction rec =
            gappy_reconstruct(basis, placement.sensors, measure(placement.sensors, state));
        for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(rec.coeffs[k], a0[k], 1e-8);
    }
}

TEST(Gappy, ReconstructionMatchesNormalEquationsOracle) {
    const PodBasis basis = random_basis(12, 3, 91u);
    const SensorPlacement placement = place_sensors(basis, 5);
    const Vector meas = random_vector(5, 92u);

    const GappyReconstruction rec = gappy_reconstruct(basis, placement.sensors, meas);

    // Oracle: (CP^T CP)^{-1} CP^T u via explicit 3x3 inverse.
    const Matrix cp = sensor_modes(basis, placement.sensors);
    const Matrix g = matmul(transpose(cp), cp);
    const Vector rhs = matvec_t(cp, meas);
    const double det = g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1)) -
                       g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0)) +
                       g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0));
    Matrix inv(3, 3);
    inv(0, 0) = (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1)) / det;
    inv(0, 1) = (g(0, 2) * g(2, 1) - g(0, 1) * g(2, 2)) / det;
    inv(0, 2) = (g(0, 1) * g(1, 2) - g(0, 2) * g(1, 1)) / det;
    inv(1, 0) = (g(1, 2) * g(2, 0) - g(1, 0) * g(2, 2)) / det;
    inv(1, 1) = (g(0, 0) * g(2, 2) - g(0, 2) * g(2, 0)) / det;
    inv(1, 2) = (g(0, 2) * g(1, 0) - g(0, 0) * g(1, 2)) / det;
    inv(2, 0) = (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0)) / det;
    inv(2, 1) = (g(0, 1) * g(2, 0) - g(0, 0) * g(2, 1)) / det;
    inv(2, 2) = (g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0)) / det;
    const Vector oracle = matvec(inv, rhs);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(rec.coeffs[k], oracle[k], 1e-8);

    // full_state = modes * coeffs
    const Vector lifted = matvec(basis.modes, rec.coeffs);
    for (std::size_t i = 0; i < lifted.size(); ++i)
        EXPECT_NEAR(rec.full_state[i], lifted[i], 1e-14);
}

TEST(Gappy, PlacementConditionCanonical) {
    const PodBasis basis = canonical_basis(6, 2);
    const SensorArray sensors({0, 1}, 6);
    EXPECT_NEAR(placement_condition(basis, sensors), 1.0, 1e-12);
}

TEST(Gappy, PlacementConditionInfiniteOnRepeatedRows) {
    // Two sensors reading identical mode rows -> rank-deficient C Psi.
    Matrix modes(6, 2, 0.0);
    modes(0, 0) = 1.0 / std::sqrt(2.0);
    modes(1, 0) = 1.0 / std::sqrt(2.0);
    modes(0, 1) = 1.0 / std::sqrt(2.0);
    modes(1, 1) = -1.0 / std::sqrt(2.0);
    // Rows 2 and 3 are identical (both zero is degenerate; make them equal nonzero).
    modes(2, 0) = 0.0;
    modes(3, 0) = 0.0;
    PodBasis basis{std::move(modes), {2.0, 1.0}, 2};
    basis.modes(2, 0) = 0.3;
    basis.modes(2, 1) = 0.4;
    basis.modes(3, 0) = 0.3;
    basis.modes(3, 1) = 0.4;
    const SensorArray sensors({2, 3}, 6);
    EXPECT_TRUE(std::isinf(placement_condition(basis, sensors)));
}

TEST(Gappy, PlacementConditionMatchesEigenOracle) {
    const PodBasis basis = random_basis(10, 3, 111u);
    const SensorArray sensors({1, 4, 6, 8}, 10);
    const double got = placement_condition(basis, sensors);

    // Oracle: extreme eigenvalues of the Gram matrix by two-sided Jacobi.
    const Matrix cp = sensor_modes(basis, sensors);
    Matrix g = matmul(transpose(cp), cp);
    const std::size_t n = g.rows();
    for (int sweep = 0; sweep < 100; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(g(p, q)) < 1e-300) continue;
                const double theta = (g(q, q) - g(p, p)) / (2.0 * g(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = c * t;
                for (std::size_t k = 0; k < n; ++k) {
                    const double a = g(k, p), b = g(k, q);
                    g(k, p) = c * a - sn * b;
                    g(k, q) = sn * a + c * b;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double a = g(p, k), b = g(q, k);
                    g(p, k) = c * a - sn * b;
                    g(q, k) = sn * a + c * b;
                }
            }
        }
    }
    double lmax = 0.0, lmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        lmax = std::max(lmax, g(i, i));
        lmin = std::min(lmin, g(i, i));
    }
    EXPECT_NEAR(got, std::sqrt(lmax / lmin), 1e-9 * got);
}
