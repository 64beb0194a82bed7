#pragma once

#include <mfpod/linalg.hpp>
#include <mfpod/pod.hpp>

#include <string>
#include <utility>
#include <vector>

namespace mfpod {

/**
 * Ordered, distinct measurement indices into an n-dimensional state. The
 * point-measurement matrix they define (rows e_{gamma_i}) is never stored;
 * measuring is a gather.
 */
struct SensorArray {
    std::vector<std::size_t> indices;
    std::size_t ambient_dim;

    SensorArray(std::vector<std::size_t> idx, std::size_t n)
        : indices(std::move(idx)), ambient_dim(n) {
        if (indices.empty()) throw std::invalid_argument("SensorArray: need at least one sensor");
        std::vector<std::size_t> sorted = indices;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            if (sorted[i] >= n) {
                throw std::invalid_argument("SensorArray: index " + std::to_string(sorted[i]) +
                                            " out of bounds for dimension " + std::to_string(n));
            }
            if (i > 0 && sorted[i] == sorted[i - 1]) {
                throw std::invalid_argument("SensorArray: duplicate index " +
                                            std::to_string(sorted[i]));
            }
        }
    }

    std::size_t count() const { return indices.size(); }
};

/// Extract measurements: (state[gamma_1], ..., state[gamma_c]).
inline Vector measure(const SensorArray& sensors, std::span<const double> state) {
    if (state.size() != sensors.ambient_dim) {
        throw std::invalid_argument("measure: state has length " + std::to_string(state.size()) +
                                    " but sensors expect " +
                                    std::to_string(sensors.ambient_dim));
    }
    Vector out(sensors.count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = state[sensors.indices[i]];
    return out;
}

/// Rows of the modes restricted to the sensor locations: (C Psi_r), c x r.
inline Matrix sensor_modes(const PodBasis& basis, const SensorArray& sensors) {
    Matrix cp(sensors.count(), basis.rank);
    for (std::size_t j = 0; j < basis.rank; ++j)
        for (std::size_t i = 0; i < sensors.count(); ++i)
            cp(i, j) = basis.modes(sensors.indices[i], j);
    return cp;
}

/// place_sensors output; `warning` is empty unless the placement is flagged
/// (currently only the underdetermined c < rank case).
struct SensorPlacement {
    SensorArray sensors;
    std::string warning;
};

namespace detail {

// Greedy placement for the underdetermined case: pick indices minimizing the
// energy-weighted training-reconstruction proxy
//   || (I - (C Psi)^+ (C Psi)) diag(sigma_1..sigma_r) ||_F,
// i.e. how much snapshot energy the min-norm reconstruction operator misses.
// Needs only the basis, since snapshots ~ Psi_r Sigma_r V_r^T with V orthogonal.
inline std::vector<std::size_t> greedy_energy_placement(const PodBasis& basis, std::size_t c) {
    const std::size_t n = basis.modes.rows();
    const std::size_t r = basis.rank;
    std::vector<std::size_t> chosen;
    std::vector<bool> used(n, false);

    for (std::size_t step = 0; step < c; ++step) {
        std::size_t best = n;
        double best_err = std::numeric_limits<double>::infinity();
        Matrix sel(step + 1, r);
        for (std::size_t cand = 0; cand < n; ++cand) {
            if (used[cand]) continue;
            for (std::size_t j = 0; j < r; ++j) {
                for (std::size_t i = 0; i < step; ++i) sel(i, j) = basis.modes(chosen[i], j);
                sel(step, j) = basis.modes(cand, j);
            }
            // Residual projector applied to diag(sigma): rows of sigma_k * (I - G) e_k
            // where G projects onto the row space of the selection.
            const SvdResult f = svd(sel);
            const double cut = default_rcond(sel.rows(), r) * f.singular_values[0];
            double err = 0.0;
            for (std::size_t k = 0; k < r; ++k) {
                // || (I - G) e_k ||^2 = 1 - sum_j (V_jk)^2 over kept directions
                double g = 0.0;
                for (std::size_t j = 0; j < f.singular_values.size(); ++j) {
                    if (f.singular_values[j] > cut && f.singular_values[j] > 0.0) {
                        g += f.right_t(j, k) * f.right_t(j, k);
                    }
                }
                const double miss = std::max(0.0, 1.0 - g);
                err += basis.singular_values[k] * basis.singular_values[k] * miss;
            }
            if (err < best_err) {
                best_err = err;
                best = cand;
            }
        }
        chosen.push_back(best);
        used[best] = true;
    }
    return chosen;
}

// QR-pivot placement, restarted in rounds when oversampling: each round runs
// column-pivoted QR of Psi_r^T restricted to the not-yet-chosen locations and
// keeps up to r pivots.
inline std::vector<std::size_t> qr_pivot_placement(const PodBasis& basis, std::size_t c) {
    const std::size_t n = basis.modes.rows();
    const std::size_t r = basis.rank;
    std::vector<std::size_t> chosen;
    std::vector<bool> used(n, false);

    while (chosen.size() < c) {
        std::vector<std::size_t> remaining;
        remaining.reserve(n - chosen.size());
        for (std::size_t i = 0; i < n; ++i)
            if (!used[i]) remaining.push_back(i);

        Matrix bt(r, remaining.size());
        for (std::size_t j = 0; j < remaining.size(); ++j)
            for (std::size_t i = 0; i < r; ++i) bt(i, j) = basis.modes(remaining[j], i);

        const PivotedQr f = pivoted_qr(bt);
        const std::size_t take =
            std::min({r, c - chosen.size(), remaining.size()});
        for (std::size_t k = 0; k < take; ++k) {
            const std::size_t idx = remaining[f.pivots[k]];
            chosen.push_back(idx);
            used[idx] = true;
        }
    }
    return chosen;
}

} // namespace detail

/**
 * Reconstruction-optimized sensor placement.
 *
 * For c >= rank this is the classic column-pivoted QR of Psi_r^T (continued in
 * restart rounds over the remaining locations when oversampling). For c < rank
 * the QR pivots are a poor proxy for reconstruction quality, so the indices
 * are chosen by a greedy minimization of the energy-weighted reconstruction
 * loss instead, and the result carries an "underdetermined" warning.
 */
inline SensorPlacement place_sensors(const PodBasis& basis, std::size_t c) {
    const std::size_t n = basis.modes.rows();
    if (c < 1) throw std::invalid_argument("place_sensors: need at least one sensor");
    if (c > n) {
        throw std::invalid_argument("place_sensors: " + std::to_string(c) +
                                    " sensors requested but only " + std::to_string(n) +
                                    " locations exist");
    }
    std::string warning;
    std::vector<std::size_t> idx;
    if (c < basis.rank) {
        idx = detail::greedy_energy_placement(basis, c);
        warning = "sensor count " + std::to_string(c) + " below basis rank " +
                  std::to_string(basis.rank) + ": reconstruction is underdetermined "
                  "(minimum-norm least squares)";
    } else {
        idx = detail::qr_pivot_placement(basis, c);
    }
    return SensorPlacement{SensorArray(std::move(idx), n), std::move(warning)};
}

struct GappyReconstruction {
    Vector coeffs;      ///< modal coefficients, length rank
    Vector full_state;  ///< Psi_r * coeffs, length n
};

/**
 * Recover modal coefficients from sparse measurements by least squares
 * against the sensor-restricted modes, then lift back to the full space.
 * Minimum-norm when the system is underdetermined (c < rank).
 */
inline GappyReconstruction gappy_reconstruct(const PodBasis& basis, const SensorArray& sensors,
                                             std::span<const double> measurements) {
    if (measurements.size() != sensors.count()) {
        throw std::invalid_argument("gappy_reconstruct: got " +
                                    std::to_string(measurements.size()) +
                                    " measurements for " + std::to_string(sensors.count()) +
                                    " sensors");
    }
    if (sensors.ambient_dim != basis.modes.rows()) {
        throw std::invalid_argument("gappy_reconstruct: sensors live in dimension " +
                                    std::to_string(sensors.ambient_dim) + " but modes have " +
                                    std::to_string(basis.modes.rows()) + " rows");
    }
    Vector coeffs = lstsq(sensor_modes(basis, sensors), measurements);
    Vector full = matvec(basis.modes, coeffs);
    return GappyReconstruction{std::move(coeffs), std::move(full)};
}

/// Condition number sigma_max / sigma_min of (C Psi_r); infinity when the
/// sensor-restricted modes are (numerically) rank deficient.
inline double placement_condition(const PodBasis& basis, const SensorArray& sensors) {
    const Matrix cp = sensor_modes(basis, sensors);
    const Vector s = singular_values(cp);
    const double smax = s.front();
    const double smin = s.back();
    const double dead = smax * static_cast<double>(std::max(cp.rows(), cp.cols())) *
                        std::numeric_limits<double>::epsilon();
    if (smin <= dead || smax == 0.0) return std::numeric_limits<double>::infinity();
    return smax / smin;
}

} // namespace mfpod
