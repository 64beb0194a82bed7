#pragma once

#include <mfpod/linalg.hpp>

#include <optional>
#include <string>
#include <utility>

namespace mfpod {

/**
 * A set of full-order solutions sampled over a parameter space: coordinates
 * of the n discretization points, the N parameter samples, and the n x N
 * value matrix whose column j is the full state at parameter j.
 */
struct SnapshotSet {
    Matrix coordinates;  ///< n x d spatial points
    Matrix parameters;   ///< N x p parameter samples
    Matrix values;       ///< n x N states, one column per sample
    std::string field_name;

    SnapshotSet(Matrix coords, Matrix params, Matrix vals, std::string name = {})
        : coordinates(std::move(coords)),
          parameters(std::move(params)),
          values(std::move(vals)),
          field_name(std::move(name)) {
        if (values.rows() != coordinates.rows()) {
            throw std::invalid_argument(
                "SnapshotSet: values has " + std::to_string(values.rows()) +
                " rows but coordinates has " + std::to_string(coordinates.rows()));
        }
        if (values.cols() != parameters.rows()) {
            throw std::invalid_argument(
                "SnapshotSet: values has " + std::to_string(values.cols()) +
                " columns but parameters has " + std::to_string(parameters.rows()) + " rows");
        }
        // Matrix construction already guarantees finite entries.
    }

    std::size_t point_count() const { return values.rows(); }
    std::size_t sample_count() const { return values.cols(); }
    std::size_t spatial_dim() const { return coordinates.cols(); }
    std::size_t parameter_dim() const { return parameters.cols(); }
};

/// Which weights feed the cumulative-energy rank rule. `singular_values`
/// accumulates the sigma_j themselves; `squared_singular_values` accumulates
/// sigma_j^2 (the more common definition in POD codebases). The two can pick
/// very different ranks on the same data.
enum class EnergyWeight { singular_values, squared_singular_values };

/// Basis truncation rule: an explicit rank, or the smallest rank whose
/// cumulative energy fraction strictly exceeds a threshold.
class Truncation {
public:
    static Truncation by_rank(std::size_t rank) {
        if (rank < 1) throw std::invalid_argument("Truncation: rank must be >= 1");
        Truncation t;
        t.rank_ = rank;
        return t;
    }

    static Truncation by_energy(double energy,
                                EnergyWeight weight = EnergyWeight::singular_values) {
        if (!(energy > 0.0 && energy < 1.0)) {
            throw std::invalid_argument("Truncation: energy must lie strictly in (0, 1)");
        }
        Truncation t;
        t.energy_ = energy;
        t.weight_ = weight;
        return t;
    }

    std::optional<std::size_t> rank() const { return rank_; }
    std::optional<double> energy() const { return energy_; }
    EnergyWeight weight() const { return weight_; }

private:
    Truncation() = default;
    std::optional<std::size_t> rank_;
    std::optional<double> energy_;
    EnergyWeight weight_ = EnergyWeight::singular_values;
};

/**
 * Truncated POD basis: the first r left singular vectors of the snapshot
 * matrix plus the full singular-value sequence, so energy bookkeeping stays
 * available after truncation.
 */
struct PodBasis {
    Matrix modes;            ///< n x r, orthonormal columns
    Vector singular_values;  ///< all min(n, N) values, nonincreasing
    std::size_t rank;
};

namespace detail {

inline std::size_t energy_rank(const Vector& sigma, double eps, EnergyWeight weight) {
    double total = 0.0;
    for (double s : sigma) {
        total += (weight == EnergyWeight::squared_singular_values) ? s * s : s;
    }
    if (total <= 0.0) return 1;  // all-zero spectrum: a single (zero) mode suffices
    double cum = 0.0;
    for (std::size_t r = 0; r < sigma.size(); ++r) {
        const double s = sigma[r];
        cum += (weight == EnergyWeight::squared_singular_values) ? s * s : s;
        if (cum / total > eps) return r + 1;
    }
    return sigma.size();
}

} // namespace detail

/**
 * Build the truncated POD basis of the snapshot values. Snapshots are used
 * raw: no mean-centering or scaling is applied. With an energy truncation the
 * rank is the smallest r whose cumulative fraction strictly exceeds the
 * threshold; an explicit rank larger than min(n, N) is an error.
 */
inline PodBasis compute_pod(const SnapshotSet& snapshots, const Truncation& truncation) {
    SvdResult f = svd(snapshots.values);
    const std::size_t max_rank = f.singular_values.size();

    std::size_t r;
    if (truncation.rank()) {
        r = *truncation.rank();
        if (r > max_rank) {
            throw std::invalid_argument("compute_pod: requested rank " + std::to_string(r) +
                                        " exceeds min(n, N) = " + std::to_string(max_rank));
        }
    } else {
        r = detail::energy_rank(f.singular_values, *truncation.energy(), truncation.weight());
    }

    Matrix modes(snapshots.point_count(), r);
    for (std::size_t j = 0; j < r; ++j) {
        std::copy_n(f.left.col(j), snapshots.point_count(), modes.col(j));
    }
    return PodBasis{std::move(modes), std::move(f.singular_values), r};
}

/// Modal coefficients of a full state: a = modes^T * state.
inline Vector project(const PodBasis& basis, std::span<const double> state) {
    if (state.size() != basis.modes.rows()) {
        throw std::invalid_argument("project: state has length " + std::to_string(state.size()) +
                                    " but modes have " + std::to_string(basis.modes.rows()) +
                                    " rows");
    }
    return matvec_t(basis.modes, state);
}

/// Full state from modal coefficients: modes * coeffs.
inline Vector reconstruct(const PodBasis& basis, std::span<const double> coeffs) {
    if (coeffs.size() != basis.rank) {
        throw std::invalid_argument("reconstruct: got " + std::to_string(coeffs.size()) +
                                    " coefficients for rank " + std::to_string(basis.rank));
    }
    return matvec(basis.modes, coeffs);
}

/// Cumulative energy fractions over the full spectrum; entry k covers modes
/// 0..k. Nondecreasing, final entry 1.
inline Vector energy_profile(const PodBasis& basis,
                             EnergyWeight weight = EnergyWeight::singular_values) {
    Vector profile(basis.singular_values.size(), 1.0);
    double total = 0.0;
    for (double s : basis.singular_values) {
        total += (weight == EnergyWeight::squared_singular_values) ? s * s : s;
    }
    if (total <= 0.0) return profile;  // degenerate zero spectrum
    double cum = 0.0;
    for (std::size_t k = 0; k < profile.size(); ++k) {
        const double s = basis.singular_values[k];
        cum += (weight == EnergyWeight::squared_singular_values) ? s * s : s;
        profile[k] = cum / total;
    }
    return profile;
}

} // namespace mfpod
