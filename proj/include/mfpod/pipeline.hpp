#pragma once

#include <mfpod/deeponet.hpp>
#include <mfpod/gappy.hpp>
#include <mfpod/pod.hpp>
#include <mfpod/rbf.hpp>

#include <utility>
#include <variant>

namespace mfpod {

/// POD basis + parameter->coefficient interpolant; consumes a parameter vector.
struct PodRbfModel {
    PodBasis basis;
    RbfSurrogate surrogate;
};

/// POD basis + sensor set; consumes a vector of point measurements.
struct GappyModel {
    PodBasis basis;
    SensorArray sensors;
};

/**
 * The cheap approximation whose pointwise error the residual network learns.
 * The variant also fixes what a "query" is: a parameter vector for pod_rbf, a
 * sensor reading vector for gappy.
 */
struct LowFidelityModel {
    std::variant<PodRbfModel, GappyModel> model;

    static LowFidelityModel pod_rbf(PodBasis basis, RbfSurrogate surrogate) {
        if (surrogate.output_dim() != basis.rank) {
            throw std::invalid_argument("LowFidelityModel: surrogate outputs " +
                                        std::to_string(surrogate.output_dim()) +
                                        " coefficients but basis rank is " +
                                        std::to_string(basis.rank));
        }
        return LowFidelityModel{PodRbfModel{std::move(basis), std::move(surrogate)}};
    }

    static LowFidelityModel gappy(PodBasis basis, SensorArray sensors) {
        if (sensors.ambient_dim != basis.modes.rows()) {
            throw std::invalid_argument("LowFidelityModel: sensors live in dimension " +
                                        std::to_string(sensors.ambient_dim) +
                                        " but modes have " +
                                        std::to_string(basis.modes.rows()) + " rows");
        }
        return LowFidelityModel{GappyModel{std::move(basis), std::move(sensors)}};
    }

    bool is_gappy() const { return std::holds_alternative<GappyModel>(model); }

    const PodBasis& basis() const {
        return is_gappy() ? std::get<GappyModel>(model).basis
                          : std::get<PodRbfModel>(model).basis;
    }

    /// Dimension of the query vector: parameter dim (pod_rbf) or sensor count.
    std::size_t input_dim() const {
        if (is_gappy()) return std::get<GappyModel>(model).sensors.count();
        return std::get<PodRbfModel>(model).surrogate.input_dim();
    }

    std::size_t state_dim() const { return basis().modes.rows(); }
};

/// Full-state prediction of the low-fidelity model for one query.
inline Vector lf_predict(const LowFidelityModel& low, std::span<const double> q) {
    if (q.size() != low.input_dim()) {
        throw std::invalid_argument("lf_predict: query has dimension " + std::to_string(q.size()) +
                                    " but the model expects " + std::to_string(low.input_dim()));
    }
    if (low.is_gappy()) {
        const GappyModel& g = std::get<GappyModel>(low.model);
        return gappy_reconstruct(g.basis, g.sensors, q).full_state;
    }
    const PodRbfModel& p = std::get<PodRbfModel>(low.model);
    return reconstruct(p.basis, eval_rbf(p.surrogate, q));
}

/**
 * Pointwise residual data on the (coordinates x samples) grid: inputs row j is
 * the query for sample j (its parameters, or its sensor readings), and
 * residuals(i, j) = u_ij - lf_predict(q_j)_i. Conceptually there are n*N rows
 * (x_i, q_j, r_ij); the grid layout stores them without expansion, row k
 * mapping to (i, j) = (k % n, k / n).
 */
struct ResidualDataset {
    Matrix coordinates;  ///< n x d
    Matrix inputs;       ///< N x m query rows
    Matrix residuals;    ///< n x N

    std::size_t row_count() const { return residuals.rows() * residuals.cols(); }

    struct Row {
        Vector x;
        Vector q;
        double residual;
    };

    /// Materialize conceptual row k = j * n + i. Bulk consumers (training)
    /// should use the grid matrices directly instead of iterating this.
    Row row(std::size_t k) const {
        const std::size_t i = k % residuals.rows();
        const std::size_t j = k / residuals.rows();
        Row r{Vector(coordinates.cols()), Vector(inputs.cols()), residuals(i, j)};
        for (std::size_t c = 0; c < r.x.size(); ++c) r.x[c] = coordinates(i, c);
        for (std::size_t c = 0; c < r.q.size(); ++c) r.q[c] = inputs(j, c);
        return r;
    }
};

/**
 * Assemble the residual dataset from the snapshots the low-fidelity model was
 * built on; no new full-order evaluations happen here. The gappy variant
 * derives each query by measuring the snapshot itself.
 */
inline ResidualDataset build_residual_dataset(const SnapshotSet& snapshots,
                                              const LowFidelityModel& low) {
    if (low.state_dim() != snapshots.point_count()) {
        throw std::invalid_argument("build_residual_dataset: model state dimension " +
                                    std::to_string(low.state_dim()) +
                                    " does not match snapshot points " +
                                    std::to_string(snapshots.point_count()));
    }
    const std::size_t n = snapshots.point_count();
    const std::size_t count = snapshots.sample_count();

    Matrix inputs(count, low.input_dim());
    Matrix residuals(n, count);
    Vector q(low.input_dim());
    for (std::size_t j = 0; j < count; ++j) {
        if (low.is_gappy()) {
            const GappyModel& g = std::get<GappyModel>(low.model);
            const Vector meas = measure(g.sensors, snapshots.values.col_span(j));
            std::copy(meas.begin(), meas.end(), q.begin());
        } else {
            if (snapshots.parameter_dim() != low.input_dim()) {
                throw std::invalid_argument(
                    "build_residual_dataset: snapshot parameters have dimension " +
                    std::to_string(snapshots.parameter_dim()) + " but the surrogate expects " +
                    std::to_string(low.input_dim()));
            }
            for (std::size_t k = 0; k < q.size(); ++k) q[k] = snapshots.parameters(j, k);
        }
        for (std::size_t k = 0; k < q.size(); ++k) inputs(j, k) = q[k];

        const Vector pred = lf_predict(low, q);
        const double* uj = snapshots.values.col(j);
        double* rj = residuals.col(j);
        for (std::size_t i = 0; i < n; ++i) rj[i] = uj[i] - pred[i];
    }
    return ResidualDataset{snapshots.coordinates, std::move(inputs), std::move(residuals)};
}

/// Hidden-layer layout shared by the residual network's two nets.
struct MfNetConfig {
    std::vector<std::size_t> branch_hidden{30, 30};
    std::vector<std::size_t> trunk_hidden{30, 30};
    std::size_t latent_dim = 30;
    Activation activation = Activation::softplus;
};

/**
 * Low-fidelity model + residual network + the coordinates the field lives on.
 * Prediction adds the network's pointwise residual field to the low-fidelity
 * state.
 */
struct MfModel {
    LowFidelityModel low;
    DeepOnetModel residual_net;
    Matrix coordinates;  ///< n x d

    std::size_t state_dim() const { return coordinates.rows(); }
};

/**
 * Build the residual dataset, train the residual DeepONet on it (full-batch
 * Adam, initialization from config.seed, inputs normalized to the dataset's
 * bounds), and assemble the multi-fidelity model. Only the provided snapshots
 * are consumed; there is no callback to the full-order model.
 */
inline MfModel train_mf(const SnapshotSet& snapshots, LowFidelityModel low,
                        const MfNetConfig& net, const TrainConfig& config,
                        Vector* loss_history = nullptr) {
    const ResidualDataset data = build_residual_dataset(snapshots, low);

    DeepOnetModel model = init_params(
        NetSpec{snapshots.spatial_dim(), net.branch_hidden, net.activation},
        NetSpec{low.input_dim(), net.trunk_hidden, net.activation}, net.latent_dim, config.seed);
    model.branch_scaler = AffineScaler::from_rows(data.coordinates);
    model.trunk_scaler = AffineScaler::from_rows(data.inputs);

    TrainResult result =
        train(std::move(model), GridBatch{data.coordinates, data.inputs, data.residuals}, config);
    if (loss_history) *loss_history = std::move(result.loss_history);
    return MfModel{std::move(low), std::move(result.model), snapshots.coordinates};
}

/// The residual field alone: network output at every coordinate for one query.
inline Vector residual_field(const MfModel& model, std::span<const double> q) {
    Matrix qrow(1, q.size());
    for (std::size_t k = 0; k < q.size(); ++k) qrow(0, k) = q[k];
    const Matrix tl = trunk_latents(model.residual_net, qrow);
    const Matrix bl = branch_latents(model.residual_net, model.coordinates);
    Vector field(model.state_dim(), 0.0);
    for (std::size_t k = 0; k < model.residual_net.latent_dim; ++k) {
        const double t = tl(0, k);
        const double* bk = bl.col(k);
        for (std::size_t i = 0; i < field.size(); ++i) field[i] += bk[i] * t;
    }
    return field;
}

/// Corrected prediction: lf_predict(q) + residual network field.
inline Vector mf_predict(const MfModel& model, std::span<const double> q) {
    Vector state = lf_predict(model.low, q);
    const Vector corr = residual_field(model, q);
    for (std::size_t i = 0; i < state.size(); ++i) state[i] += corr[i];
    return state;
}

} // namespace mfpod
