#pragma once

#include <mfpod/linalg.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace mfpod {

enum class Activation { softplus, prelu, identity };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::softplus: return "softplus";
        case Activation::prelu: return "prelu";
        case Activation::identity: return "identity";
    }
    return "?";
}

inline Activation activation_from_name(const std::string& name) {
    if (name == "softplus") return Activation::softplus;
    if (name == "prelu") return Activation::prelu;
    if (name == "identity") return Activation::identity;
    throw std::invalid_argument("unknown activation '" + name + "'");
}

/// Overflow-safe softplus: max(z, 0) + log1p(exp(-|z|)).
inline double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

/// d softplus / dz, computed without overflow for any z.
inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// One fully connected layer. `prelu_alpha` is the learnable negative-side
/// slope, present exactly when the activation is prelu (one scalar per layer).
struct DenseLayer {
    Matrix weight;  ///< out x in
    Vector bias;    ///< out
    Activation activation = Activation::identity;
    std::optional<double> prelu_alpha;

    std::size_t in_dim() const { return weight.cols(); }
    std::size_t out_dim() const { return weight.rows(); }
};

/// Per-component affine map x -> (x - center) / halfwidth used to bring raw
/// network inputs into [-1, 1] over the training range.
struct AffineScaler {
    Vector center;
    Vector halfwidth;

    static AffineScaler identity(std::size_t dim) {
        return AffineScaler{Vector(dim, 0.0), Vector(dim, 1.0)};
    }

    /// Bounds taken per column over the rows; constant columns map to 0.
    static AffineScaler from_rows(const Matrix& rows) {
        const std::size_t d = rows.cols();
        Vector lo(d, std::numeric_limits<double>::infinity());
        Vector hi(d, -std::numeric_limits<double>::infinity());
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t i = 0; i < rows.rows(); ++i) {
                lo[j] = std::min(lo[j], rows(i, j));
                hi[j] = std::max(hi[j], rows(i, j));
            }
        }
        AffineScaler s{Vector(d), Vector(d)};
        for (std::size_t j = 0; j < d; ++j) {
            s.center[j] = 0.5 * (lo[j] + hi[j]);
            const double half = 0.5 * (hi[j] - lo[j]);
            s.halfwidth[j] = (half > 0.0) ? half : 1.0;
        }
        return s;
    }

    std::size_t dim() const { return center.size(); }

    Vector apply(std::span<const double> x) const {
        Vector y(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) y[j] = (x[j] - center[j]) / halfwidth[j];
        return y;
    }

    Matrix apply_rows(const Matrix& rows) const {
        Matrix y(rows.rows(), rows.cols());
        for (std::size_t j = 0; j < rows.cols(); ++j)
            for (std::size_t i = 0; i < rows.rows(); ++i)
                y(i, j) = (rows(i, j) - center[j]) / halfwidth[j];
        return y;
    }
};

/**
 * Two feedforward networks whose final latent outputs combine by inner
 * product: the branch consumes a spatial coordinate, the trunk a parameter or
 * sensor vector, and the model output is dot(branch(x), trunk(q)). Both final
 * layers must have the same width (the latent dimension) and identity
 * activation; violations are rejected at construction.
 */
struct DeepOnetModel {
    std::vector<DenseLayer> branch;
    std::vector<DenseLayer> trunk;
    std::size_t latent_dim = 0;
    AffineScaler branch_scaler{Vector{}, Vector{}};
    AffineScaler trunk_scaler{Vector{}, Vector{}};

    std::size_t branch_input_dim() const { return branch.front().in_dim(); }
    std::size_t trunk_input_dim() const { return trunk.front().in_dim(); }
};

namespace detail {

inline void validate_net(const std::vector<DenseLayer>& layers, const char* which) {
    if (layers.empty()) {
        throw std::invalid_argument(std::string("DeepOnetModel: ") + which + " net is empty");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const DenseLayer& lay = layers[l];
        if (lay.bias.size() != lay.out_dim()) {
            throw std::invalid_argument(std::string("DeepOnetModel: ") + which + " layer " +
                                        std::to_string(l) + " bias/weight size mismatch");
        }
        if (l > 0 && lay.in_dim() != layers[l - 1].out_dim()) {
            throw std::invalid_argument(std::string("DeepOnetModel: ") + which + " layer " +
                                        std::to_string(l) + " input width " +
                                        std::to_string(lay.in_dim()) +
                                        " does not match previous output " +
                                        std::to_string(layers[l - 1].out_dim()));
        }
        if (lay.prelu_alpha.has_value() != (lay.activation == Activation::prelu)) {
            throw std::invalid_argument(std::string("DeepOnetModel: ") + which + " layer " +
                                        std::to_string(l) +
                                        " prelu_alpha must be present exactly for prelu");
        }
        if (lay.prelu_alpha && !std::isfinite(*lay.prelu_alpha)) {
            throw std::invalid_argument("DeepOnetModel: non-finite prelu_alpha");
        }
    }
    if (layers.back().activation != Activation::identity) {
        throw std::invalid_argument(std::string("DeepOnetModel: ") + which +
                                    " final layer must use the identity activation");
    }
}

} // namespace detail

/// Assemble and validate a model; scalers default to identity maps.
inline DeepOnetModel make_deeponet(std::vector<DenseLayer> branch, std::vector<DenseLayer> trunk) {
    detail::validate_net(branch, "branch");
    detail::validate_net(trunk, "trunk");
    if (branch.back().out_dim() != trunk.back().out_dim()) {
        throw std::invalid_argument(
            "DeepOnetModel: branch and trunk final widths differ (" +
            std::to_string(branch.back().out_dim()) + " vs " +
            std::to_string(trunk.back().out_dim()) + "); the inner product needs equal widths");
    }
    DeepOnetModel m;
    m.latent_dim = branch.back().out_dim();
    m.branch_scaler = AffineScaler::identity(branch.front().in_dim());
    m.trunk_scaler = AffineScaler::identity(trunk.front().in_dim());
    m.branch = std::move(branch);
    m.trunk = std::move(trunk);
    return m;
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

/// Layer widths and hidden activation for one of the two nets; the final
/// (latent) layer is appended by init_params with identity activation.
struct NetSpec {
    std::size_t input_dim;
    std::vector<std::size_t> hidden;
    Activation activation = Activation::softplus;
};

namespace detail {

// Deterministic uniform in [0, 1) from raw mt19937_64 output; avoids the
// implementation-defined std::uniform_real_distribution.
class UniformSource {
public:
    explicit UniformSource(std::uint64_t seed) : engine_(seed) {}
    double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

inline DenseLayer glorot_layer(std::size_t out, std::size_t in, Activation act,
                               UniformSource& rng) {
    DenseLayer layer{Matrix(out, in), Vector(out, 0.0), act, std::nullopt};
    const double s = std::sqrt(6.0 / static_cast<double>(in + out));
    // Drawn in storage (column-major) order.
    for (double& w : layer.weight.data()) w = (2.0 * rng.next() - 1.0) * s;
    if (act == Activation::prelu) layer.prelu_alpha = 0.25;
    return layer;
}

inline std::vector<DenseLayer> init_net(const NetSpec& spec, std::size_t latent,
                                        UniformSource& rng) {
    std::vector<DenseLayer> layers;
    std::size_t in = spec.input_dim;
    for (std::size_t h : spec.hidden) {
        layers.push_back(glorot_layer(h, in, spec.activation, rng));
        in = h;
    }
    layers.push_back(glorot_layer(latent, in, Activation::identity, rng));
    return layers;
}

} // namespace detail

/**
 * Glorot-uniform initialization: weights ~ U(-s, s) with s = sqrt(6/(fan_in +
 * fan_out)), zero biases, prelu_alpha = 0.25. Fully deterministic per seed;
 * branch draws first, then trunk, each weight matrix in storage order.
 */
inline DeepOnetModel init_params(const NetSpec& branch_spec, const NetSpec& trunk_spec,
                                 std::size_t latent_dim, std::uint64_t seed) {
    if (latent_dim < 1) throw std::invalid_argument("init_params: latent_dim must be >= 1");
    detail::UniformSource rng(seed);
    std::vector<DenseLayer> branch = detail::init_net(branch_spec, latent_dim, rng);
    std::vector<DenseLayer> trunk = detail::init_net(trunk_spec, latent_dim, rng);
    return make_deeponet(std::move(branch), std::move(trunk));
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

namespace detail {

/// C = A * B^T without materializing the transpose: (m x k) * (n x k) -> m x n.
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.rows(), 0.0);
    for (std::size_t j = 0; j < b.rows(); ++j) {
        double* cj = c.col(j);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double w = b(j, k);
            if (w == 0.0) continue;
            const double* ak = a.col(k);
            for (std::size_t i = 0; i < a.rows(); ++i) cj[i] += ak[i] * w;
        }
    }
    return c;
}

/// C = A^T * B over contiguous columns: (m x a) x (m x b) -> a x b.
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    Matrix c(a.cols(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        double* cj = c.col(j);
        for (std::size_t i = 0; i < a.cols(); ++i) cj[i] = dot(a.col_span(i), b.col_span(j));
    }
    return c;
}

struct NetCache {
    std::vector<Matrix> inputs;  ///< per layer: post-activation input (B x in)
    std::vector<Matrix> pre;     ///< per layer: pre-activation output (B x out)
};

inline void apply_activation(const DenseLayer& layer, Matrix& z) {
    switch (layer.activation) {
        case Activation::identity:
            return;
        case Activation::softplus:
            for (double& v : z.data()) v = softplus(v);
            return;
        case Activation::prelu: {
            const double alpha = *layer.prelu_alpha;
            for (double& v : z.data())
                if (v < 0.0) v *= alpha;
            return;
        }
    }
}

/// Forward a row batch through one net; returns the latent matrix (B x p).
/// When `cache` is given, pre-activations and layer inputs are recorded for
/// the backward pass.
inline Matrix net_forward(const std::vector<DenseLayer>& layers, Matrix x,
                          NetCache* cache = nullptr) {
    for (const DenseLayer& layer : layers) {
        // z = x * W^T + bias
        Matrix z(x.rows(), layer.out_dim());
        for (std::size_t o = 0; o < layer.out_dim(); ++o) {
            double* zo = z.col(o);
            std::fill_n(zo, x.rows(), layer.bias[o]);
            for (std::size_t i = 0; i < layer.in_dim(); ++i) {
                const double w = layer.weight(o, i);
                if (w == 0.0) continue;
                const double* xi = x.col(i);
                for (std::size_t b = 0; b < x.rows(); ++b) zo[b] += xi[b] * w;
            }
        }
        if (cache) {
            cache->inputs.push_back(std::move(x));
            cache->pre.push_back(z);
        }
        apply_activation(layer, z);
        x = std::move(z);
    }
    return x;
}

struct LayerGrads {
    Matrix weight;
    Vector bias;
    double prelu_alpha = 0.0;
};

/// Backpropagate d(loss)/d(latent) through one net, accumulating per-layer
/// gradients; `d` is consumed.
inline std::vector<LayerGrads> net_backward(const std::vector<DenseLayer>& layers,
                                            const NetCache& cache, Matrix d) {
    std::vector<LayerGrads> grads;
    grads.reserve(layers.size());
    for (const DenseLayer& layer : layers) {
        grads.push_back(LayerGrads{Matrix(layer.out_dim(), layer.in_dim()),
                                   Vector(layer.out_dim(), 0.0), 0.0});
    }
    for (std::size_t l = layers.size(); l-- > 0;) {
        const DenseLayer& layer = layers[l];
        double alpha_grad = 0.0;
        switch (layer.activation) {
            case Activation::identity:
                break;
            case Activation::softplus: {
                const Matrix& z = cache.pre[l];
                for (std::size_t i = 0; i < d.data().size(); ++i)
                    d.data()[i] *= sigmoid(z.data()[i]);
                break;
            }
            case Activation::prelu: {
                const Matrix& z = cache.pre[l];
                const double alpha = *layer.prelu_alpha;
                for (std::size_t i = 0; i < d.data().size(); ++i) {
                    const double zv = z.data()[i];
                    if (zv <= 0.0) {
                        alpha_grad += d.data()[i] * zv;
                        d.data()[i] *= alpha;
                    }
                }
                break;
            }
        }
        LayerGrads& g = grads[l];
        g.weight = matmul_tn(d, cache.inputs[l]);
        g.bias.assign(layer.out_dim(), 0.0);
        for (std::size_t o = 0; o < layer.out_dim(); ++o) {
            const double* dc = d.col(o);
            double s = 0.0;
            for (std::size_t b = 0; b < d.rows(); ++b) s += dc[b];
            g.bias[o] = s;
        }
        g.prelu_alpha = alpha_grad;
        if (l > 0) d = matmul(d, layer.weight);
    }
    return grads;
}

inline double weight_square_sum(const DeepOnetModel& model) {
    double s = 0.0;
    for (const auto* net : {&model.branch, &model.trunk})
        for (const DenseLayer& layer : *net)
            for (double w : layer.weight.data()) s += w * w;
    return s;
}

} // namespace detail

/// Gradient of the training objective with respect to every parameter,
/// mirroring the model layout (weight, bias, prelu_alpha per layer).
struct ModelGrads {
    std::vector<detail::LayerGrads> branch;
    std::vector<detail::LayerGrads> trunk;
};

/// A batch of independent samples: row b pairs xs[b,:] with qs[b,:] and a
/// scalar target.
struct SampleBatch {
    Matrix xs;
    Matrix qs;
    Vector targets;
};

/// A full tensor-product batch: every spatial row against every input row,
/// with targets arranged as an (xs.rows() x qs.rows()) matrix. This is the
/// natural layout of residual data and lets the two nets run once per
/// distinct input instead of once per pair.
struct GridBatch {
    Matrix xs;       ///< nx x dx
    Matrix qs;       ///< nq x dq
    Matrix targets;  ///< nx x nq

    std::size_t row_count() const { return targets.rows() * targets.cols(); }
};

/// Model output for a single (x, q) pair. Inputs are raw; the model's
/// normalization maps are applied internally.
inline double forward(const DeepOnetModel& model, std::span<const double> x,
                      std::span<const double> q) {
    if (x.size() != model.branch_input_dim()) {
        throw std::invalid_argument("forward: x has dimension " + std::to_string(x.size()) +
                                    " but branch expects " +
                                    std::to_string(model.branch_input_dim()));
    }
    if (q.size() != model.trunk_input_dim()) {
        throw std::invalid_argument("forward: q has dimension " + std::to_string(q.size()) +
                                    " but trunk expects " +
                                    std::to_string(model.trunk_input_dim()));
    }
    const Vector xn = model.branch_scaler.apply(x);
    const Vector qn = model.trunk_scaler.apply(q);
    Matrix xb(1, xn.size());
    for (std::size_t j = 0; j < xn.size(); ++j) xb(0, j) = xn[j];
    Matrix qb(1, qn.size());
    for (std::size_t j = 0; j < qn.size(); ++j) qb(0, j) = qn[j];
    const Matrix bl = detail::net_forward(model.branch, std::move(xb));
    const Matrix tl = detail::net_forward(model.trunk, std::move(qb));
    double s = 0.0;
    for (std::size_t k = 0; k < model.latent_dim; ++k) s += bl(0, k) * tl(0, k);
    return s;
}

/// Branch latent vectors for a batch of raw coordinates (rows), normalized
/// internally. Row b of the result is branch(xs[b,:]).
inline Matrix branch_latents(const DeepOnetModel& model, const Matrix& xs) {
    return detail::net_forward(model.branch, model.branch_scaler.apply_rows(xs));
}

/// Trunk latent vectors for a batch of raw inputs (rows).
inline Matrix trunk_latents(const DeepOnetModel& model, const Matrix& qs) {
    return detail::net_forward(model.trunk, model.trunk_scaler.apply_rows(qs));
}

/// Mean squared error over the batch plus l2_weight * sum of squared weights
/// (biases and prelu slopes excluded from the penalty).
inline double loss_mse_l2(const DeepOnetModel& model, const SampleBatch& batch,
                          double l2_weight = 0.0) {
    const std::size_t nrows = batch.targets.size();
    if (nrows == 0 || batch.xs.rows() != nrows || batch.qs.rows() != nrows) {
        throw std::invalid_argument("loss_mse_l2: batch rows are empty or inconsistent");
    }
    const Matrix bl = branch_latents(model, batch.xs);
    const Matrix tl = trunk_latents(model, batch.qs);
    double mse = 0.0;
    for (std::size_t b = 0; b < nrows; ++b) {
        double pred = 0.0;
        for (std::size_t k = 0; k < model.latent_dim; ++k) pred += bl(b, k) * tl(b, k);
        const double e = pred - batch.targets[b];
        mse += e * e;
    }
    return mse / static_cast<double>(nrows) + l2_weight * detail::weight_square_sum(model);
}

inline double loss_mse_l2(const DeepOnetModel& model, const GridBatch& batch,
                          double l2_weight = 0.0) {
    const Matrix bl = branch_latents(model, batch.xs);
    const Matrix tl = trunk_latents(model, batch.qs);
    const Matrix pred = detail::matmul_nt(bl, tl);
    double mse = 0.0;
    for (std::size_t i = 0; i < pred.data().size(); ++i) {
        const double e = pred.data()[i] - batch.targets.data()[i];
        mse += e * e;
    }
    return mse / static_cast<double>(batch.row_count()) +
           l2_weight * detail::weight_square_sum(model);
}

/// Loss value and full gradient in one pass.
struct LossGrads {
    double loss = 0.0;
    ModelGrads grads;
};

namespace detail {

inline void add_l2_gradient(const DeepOnetModel& model, double l2_weight, ModelGrads& g) {
    if (l2_weight == 0.0) return;
    for (auto [net, gnet] : {std::pair{&model.branch, &g.branch}, {&model.trunk, &g.trunk}}) {
        for (std::size_t l = 0; l < net->size(); ++l) {
            const auto& w = (*net)[l].weight.data();
            auto& gw = (*gnet)[l].weight.data();
            for (std::size_t i = 0; i < w.size(); ++i) gw[i] += 2.0 * l2_weight * w[i];
        }
    }
}

} // namespace detail

/// Reverse-mode gradients of loss_mse_l2 for a row batch.
inline LossGrads backward(const DeepOnetModel& model, const SampleBatch& batch,
                          double l2_weight = 0.0) {
    const std::size_t nrows = batch.targets.size();
    if (nrows == 0 || batch.xs.rows() != nrows || batch.qs.rows() != nrows) {
        throw std::invalid_argument("backward: batch rows are empty or inconsistent");
    }
    detail::NetCache bc, tc;
    const Matrix bl =
        detail::net_forward(model.branch, model.branch_scaler.apply_rows(batch.xs), &bc);
    const Matrix tl =
        detail::net_forward(model.trunk, model.trunk_scaler.apply_rows(batch.qs), &tc);

    double mse = 0.0;
    Vector dpred(nrows);
    for (std::size_t b = 0; b < nrows; ++b) {
        double pred = 0.0;
        for (std::size_t k = 0; k < model.latent_dim; ++k) pred += bl(b, k) * tl(b, k);
        const double e = pred - batch.targets[b];
        mse += e * e;
        dpred[b] = 2.0 * e / static_cast<double>(nrows);
    }

    Matrix dbl(nrows, model.latent_dim);
    Matrix dtl(nrows, model.latent_dim);
    for (std::size_t k = 0; k < model.latent_dim; ++k) {
        double* dbk = dbl.col(k);
        double* dtk = dtl.col(k);
        const double* blk = bl.col(k);
        const double* tlk = tl.col(k);
        for (std::size_t b = 0; b < nrows; ++b) {
            dbk[b] = dpred[b] * tlk[b];
            dtk[b] = dpred[b] * blk[b];
        }
    }

    LossGrads out;
    out.grads.branch = detail::net_backward(model.branch, bc, std::move(dbl));
    out.grads.trunk = detail::net_backward(model.trunk, tc, std::move(dtl));
    detail::add_l2_gradient(model, l2_weight, out.grads);
    out.loss = mse / static_cast<double>(nrows) +
               l2_weight * detail::weight_square_sum(model);
    return out;
}

/// Reverse-mode gradients of loss_mse_l2 for a grid batch. Identical result
/// to the row-batch version on the expanded grid, at a fraction of the cost.
inline LossGrads backward(const DeepOnetModel& model, const GridBatch& batch,
                          double l2_weight = 0.0) {
    detail::NetCache bc, tc;
    const Matrix bl =
        detail::net_forward(model.branch, model.branch_scaler.apply_rows(batch.xs), &bc);
    const Matrix tl =
        detail::net_forward(model.trunk, model.trunk_scaler.apply_rows(batch.qs), &tc);

    Matrix dpred = detail::matmul_nt(bl, tl);  // predictions, then scaled error in place
    double mse = 0.0;
    const double scale = 2.0 / static_cast<double>(batch.row_count());
    for (std::size_t i = 0; i < dpred.data().size(); ++i) {
        const double e = dpred.data()[i] - batch.targets.data()[i];
        mse += e * e;
        dpred.data()[i] = scale * e;
    }

    LossGrads out;
    out.grads.branch =
        detail::net_backward(model.branch, bc, matmul(dpred, tl));
    out.grads.trunk =
        detail::net_backward(model.trunk, tc, detail::matmul_tn(dpred, bl));
    detail::add_l2_gradient(model, l2_weight, out.grads);
    out.loss = mse / static_cast<double>(batch.row_count()) +
               l2_weight * detail::weight_square_sum(model);
    return out;
}

// ---------------------------------------------------------------------------
// Training (full-batch Adam)
// ---------------------------------------------------------------------------

struct TrainConfig {
    std::size_t epochs = 1;
    double learning_rate = 1.0e-3;  ///< 0 is allowed and makes training a no-op
    double l2_weight = 0.0;
    std::uint64_t seed = 0;  ///< records the initialization seed; training draws no randomness
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1.0e-8;
};

namespace detail {

inline void validate_train_config(const TrainConfig& c) {
    if (c.epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (!(c.learning_rate >= 0.0)) {
        throw std::invalid_argument("TrainConfig: learning_rate must be nonnegative");
    }
    if (!(c.l2_weight >= 0.0)) {
        throw std::invalid_argument("TrainConfig: l2_weight must be nonnegative");
    }
}

struct AdamState {
    ModelGrads m;
    ModelGrads v;

    static ModelGrads zeros_like(const DeepOnetModel& model) {
        ModelGrads g;
        for (auto [net, gnet] : {std::pair{&model.branch, &g.branch}, {&model.trunk, &g.trunk}}) {
            for (const DenseLayer& layer : *net) {
                gnet->push_back(LayerGrads{Matrix(layer.out_dim(), layer.in_dim(), 0.0),
                                           Vector(layer.out_dim(), 0.0), 0.0});
            }
        }
        return g;
    }
};

// One fused Adam update over every parameter (weights, biases, prelu slopes).
inline void adam_step(DeepOnetModel& model, const ModelGrads& g, AdamState& st, std::size_t t,
                      const TrainConfig& cfg) {
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
    auto update = [&](double& p, double grad, double& m, double& v) {
        m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
        v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * grad * grad;
        p -= cfg.learning_rate * (m / bc1) / (std::sqrt(v / bc2) + cfg.adam_eps);
    };
    for (auto [net, gnet, mnet, vnet] :
         {std::tuple{&model.branch, &g.branch, &st.m.branch, &st.v.branch},
          {&model.trunk, &g.trunk, &st.m.trunk, &st.v.trunk}}) {
        for (std::size_t l = 0; l < net->size(); ++l) {
            DenseLayer& layer = (*net)[l];
            const LayerGrads& lg = (*gnet)[l];
            LayerGrads& lm = (*mnet)[l];
            LayerGrads& lv = (*vnet)[l];
            for (std::size_t i = 0; i < layer.weight.data().size(); ++i) {
                update(layer.weight.data()[i], lg.weight.data()[i], lm.weight.data()[i],
                       lv.weight.data()[i]);
            }
            for (std::size_t i = 0; i < layer.bias.size(); ++i) {
                update(layer.bias[i], lg.bias[i], lm.bias[i], lv.bias[i]);
            }
            if (layer.prelu_alpha) {
                update(*layer.prelu_alpha, lg.prelu_alpha, lm.prelu_alpha, lv.prelu_alpha);
            }
        }
    }
}

} // namespace detail

struct TrainResult {
    DeepOnetModel model;
    Vector loss_history;  ///< objective at the start of each epoch
};

/**
 * Full-batch Adam for config.epochs steps. The model is consumed as passed
 * (initialize with init_params; the seed lives in the config only as a
 * record). Training is deterministic: identical model + data + config give a
 * bit-identical result. A non-finite loss aborts naming the epoch.
 */
inline TrainResult train(DeepOnetModel model, const GridBatch& data, const TrainConfig& config) {
    detail::validate_train_config(config);
    if (data.xs.rows() != data.targets.rows() || data.qs.rows() != data.targets.cols()) {
        throw std::invalid_argument("train: grid dimensions are inconsistent");
    }
    detail::AdamState state{detail::AdamState::zeros_like(model),
                            detail::AdamState::zeros_like(model)};
    Vector history;
    history.reserve(config.epochs);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        LossGrads lg = backward(model, data, config.l2_weight);
        if (!std::isfinite(lg.loss)) {
            throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
        }
        history.push_back(lg.loss);
        detail::adam_step(model, lg.grads, state, epoch + 1, config);
    }
    return TrainResult{std::move(model), std::move(history)};
}

} // namespace mfpod
