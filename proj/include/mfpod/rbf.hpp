#pragma once

#include <mfpod/linalg.hpp>

#include <string>
#include <utility>

namespace mfpod {

enum class RbfKernel { thin_plate, gaussian, multiquadric };

inline const char* kernel_name(RbfKernel k) {
    switch (k) {
        case RbfKernel::thin_plate: return "thin_plate";
        case RbfKernel::gaussian: return "gaussian";
        case RbfKernel::multiquadric: return "multiquadric";
    }
    return "?";
}

inline RbfKernel kernel_from_name(const std::string& name) {
    if (name == "thin_plate") return RbfKernel::thin_plate;
    if (name == "gaussian") return RbfKernel::gaussian;
    if (name == "multiquadric") return RbfKernel::multiquadric;
    throw std::invalid_argument("unknown RBF kernel '" + name + "'");
}

/// phi(r) for the supported kernels; `shape` only matters for the shaped ones.
inline double rbf_phi(RbfKernel kernel, double r, double shape) {
    switch (kernel) {
        case RbfKernel::thin_plate:
            return r > 0.0 ? r * r * std::log(r) : 0.0;
        case RbfKernel::gaussian: {
            const double sr = shape * r;
            return std::exp(-sr * sr);
        }
        case RbfKernel::multiquadric: {
            const double sr = shape * r;
            return std::sqrt(1.0 + sr * sr);
        }
    }
    return 0.0;
}

/**
 * Radial-basis interpolant of the parameter -> modal-coefficient map. Fitted
 * on the N training parameters (centers); evaluation is a weighted sum of
 * kernel values against those centers, one weight row per center.
 *
 * No polynomial tail is attached; the default thin-plate kernel needs no
 * shape parameter and works well at these sample counts.
 */
struct RbfSurrogate {
    Matrix centers;  ///< N x p training parameters
    Matrix weights;  ///< N x r kernel weights
    RbfKernel kernel = RbfKernel::thin_plate;
    double shape = 1.0;

    std::size_t input_dim() const { return centers.cols(); }
    std::size_t output_dim() const { return weights.cols(); }
};

namespace detail {

inline double row_distance(const Matrix& a, std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) {
        const double d = a(i, k) - a(j, k);
        s += d * d;
    }
    return std::sqrt(s);
}

} // namespace detail

/**
 * Fit the kernel system Phi * W = coeffs. Exactly coincident centers make the
 * system singular and are rejected up front naming the offending rows;
 * near-singular systems are handled by the SVD cutoff in lstsq. A positive
 * `ridge` switches to regularized regression (interpolation conditions then
 * hold only approximately).
 */
inline RbfSurrogate fit_rbf(const Matrix& params, const Matrix& coeffs,
                            RbfKernel kernel = RbfKernel::thin_plate, double shape = 1.0,
                            double ridge = 0.0) {
    if (coeffs.rows() != params.rows()) {
        throw std::invalid_argument("fit_rbf: " + std::to_string(params.rows()) +
                                    " centers but " + std::to_string(coeffs.rows()) +
                                    " coefficient rows");
    }
    if (kernel != RbfKernel::thin_plate && !(shape > 0.0)) {
        throw std::invalid_argument("fit_rbf: shape must be positive for shaped kernels");
    }
    if (ridge < 0.0) {
        throw std::invalid_argument("fit_rbf: ridge must be nonnegative");
    }
    const std::size_t n = params.rows();

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < params.cols(); ++k)
            scale = std::max(scale, std::abs(params(i, k)));
    const double dup_tol = 1.0e-12 * (1.0 + scale);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (detail::row_distance(params, i, j) < dup_tol) {
                throw std::invalid_argument("fit_rbf: duplicate centers at rows " +
                                            std::to_string(i) + " and " + std::to_string(j) +
                                            " make the kernel matrix singular");
            }
        }
    }

    Matrix phi(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            phi(i, j) = rbf_phi(kernel, detail::row_distance(params, i, j), shape);
        }
        if (ridge > 0.0) phi(j, j) += ridge;
    }

    // One SVD of the kernel matrix serves every output dimension.
    const SvdResult f = svd(phi);
    const double cutoff = default_rcond(n, n) * f.singular_values[0];
    Matrix weights(n, coeffs.cols(), 0.0);
    Vector y(n);
    for (std::size_t c = 0; c < coeffs.cols(); ++c) {
        for (std::size_t j = 0; j < n; ++j) {
            y[j] = (f.singular_values[j] > cutoff && f.singular_values[j] > 0.0)
                       ? dot(f.left.col_span(j), coeffs.col_span(c)) / f.singular_values[j]
                       : 0.0;
        }
        double* wc = weights.col(c);
        for (std::size_t row = 0; row < n; ++row) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += f.right_t(j, row) * y[j];
            wc[row] = s;
        }
    }
    return RbfSurrogate{params, std::move(weights), kernel, shape};
}

/// Evaluate the surrogate at one parameter point.
inline Vector eval_rbf(const RbfSurrogate& model, std::span<const double> mu) {
    if (mu.size() != model.input_dim()) {
        throw std::invalid_argument("eval_rbf: query has dimension " + std::to_string(mu.size()) +
                                    " but centers have " + std::to_string(model.input_dim()));
    }
    const std::size_t n = model.centers.rows();
    Vector out(model.output_dim(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double d = 0.0;
        for (std::size_t k = 0; k < mu.size(); ++k) {
            const double t = mu[k] - model.centers(j, k);
            d += t * t;
        }
        const double w = rbf_phi(model.kernel, std::sqrt(d), model.shape);
        if (w == 0.0) continue;
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += w * model.weights(j, c);
    }
    return out;
}

} // namespace mfpod
