#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfpod {

using Vector = std::vector<double>;

/**
 * Dense real matrix in column-major storage.
 *
 * Columns are the natural unit here (snapshots, modes, latent batches), so
 * column-major keeps the hot loops contiguous. Entries must be finite on
 * construction; element access is unchecked after that.
 */
class Matrix {
public:
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        if (rows == 0 || cols == 0) {
            throw std::invalid_argument("Matrix: dimensions must be at least 1x1");
        }
        if (!std::isfinite(fill)) {
            throw std::invalid_argument("Matrix: non-finite fill value");
        }
    }

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> column_major)
        : rows_(rows), cols_(cols), data_(std::move(column_major)) {
        if (rows == 0 || cols == 0) {
            throw std::invalid_argument("Matrix: dimensions must be at least 1x1");
        }
        if (data_.size() != rows * cols) {
            throw std::invalid_argument("Matrix: data size does not match dimensions");
        }
        for (double v : data_) {
            if (!std::isfinite(v)) {
                throw std::invalid_argument("Matrix: non-finite entry on construction");
            }
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n, 0.0);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

    double* col(std::size_t j) { return data_.data() + j * rows_; }
    const double* col(std::size_t j) const { return data_.data() + j * rows_; }
    std::span<const double> col_span(std::size_t j) const { return {col(j), rows_}; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(),
                           [](double v) { return std::isfinite(v); });
    }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Small vector/matrix kernels
// ---------------------------------------------------------------------------

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) t(j, i) = a(i, j);
    return t;
}

/// C = A * B.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: inner dimensions differ (" +
                                    std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.rows()) + ")");
    }
    Matrix c(a.rows(), b.cols(), 0.0);
    // Column-major: accumulate c[:,j] += b(k,j) * a[:,k], contiguous in both.
    for (std::size_t j = 0; j < b.cols(); ++j) {
        double* cj = c.col(j);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double bkj = b(k, j);
            if (bkj == 0.0) continue;
            const double* ak = a.col(k);
            for (std::size_t i = 0; i < a.rows(); ++i) cj[i] += ak[i] * bkj;
        }
    }
    return c;
}

inline Vector matvec(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) {
        throw std::invalid_argument("matvec: dimension mismatch (" +
                                    std::to_string(a.cols()) + " vs " +
                                    std::to_string(x.size()) + ")");
    }
    Vector y(a.rows(), 0.0);
    for (std::size_t k = 0; k < a.cols(); ++k) {
        const double xk = x[k];
        const double* ak = a.col(k);
        for (std::size_t i = 0; i < a.rows(); ++i) y[i] += ak[i] * xk;
    }
    return y;
}

/// y = A^T * x.
inline Vector matvec_t(const Matrix& a, std::span<const double> x) {
    if (a.rows() != x.size()) {
        throw std::invalid_argument("matvec_t: dimension mismatch");
    }
    Vector y(a.cols());
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] = dot(a.col_span(j), x);
    return y;
}

namespace detail {

inline void require_finite(const Matrix& a, const char* op) {
    if (!a.all_finite()) {
        throw std::invalid_argument(std::string(op) + ": input has non-finite entries");
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Singular value decomposition (one-sided Jacobi)
// ---------------------------------------------------------------------------

/// Thin SVD a = left * diag(singular_values) * right_t.
struct SvdResult {
    Matrix left;             ///< m x k, orthonormal columns
    Vector singular_values;  ///< length k = min(m, n), nonincreasing, >= 0
    Matrix right_t;          ///< k x n, orthonormal rows
};

/// Sweep cap for the Jacobi iteration; exceeding it raises an error.
inline constexpr int kSvdMaxSweeps = 100;

namespace detail {

// One-sided Jacobi on a tall (m >= n) matrix. Rotates column pairs of the
// working copy until mutual orthogonality; the accumulated rotations form V.
// Column norms are then the singular values and normalized columns form U.
struct JacobiSvd {
    Matrix u;   // m x n (becomes left vectors)
    Matrix v;   // n x n (right vectors, columns)
    Vector sigma;

    explicit JacobiSvd(const Matrix& a) : u(a), v(Matrix::identity(a.cols())), sigma(a.cols()) {
        const std::size_t m = a.rows();
        const std::size_t n = a.cols();
        const double tol = 1.0e-14;

        bool converged = false;
        for (int sweep = 0; sweep < kSvdMaxSweeps && !converged; ++sweep) {
            converged = true;
            for (std::size_t p = 0; p + 1 < n; ++p) {
                for (std::size_t q = p + 1; q < n; ++q) {
                    double* up = u.col(p);
                    double* uq = u.col(q);
                    double app = 0.0, aqq = 0.0, apq = 0.0;
                    for (std::size_t i = 0; i < m; ++i) {
                        app += up[i] * up[i];
                        aqq += uq[i] * uq[i];
                        apq += up[i] * uq[i];
                    }
                    if (app == 0.0 || aqq == 0.0) continue;
                    if (std::abs(apq) <= tol * std::sqrt(app * aqq)) continue;
                    converged = false;

                    // Jacobi rotation zeroing the (p,q) entry of the Gram matrix.
                    const double zeta = (aqq - app) / (2.0 * apq);
                    const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                     (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                    const double c = 1.0 / std::sqrt(1.0 + t * t);
                    const double s = c * t;
                    for (std::size_t i = 0; i < m; ++i) {
                        const double a1 = up[i], a2 = uq[i];
                        up[i] = c * a1 - s * a2;
                        uq[i] = s * a1 + c * a2;
                    }
                    double* vp = v.col(p);
                    double* vq = v.col(q);
                    for (std::size_t i = 0; i < n; ++i) {
                        const double b1 = vp[i], b2 = vq[i];
                        vp[i] = c * b1 - s * b2;
                        vq[i] = s * b1 + c * b2;
                    }
                }
            }
        }
        if (!converged) {
            throw std::runtime_error("svd: Jacobi iteration did not converge within " +
                                     std::to_string(kSvdMaxSweeps) + " sweeps");
        }

        for (std::size_t j = 0; j < n; ++j) sigma[j] = norm2(u.col_span(j));

        // Sort descending; stable so equal values keep column order.
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });
        Matrix us(m, n), vs(n, n);
        Vector ss(n);
        for (std::size_t j = 0; j < n; ++j) {
            ss[j] = sigma[order[j]];
            std::copy_n(u.col(order[j]), m, us.col(j));
            std::copy_n(v.col(order[j]), n, vs.col(j));
        }
        u = std::move(us);
        v = std::move(vs);
        sigma = std::move(ss);

        // Normalize columns; numerically dead directions get a deterministic
        // orthonormal completion so U keeps orthonormal columns even at rank
        // deficiency (their sigma stays as computed, at roundoff level).
        const double smax = sigma.empty() ? 0.0 : sigma.front();
        const double dead = smax * static_cast<double>(std::max(m, n)) *
                            std::numeric_limits<double>::epsilon();
        for (std::size_t j = 0; j < n; ++j) {
            if (sigma[j] > dead && sigma[j] > 0.0) {
                double* uj = u.col(j);
                const double inv = 1.0 / sigma[j];
                for (std::size_t i = 0; i < m; ++i) uj[i] *= inv;
            } else {
                complete_column(j);  // sigma[j] stays at its roundoff-level value
            }
        }
    }

    // Replace column j by the canonical vector with the largest residual after
    // orthogonalization against columns 0..j-1 (trace argument: some candidate
    // always has residual norm^2 >= (m - j) / m). Deterministic.
    void complete_column(std::size_t j) {
        const std::size_t m = u.rows();
        auto residual = [&](std::size_t cand, Vector& w) {
            w.assign(m, 0.0);
            w[cand] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t k = 0; k < j; ++k) {
                    const double proj = dot(std::span<const double>(w), u.col_span(k));
                    const double* uk = u.col(k);
                    for (std::size_t i = 0; i < m; ++i) w[i] -= proj * uk[i];
                }
            }
            return norm2(w);
        };

        Vector w(m);
        std::size_t best = 0;
        double best_norm = -1.0;
        for (std::size_t cand = 0; cand < m; ++cand) {
            const double nw = residual(cand, w);
            if (nw > 0.25) {  // plenty for stable normalization; take it and stop
                best = cand;
                best_norm = nw;
                break;
            }
            if (nw > best_norm) {
                best = cand;
                best_norm = nw;
            }
        }
        if (best_norm <= 1.0e-6) {
            throw std::runtime_error("svd: failed to complete orthonormal basis");
        }
        const double nw = residual(best, w);
        double* uj = u.col(j);
        for (std::size_t i = 0; i < m; ++i) uj[i] = w[i] / nw;
    }
};

} // namespace detail

/**
 * Thin SVD via one-sided Jacobi. Deterministic; throws if the iteration
 * exceeds kSvdMaxSweeps sweeps. Singular values are sorted nonincreasing and
 * both factors have orthonormal columns/rows even for rank-deficient input.
 */
inline SvdResult svd(const Matrix& a) {
    detail::require_finite(a, "svd");
    if (a.rows() >= a.cols()) {
        detail::JacobiSvd j(a);
        return SvdResult{std::move(j.u), std::move(j.sigma), transpose(j.v)};
    }
    // Wide input: decompose the transpose and swap factors.
    detail::JacobiSvd j(transpose(a));
    return SvdResult{std::move(j.v), std::move(j.sigma), transpose(j.u)};
}

/// Singular values only (same computation, factors discarded).
inline Vector singular_values(const Matrix& a) { return svd(a).singular_values; }

// ---------------------------------------------------------------------------
// Column-pivoted QR (Businger–Golub)
// ---------------------------------------------------------------------------

struct PivotedQr {
    Matrix q;                         ///< m x k, orthonormal columns, k = min(m, n)
    Matrix r;                         ///< k x n, upper triangular (in pivot order)
    std::vector<std::size_t> pivots;  ///< original column index per pivot position
};

/**
 * Householder QR with greedy column pivoting: A P = Q R with |r_11| >= |r_22| >= ...
 * The pivot at step k is the remaining column of largest residual norm (ties
 * break toward the lowest index, so the factorization is deterministic).
 */
inline PivotedQr pivoted_qr(const Matrix& a) {
    detail::require_finite(a, "pivoted_qr");
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    const std::size_t k = std::min(m, n);

    Matrix work(a);
    std::vector<std::size_t> piv(n);
    std::iota(piv.begin(), piv.end(), 0);
    std::vector<Vector> reflectors;
    reflectors.reserve(k);

    for (std::size_t step = 0; step < k; ++step) {
        // Residual norms recomputed each step: slower than downdating but
        // immune to its cancellation problems, and n is small here.
        std::size_t best = step;
        double best_norm = -1.0;
        for (std::size_t j = step; j < n; ++j) {
            double s = 0.0;
            const double* cj = work.col(j);
            for (std::size_t i = step; i < m; ++i) s += cj[i] * cj[i];
            if (s > best_norm) {
                best_norm = s;
                best = j;
            }
        }
        if (best != step) {
            for (std::size_t i = 0; i < m; ++i) std::swap(work(i, step), work(i, best));
            std::swap(piv[step], piv[best]);
        }

        // Householder reflector for rows step..m of the pivot column.
        Vector v(m - step, 0.0);
        const double* cs = work.col(step);
        for (std::size_t i = step; i < m; ++i) v[i - step] = cs[i];
        const double alpha = norm2(v);
        if (alpha > 0.0) {
            const double beta = (v[0] >= 0.0) ? -alpha : alpha;
            v[0] -= beta;
            const double vn = norm2(v);
            if (vn > 0.0) {
                for (double& x : v) x /= vn;
                for (std::size_t j = step; j < n; ++j) {
                    double* cj = work.col(j);
                    double proj = 0.0;
                    for (std::size_t i = step; i < m; ++i) proj += v[i - step] * cj[i];
                    proj *= 2.0;
                    for (std::size_t i = step; i < m; ++i) cj[i] -= proj * v[i - step];
                }
            } else {
                v.assign(m - step, 0.0);
            }
        } else {
            v.assign(m - step, 0.0);
        }
        reflectors.push_back(std::move(v));
    }

    Matrix r(k, n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < std::min(k, j + 1); ++i) r(i, j) = work(i, j);

    // Q = H_0 H_1 ... H_{k-1} applied to the leading k identity columns.
    Matrix q(m, k, 0.0);
    for (std::size_t j = 0; j < k; ++j) q(j, j) = 1.0;
    for (std::size_t step = k; step-- > 0;) {
        const Vector& v = reflectors[step];
        if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) continue;
        for (std::size_t j = 0; j < k; ++j) {
            double* cj = q.col(j);
            double proj = 0.0;
            for (std::size_t i = step; i < m; ++i) proj += v[i - step] * cj[i];
            proj *= 2.0;
            for (std::size_t i = step; i < m; ++i) cj[i] -= proj * v[i - step];
        }
    }

    return PivotedQr{std::move(q), std::move(r), std::move(piv)};
}

// ---------------------------------------------------------------------------
// Least squares / pseudoinverse
// ---------------------------------------------------------------------------

/// Default singular-value cutoff factor: values below rcond * sigma_max are
/// treated as zero in lstsq and pinv.
inline double default_rcond(std::size_t rows, std::size_t cols) {
    return 1.0e-12 * static_cast<double>(std::max(rows, cols));
}

/**
 * Minimum-norm least-squares solution of A x ~ b via SVD with singular-value
 * cutoff. For full-rank overdetermined systems this is the unique minimizer;
 * for rank-deficient or underdetermined systems it is the minimum-norm one.
 */
inline Vector lstsq(const Matrix& a, std::span<const double> b, double rcond = -1.0) {
    if (b.size() != a.rows()) {
        throw std::invalid_argument("lstsq: b has length " + std::to_string(b.size()) +
                                    " but A has " + std::to_string(a.rows()) + " rows");
    }
    if (rcond < 0.0) rcond = default_rcond(a.rows(), a.cols());
    const SvdResult f = svd(a);
    const std::size_t k = f.singular_values.size();
    const double cutoff = rcond * (k > 0 ? f.singular_values[0] : 0.0);

    Vector y(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        if (f.singular_values[j] > cutoff && f.singular_values[j] > 0.0) {
            y[j] = dot(f.left.col_span(j), b) / f.singular_values[j];
        }
    }
    Vector x(a.cols(), 0.0);
    for (std::size_t j = 0; j < a.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += f.right_t(i, j) * y[i];
        x[j] = s;
    }
    return x;
}

/// Moore–Penrose pseudoinverse via SVD with the same cutoff rule as lstsq.
inline Matrix pinv(const Matrix& a, double rcond = -1.0) {
    detail::require_finite(a, "pinv");
    if (rcond < 0.0) rcond = default_rcond(a.rows(), a.cols());
    const SvdResult f = svd(a);
    const std::size_t k = f.singular_values.size();
    const double cutoff = rcond * (k > 0 ? f.singular_values[0] : 0.0);

    // pinv = V * diag(1/sigma) * U^T, dropping cut singular values.
    Matrix p(a.cols(), a.rows(), 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        if (!(f.singular_values[j] > cutoff && f.singular_values[j] > 0.0)) continue;
        const double inv = 1.0 / f.singular_values[j];
        for (std::size_t col = 0; col < a.rows(); ++col) {
            const double w = inv * f.left(col, j);
            double* pc = p.col(col);
            for (std::size_t row = 0; row < a.cols(); ++row) {
                pc[row] += f.right_t(j, row) * w;
            }
        }
    }
    return p;
}

} // namespace mfpod
