#include "muonkit/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "muonkit/error.hpp"

namespace muonkit::oracles {

namespace {

double column_dot(const Matrix& m, std::size_t p, std::size_t q) {
    double sum = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        sum += m(r, p) * m(r, q);
    }
    return sum;
}

double column_dot_total(const Matrix& m) {
    double sum = 0.0;
    for (double x : m.data()) sum += x * x;
    return sum;
}

void rotate_columns(Matrix& m, std::size_t p, std::size_t q, double c, double s) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double xp = m(r, p);
        const double xq = m(r, q);
        m(r, p) = c * xp - s * xq;
        m(r, q) = s * xp + c * xq;
    }
}

// Replaces column j of `u` (assumed null) by a unit vector orthogonal to
// every column in `keep`.
void complete_column(Matrix& u, std::size_t j, const std::vector<std::size_t>& keep) {
    for (std::size_t e = 0; e < u.rows(); ++e) {
        std::vector<double> cand(u.rows(), 0.0);
        cand[e] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t k : keep) {
                double d = 0.0;
                for (std::size_t r = 0; r < u.rows(); ++r) d += cand[r] * u(r, k);
                for (std::size_t r = 0; r < u.rows(); ++r) cand[r] -= d * u(r, k);
            }
        }
        double norm = 0.0;
        for (double x : cand) norm += x * x;
        norm = std::sqrt(norm);
        if (norm > 1e-6) {
            for (std::size_t r = 0; r < u.rows(); ++r) u(r, j) = cand[r] / norm;
            return;
        }
    }
    throw Error("svd_jacobi: could not complete an orthonormal basis");
}

// Requires a.rows() >= a.cols().
SvdResult svd_tall(const Matrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    Matrix u = a;
    Matrix v = Matrix::identity(n);

    // Columns this small relative to the whole matrix are numerically null;
    // rotating them against anything only churns rounding noise.
    const double negligible = 1e-30 * column_dot_total(a);
    bool converged = n < 2;
    for (int sweep = 0; sweep < kJacobiMaxSweeps && !converged; ++sweep) {
        converged = true;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double alpha = column_dot(u, p, p);
                const double beta = column_dot(u, q, q);
                const double gamma = column_dot(u, p, q);
                if (gamma == 0.0 || alpha <= negligible || beta <= negligible ||
                    std::abs(gamma) <= kJacobiTolerance * std::sqrt(alpha * beta)) {
                    continue;
                }
                converged = false;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                rotate_columns(u, p, q, c, s);
                rotate_columns(v, p, q, c, s);
            }
        }
    }
    if (!converged) {
        throw Error("svd_jacobi: no convergence within " + std::to_string(kJacobiMaxSweeps) + " sweeps");
    }

    std::vector<double> sv(n);
    for (std::size_t j = 0; j < n; ++j) {
        sv[j] = std::sqrt(column_dot(u, j, j));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sv[x] > sv[y]; });

    SvdResult out{Matrix(m, n), Vector(n), Matrix(n, n)};
    // Columns at rounding level of the largest are treated as null.
    const double cutoff = sv[order.front()] * 1e-13;
    std::vector<std::size_t> kept;
    std::vector<std::size_t> null_cols;
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.s[j] = sv[src];
        for (std::size_t r = 0; r < n; ++r) out.v(r, j) = v(r, src);
        if (sv[src] > cutoff) {
            for (std::size_t r = 0; r < m; ++r) out.u(r, j) = u(r, src) / sv[src];
            kept.push_back(j);
        } else {
            null_cols.push_back(j);
        }
    }
    for (std::size_t j : null_cols) {
        complete_column(out.u, j, kept);
        kept.push_back(j);
    }
    return out;
}

}    // namespace

SvdResult svd_jacobi(const Matrix& a) {
    if (a.empty()) {
        throw InvalidArgument("svd_jacobi: empty matrix");
    }
    require_finite(a.data(), "svd_jacobi input");
    if (a.rows() >= a.cols()) {
        return svd_tall(a);
    }
    SvdResult t = svd_tall(transpose(a));
    return SvdResult{std::move(t.v), std::move(t.s), std::move(t.u)};
}

Matrix apply_spectral(const SvdResult& svd, const std::function<double(double)>& f) {
    Matrix scaled = svd.u;
    for (std::size_t r = 0; r < scaled.rows(); ++r) {
        for (std::size_t j = 0; j < scaled.cols(); ++j) {
            scaled(r, j) *= f(svd.s[j]);
        }
    }
    return matmul(scaled, transpose(svd.v));
}

Matrix polar_factor(const Matrix& a) {
    const SvdResult svd = svd_jacobi(a);
    const double smallest = svd.s[svd.s.size() - 1];
    if (smallest <= 1e-10) {
        throw InvalidArgument("polar_factor: rank-deficient input (smallest singular value " +
                              std::to_string(smallest) + ")");
    }
    return matmul(svd.u, transpose(svd.v));
}

Matrix ns_reference(const Matrix& g, const NsConfig& cfg) {
    const double norm = frobenius_norm(g);
    if (norm <= cfg.eps_floor) {
        return Matrix(g.rows(), g.cols());
    }
    return apply_spectral(svd_jacobi(g), [&](double s) { return phi_scalar(s / norm, cfg); });
}

std::vector<Tensor> finite_diff_grads(const ParamLossFn& loss_fn, std::vector<ParamTensor> params, double eps) {
    if (!(eps > 0.0)) {
        throw InvalidArgument("finite_diff_grads: eps must be > 0");
    }
    std::vector<Tensor> grads;
    grads.reserve(params.size());
    for (auto& p : params) {
        Tensor g = zeros_like(p.value);
        auto theta = values(p.value);
        auto out = values(g);
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double saved = theta[i];
            theta[i] = saved + eps;
            const double plus = loss_fn(params);
            theta[i] = saved - eps;
            const double minus = loss_fn(params);
            theta[i] = saved;
            if (!std::isfinite(plus) || !std::isfinite(minus)) {
                throw NonFiniteError("finite_diff_grads: non-finite loss probing '" + p.name + "'");
            }
            out[i] = (plus - minus) / (2.0 * eps);
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

std::vector<Tensor> finite_diff_grads(const ModelLossFn& loss_fn, const MlpModel& model, const Batch& batch,
                                      double eps) {
    const MlpDims dims = model.dims();
    auto wrapped = [&](std::span<const ParamTensor> ps) {
        return loss_fn(MlpModel(dims, std::vector<ParamTensor>(ps.begin(), ps.end())), batch);
    };
    return finite_diff_grads(wrapped, std::vector<ParamTensor>(model.params().begin(), model.params().end()), eps);
}

Vector muonall_1d_dense_oracle(const Vector& v, const NsConfig& cfg) {
    if (v.size() > 256) {
        throw InvalidArgument("muonall_1d_dense_oracle: vector longer than 256 entries");
    }
    return diag_extract(ns_orthogonalize(diag_embed(v), cfg));
}

}    // namespace muonkit::oracles
