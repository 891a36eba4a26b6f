#include "muonkit/newton_schulz.hpp"

#include "muonkit/error.hpp"

namespace muonkit {

void NsConfig::validate() const {
    if (steps < 1) {
        throw InvalidArgument("NsConfig: steps must be >= 1");
    }
    if (!(eps_floor > 0.0)) {
        throw InvalidArgument("NsConfig: eps_floor must be > 0");
    }
}

namespace {

// Same evaluation order as one dense step restricted to a diagonal entry:
// x' = a*x + (b*x² + c*x²*x²)*x.
double phi_once(double x, const NsConfig& cfg) {
    const double s2 = x * x;
    const double poly = cfg.b * s2 + cfg.c * (s2 * s2);
    return cfg.a * x + poly * x;
}

}    // namespace

double phi_scalar(double x, const NsConfig& cfg) {
    cfg.validate();
    for (int i = 0; i < cfg.steps; ++i) {
        x = phi_once(x, cfg);
    }
    return x;
}

Matrix ns_orthogonalize(const Matrix& g, const NsConfig& cfg) {
    cfg.validate();
    if (g.empty()) {
        throw InvalidArgument("ns_orthogonalize: empty matrix");
    }
    require_finite(g.data(), "ns_orthogonalize input");

    const double norm = frobenius_norm(g);
    if (norm <= cfg.eps_floor) {
        return Matrix(g.rows(), g.cols());
    }

    const bool tall = g.rows() > g.cols();
    Matrix x = tall ? transpose(g) : g;
    for (double& v : x.data()) {
        v /= norm;
    }

    for (int step = 0; step < cfg.steps; ++step) {
        const Matrix a = gram(x);
        // a is exactly symmetric, so gram(a) == a·a.
        const Matrix poly = axpy_scale(cfg.b, a, cfg.c, gram(a));
        x = axpy_scale(cfg.a, x, 1.0, matmul(poly, x));
    }

    return tall ? transpose(x) : x;
}

Vector ns_diagonal(const Vector& d, const NsConfig& cfg) {
    cfg.validate();
    if (d.empty()) {
        throw InvalidArgument("ns_diagonal: empty vector");
    }
    const double norm = euclidean_norm(d);
    Vector out(d.size());
    if (norm <= cfg.eps_floor) {
        return out;
    }
    for (std::size_t i = 0; i < d.size(); ++i) {
        out[i] = phi_scalar(d[i] / norm, cfg);
    }
    return out;
}

}    // namespace muonkit
