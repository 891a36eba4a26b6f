#include "muonkit/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "muonkit/oracles.hpp"
#include "muonkit/rng.hpp"

namespace muonkit::oracles {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Matrix random_matrix(SplitMix64& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
    std::vector<double> data(rows * cols);
    for (double& x : data) x = rng.normal() * scale;
    return Matrix(rows, cols, std::move(data));
}

double tensor_relative_error(const Tensor& analytic, const Tensor& numeric) {
    auto a = values(analytic);
    auto n = values(numeric);
    double diff = 0.0;
    double mag = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - n[i]));
        mag = std::max({mag, std::abs(a[i]), std::abs(n[i])});
    }
    return mag > 0.0 ? diff / mag : 0.0;
}

}    // namespace

CheckResult check_ns_vs_svd(int count, std::size_t max_dim, double tolerance, std::uint64_t seed) {
    const auto start = Clock::now();
    CheckResult r{"ns-vs-svd", true, 0.0, tolerance, 0.0, {}};
    SplitMix64 rng(seed);
    for (int i = 0; i < count; ++i) {
        const auto rows = 1 + rng.below(max_dim);
        const auto cols = 1 + rng.below(max_dim);
        const Matrix g = random_matrix(rng, rows, cols);
        const Matrix expected = ns_reference(g);
        const Matrix got = ns_orthogonalize(g);
        const double err = frobenius_norm(axpy_scale(1.0, got, -1.0, expected)) / frobenius_norm(expected);
        if (err > r.worst) {
            r.worst = err;
            r.detail = "worst at " + std::to_string(rows) + "x" + std::to_string(cols);
        }
    }
    r.passed = r.worst <= tolerance;
    r.seconds = seconds_since(start);
    return r;
}

CheckResult check_diagonal_equivalence(int count, std::size_t max_len, double tolerance, std::uint64_t seed) {
    const auto start = Clock::now();
    CheckResult r{"muonall-1d-equivalence", true, 0.0, tolerance, 0.0, {}};
    SplitMix64 rng(seed);
    for (int i = 0; i < count; ++i) {
        const auto len = 1 + rng.below(max_len);
        std::vector<double> data(len);
        for (double& x : data) x = rng.normal();
        const Vector v(std::move(data));
        const Vector fast = ns_diagonal(v);
        const Vector dense = muonall_1d_dense_oracle(v);
        for (std::size_t k = 0; k < len; ++k) {
            r.worst = std::max(r.worst, std::abs(fast[k] - dense[k]));
        }
    }
    r.passed = r.worst <= tolerance;
    r.seconds = seconds_since(start);
    return r;
}

CheckResult check_gradients(int count, double tolerance, std::uint64_t seed) {
    const auto start = Clock::now();
    CheckResult r{"mlp-gradients", true, 0.0, tolerance, 0.0, {}};
    SplitMix64 rng(seed);
    for (int i = 0; i < count; ++i) {
        MlpDims dims;
        dims.in_dim = 2 + rng.below(5);
        dims.hidden = 3 + rng.below(6);
        dims.n_classes = 2 + rng.below(4);
        dims.matrix_only = i % 5 == 4;
        MlpModel model = init_model(rng.next(), dims);
        // Move away from the symmetric initialization so every term matters.
        for (auto& p : model.params()) {
            for (double& x : values(p.value)) x += 0.5 * rng.normal();
        }
        constexpr std::size_t kBatch = 4;
        Batch batch{random_matrix(rng, kBatch, dims.in_dim), {}};
        for (std::size_t k = 0; k < kBatch; ++k) {
            batch.labels.push_back(static_cast<int>(rng.below(dims.n_classes)));
        }

        const LossAndGrads analytic = loss_and_grads(model, batch);
        const auto numeric = finite_diff_grads(
            [](const MlpModel& m, const Batch& b) { return loss(m, b); }, model, batch, 1e-6);
        for (std::size_t k = 0; k < numeric.size(); ++k) {
            const double err = tensor_relative_error(analytic.grads[k], numeric[k]);
            if (err > r.worst) {
                r.worst = err;
                r.detail = "worst: pair " + std::to_string(i) + " parameter " + model.params()[k].name;
            }
        }
    }
    r.passed = r.worst <= tolerance;
    r.seconds = seconds_since(start);
    return r;
}

std::vector<CheckResult> run_verify_suites() {
    return {check_ns_vs_svd(), check_diagonal_equivalence(), check_gradients()};
}

std::string format_result(const CheckResult& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s  %-24s worst=%.3e tol=%.1e (%.2f s)", r.passed ? "PASS" : "FAIL",
                  r.name.c_str(), r.worst, r.tolerance, r.seconds);
    std::string out = buf;
    if (!r.detail.empty()) {
        out += "  " + r.detail;
    }
    return out;
}

}    // namespace muonkit::oracles
