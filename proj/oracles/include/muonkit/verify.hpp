#pragma once

// Seeded oracle suites, shared by `muonkit verify` and the acceptance tests.

#include <cstdint>
#include <string>
#include <vector>

namespace muonkit::oracles {

struct CheckResult {
    std::string name;
    bool passed = false;
    /// Largest error observed, in the unit the tolerance is stated in.
    double worst = 0.0;
    double tolerance = 0.0;
    double seconds = 0.0;
    std::string detail;
};

/// ns_orthogonalize vs U·phi^5(S)·Vᵀ over `count` random matrices with
/// shapes in {1..max_dim}², relative Frobenius error.
CheckResult check_ns_vs_svd(int count = 100, std::size_t max_dim = 32, double tolerance = 1e-6,
                            std::uint64_t seed = 20240601);

/// ns_diagonal vs the dense diag_embed → NS → diag_extract path, absolute
/// per-entry error over vectors of length 1..max_len.
CheckResult check_diagonal_equivalence(int count = 50, std::size_t max_len = 64, double tolerance = 1e-9,
                                       std::uint64_t seed = 20240602);

/// Analytic MLP gradients vs central differences (eps 1e-6) on random
/// models and 4-sample batches. Error per parameter tensor is
/// max|analytic − numeric| / max(max|analytic|, max|numeric|).
CheckResult check_gradients(int count = 20, double tolerance = 1e-5, std::uint64_t seed = 20240603);

/// The three suites above with default arguments.
std::vector<CheckResult> run_verify_suites();

/// "PASS  name  worst=... tol=... (1.23 s)".
std::string format_result(const CheckResult& r);

}    // namespace muonkit::oracles
