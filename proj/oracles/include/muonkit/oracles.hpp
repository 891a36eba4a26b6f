#pragma once

// Brute-force references for testing the production path. Nothing in the
// core library depends on this target.

#include <functional>
#include <span>
#include <vector>

#include "muonkit/models.hpp"
#include "muonkit/newton_schulz.hpp"

namespace muonkit::oracles {

/// Thin SVD a = U·diag(S)·Vᵀ with k = min(rows, cols): U is rows x k,
/// V is cols x k, S is non-negative and descending.
struct SvdResult {
    Matrix u;
    Vector s;
    Matrix v;
};

inline constexpr int kJacobiMaxSweeps = 60;
inline constexpr double kJacobiTolerance = 1e-14;

/// One-sided (Hestenes) Jacobi SVD. Oracle scale only (up to 64x64).
/// Throws Error if the sweeps do not converge.
SvdResult svd_jacobi(const Matrix& a);

/// U·Vᵀ. Throws InvalidArgument when the smallest singular value is <= 1e-10.
Matrix polar_factor(const Matrix& a);

/// U·diag(f(s))·Vᵀ for a thin SVD.
Matrix apply_spectral(const SvdResult& svd, const std::function<double(double)>& f);

/// Expected NS output for g: U·phi^steps(S/‖g‖_F)·Vᵀ.
Matrix ns_reference(const Matrix& g, const NsConfig& cfg = {});

using ParamLossFn = std::function<double(std::span<const ParamTensor>)>;

/// Central differences (L(θ+eps) − L(θ−eps)) / (2·eps) for every scalar entry
/// of every parameter. Throws NonFiniteError if a probe loss is not finite.
std::vector<Tensor> finite_diff_grads(const ParamLossFn& loss_fn, std::vector<ParamTensor> params, double eps);

using ModelLossFn = std::function<double(const MlpModel&, const Batch&)>;

std::vector<Tensor> finite_diff_grads(const ModelLossFn& loss_fn, const MlpModel& model, const Batch& batch,
                                      double eps);

/// diag_extract(ns_orthogonalize(diag_embed(v))): the literal dense form of
/// the 1D MuonAll update. O(n²) memory, so v is limited to 256 entries.
Vector muonall_1d_dense_oracle(const Vector& v, const NsConfig& cfg = {});

}    // namespace muonkit::oracles
