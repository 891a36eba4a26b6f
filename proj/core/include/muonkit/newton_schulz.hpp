#pragma once

// Quintic Newton-Schulz iteration for the polar factor U·Vᵀ of a matrix.
//
// One step maps X to a·X + b·(X·Xᵀ)·X + c·(X·Xᵀ)²·X, which acts on every
// singular value s independently as phi(s) = a·s + b·s³ + c·s⁵. Starting
// from X = G / ‖G‖_F (all singular values in [0, 1]) the default
// coefficients drive the singular values into a band around 1.

#include "muonkit/tensor.hpp"

namespace muonkit {

struct NsConfig {
    int steps = 5;
    double a = 3.4445;
    double b = -4.7750;
    double c = 2.0315;
    /// Inputs whose norm is at or below this map to zero.
    double eps_floor = 1e-12;

    /// Throws InvalidArgument unless steps >= 1 and eps_floor > 0.
    void validate() const;
};

/// phi composed `cfg.steps` times, evaluated at x. Odd in x.
double phi_scalar(double x, const NsConfig& cfg = {});

/// Approximate polar factor of `g`, same shape as `g`.
///
/// Tall inputs are iterated in transposed form so the Gram matrix is the
/// smaller of the two; the result is transposed back.
Matrix ns_orthogonalize(const Matrix& g, const NsConfig& cfg = {});

/// The iteration applied to diag(d), computed in O(n): diagonal matrices stay
/// diagonal under every step, so the result is phi^steps(d_i / ‖d‖₂) per entry.
Vector ns_diagonal(const Vector& d, const NsConfig& cfg = {});

}    // namespace muonkit
