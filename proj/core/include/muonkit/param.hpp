#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "muonkit/tensor.hpp"

namespace muonkit {

/// A 2D or 1D dense value: a parameter, a gradient, or an optimizer buffer.
using Tensor = std::variant<Matrix, Vector>;

enum class ShapeKind { matrix, vector };

/// What a parameter is used for. Only consulted when partitioning.
enum class Role { hidden_matrix, embedding, bias, gain };

std::string_view to_string(Role role) noexcept;

struct ParamTensor {
    std::string name;
    Role role = Role::hidden_matrix;
    Tensor value;

    ShapeKind shape_kind() const noexcept {
        return std::holds_alternative<Matrix>(value) ? ShapeKind::matrix : ShapeKind::vector;
    }
};

inline ShapeKind shape_kind(const Tensor& t) noexcept {
    return std::holds_alternative<Matrix>(t) ? ShapeKind::matrix : ShapeKind::vector;
}

/// Zero tensor with the same kind and shape as `t`.
Tensor zeros_like(const Tensor& t);

bool same_shape(const Tensor& x, const Tensor& y) noexcept;

std::span<const double> values(const Tensor& t) noexcept;
std::span<double> values(Tensor& t) noexcept;

/// "3x4" or "[5]".
std::string shape_string(const Tensor& t);

}    // namespace muonkit
