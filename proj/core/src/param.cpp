#include "muonkit/param.hpp"

namespace muonkit {

std::string_view to_string(Role role) noexcept {
    switch (role) {
        case Role::hidden_matrix: return "hidden_matrix";
        case Role::embedding: return "embedding";
        case Role::bias: return "bias";
        case Role::gain: return "gain";
    }
    return "unknown";
}

Tensor zeros_like(const Tensor& t) {
    if (const auto* m = std::get_if<Matrix>(&t)) {
        return Matrix(m->rows(), m->cols());
    }
    return Vector(std::get<Vector>(t).size());
}

bool same_shape(const Tensor& x, const Tensor& y) noexcept {
    if (x.index() != y.index()) {
        return false;
    }
    if (const auto* m = std::get_if<Matrix>(&x)) {
        return m->same_shape(std::get<Matrix>(y));
    }
    return std::get<Vector>(x).size() == std::get<Vector>(y).size();
}

std::span<const double> values(const Tensor& t) noexcept {
    return std::visit([](const auto& v) { return std::span<const double>(v.data()); }, t);
}

std::span<double> values(Tensor& t) noexcept {
    return std::visit([](auto& v) { return v.data(); }, t);
}

std::string shape_string(const Tensor& t) {
    if (const auto* m = std::get_if<Matrix>(&t)) {
        return std::to_string(m->rows()) + "x" + std::to_string(m->cols());
    }
    return "[" + std::to_string(std::get<Vector>(t).size()) + "]";
}

}    // namespace muonkit
