#include "muonkit/optimizers.hpp"

#include <cmath>
#include <set>
#include <string>

#include "muonkit/error.hpp"

namespace muonkit {

std::string_view to_string(OptimizerKind kind) noexcept {
    switch (kind) {
        case OptimizerKind::adamw: return "adamw";
        case OptimizerKind::muon: return "muon";
        case OptimizerKind::muonall: return "muonall";
    }
    return "unknown";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
    if (name == "adamw") return OptimizerKind::adamw;
    if (name == "muon") return OptimizerKind::muon;
    if (name == "muonall") return OptimizerKind::muonall;
    throw InvalidArgument("unknown optimizer '" + std::string(name) + "' (expected adamw, muon or muonall)");
}

void AdamHyper::validate() const {
    if (!(lr > 0.0)) throw InvalidArgument("AdamW: lr must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidArgument("AdamW: beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidArgument("AdamW: beta2 must be in [0, 1)");
    if (!(eps > 0.0)) throw InvalidArgument("AdamW: eps must be > 0");
    if (!(weight_decay >= 0.0)) throw InvalidArgument("AdamW: weight_decay must be >= 0");
}

void MuonHyper::validate() const {
    if (!(lr_matrix > 0.0)) throw InvalidArgument("Muon: lr_matrix must be > 0");
    if (!(lr_aux > 0.0)) throw InvalidArgument("Muon: lr_aux must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("Muon: momentum must be in [0, 1)");
    if (!(weight_decay >= 0.0)) throw InvalidArgument("Muon: weight_decay must be >= 0");
    ns.validate();
    AdamHyper aux = adam_aux;
    aux.lr = lr_aux;
    aux.validate();
}

ParamGroups partition_params(std::span<const ParamTensor> params, OptimizerKind kind, bool embeddings_to_aux) {
    std::set<std::string_view> names;
    for (const auto& p : params) {
        if (!names.insert(p.name).second) {
            throw InvalidArgument("duplicate parameter name '" + p.name + "'");
        }
    }
    ParamGroups groups;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const bool to_ns = params[i].shape_kind() == ShapeKind::matrix &&
                           !(embeddings_to_aux && params[i].role == Role::embedding);
        if (kind != OptimizerKind::muon || to_ns) {
            groups.primary.push_back(i);
        } else {
            groups.aux.push_back(i);
        }
    }
    return groups;
}

namespace {

void require_lr(double lr_now) {
    if (!(lr_now >= 0.0) || !std::isfinite(lr_now)) {
        throw InvalidArgument("learning rate must be finite and >= 0");
    }
}

void require_grad(const ParamTensor& param, const Tensor& grad) {
    if (!same_shape(param.value, grad)) {
        throw ShapeError("gradient for '" + param.name + "' has shape " + shape_string(grad) +
                         ", parameter has " + shape_string(param.value));
    }
    if (!all_finite(values(grad))) {
        throw NonFiniteError("non-finite gradient for '" + param.name + "'");
    }
}

}    // namespace

void adamw_step(ParamTensor& param, const Tensor& grad, AdamState& state, const AdamHyper& hyper,
                double lr_now) {
    require_lr(lr_now);
    require_grad(param, grad);
    if (state.t == 0) {
        state.m = zeros_like(param.value);
        state.v = zeros_like(param.value);
    }
    if (!same_shape(state.m, param.value) || !same_shape(state.v, param.value)) {
        throw ShapeError("AdamW state for '" + param.name + "' does not match its parameter");
    }

    state.t += 1;
    const auto t = static_cast<double>(state.t);
    const double bias1 = 1.0 - std::pow(hyper.beta1, t);
    const double bias2 = 1.0 - std::pow(hyper.beta2, t);
    const double decay = 1.0 - lr_now * hyper.weight_decay;

    auto theta = values(param.value);
    auto g = values(grad);
    auto m = values(state.m);
    auto v = values(state.v);
    for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
        v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * (g[i] * g[i]);
        const double m_hat = m[i] / bias1;
        const double v_hat = v[i] / bias2;
        theta[i] *= decay;
        theta[i] -= lr_now * m_hat / (std::sqrt(v_hat) + hyper.eps);
    }
    require_finite(theta, "AdamW update");
}

void muon_matrix_step(Matrix& param, const Matrix& grad, Matrix& buffer, const MuonHyper& hyper,
                      double lr_now, double update_scale) {
    require_lr(lr_now);
    if (!param.same_shape(grad)) {
        throw ShapeError("muon_matrix_step: gradient shape does not match parameter");
    }
    require_finite(grad.data(), "Muon gradient");
    if (buffer.empty() && !param.empty()) {
        buffer = Matrix(param.rows(), param.cols());
    }
    if (!buffer.same_shape(param)) {
        throw ShapeError("muon_matrix_step: momentum buffer shape does not match parameter");
    }

    const double mu = hyper.momentum;
    Matrix next_buffer = axpy_scale(mu, buffer, 1.0, grad);
    const Matrix update = ns_orthogonalize(axpy_scale(1.0, grad, mu, next_buffer), hyper.ns);

    Matrix next_param = hyper.weight_decay > 0.0 ? scale(1.0 - lr_now * hyper.weight_decay, param) : param;
    next_param = axpy_scale(1.0, next_param, -lr_now * update_scale, update);

    buffer = std::move(next_buffer);
    param = std::move(next_param);
}

namespace {

void muon_vector_step(Vector& param, const Vector& grad, Vector& buffer, const MuonHyper& hyper, double lr_now,
                      double update_scale) {
    if (buffer.size() != param.size()) {
        buffer = Vector(param.size());
    }
    const double mu = hyper.momentum;
    Vector next_buffer = axpy_scale(mu, buffer, 1.0, grad);
    const Vector update = ns_diagonal(axpy_scale(1.0, grad, mu, next_buffer), hyper.ns);

    Vector next_param = hyper.weight_decay > 0.0 ? scale(1.0 - lr_now * hyper.weight_decay, param) : param;
    next_param = axpy_scale(1.0, next_param, -lr_now * update_scale, update);

    buffer = std::move(next_buffer);
    param = std::move(next_param);
}

double scale_for(const MuonHyper& hyper, const ParamTensor& param) {
    return hyper.update_scale ? hyper.update_scale(param) : 1.0;
}

}    // namespace

void muonall_step(ParamTensor& param, const Tensor& grad, MomentumState& state, const MuonHyper& hyper,
                  double lr_now) {
    require_lr(lr_now);
    require_grad(param, grad);
    if (state.buffer.index() != param.value.index() || !same_shape(state.buffer, param.value)) {
        if (!values(state.buffer).empty()) {
            throw ShapeError("momentum buffer for '" + param.name + "' does not match its parameter");
        }
        state.buffer = zeros_like(param.value);
    }
    const double s = scale_for(hyper, param);
    if (auto* m = std::get_if<Matrix>(&param.value)) {
        muon_matrix_step(*m, std::get<Matrix>(grad), std::get<Matrix>(state.buffer), hyper, lr_now, s);
    } else {
        muon_vector_step(std::get<Vector>(param.value), std::get<Vector>(grad), std::get<Vector>(state.buffer),
                         hyper, lr_now, s);
    }
}

void Optimizer::step(std::span<ParamTensor> params, std::span<const Tensor> grads, const GroupLr& lr) {
    if (params.size() != grads.size()) {
        throw ShapeError("optimizer step: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
    }
    require_lr(lr.primary);
    for (std::size_t i = 0; i < params.size(); ++i) {
        require_grad(params[i], grads[i]);
    }
    do_step(params, grads, lr);
}

AdamW::AdamW(AdamHyper hyper) : hyper_(hyper) { hyper_.validate(); }

void AdamW::do_step(std::span<ParamTensor> params, std::span<const Tensor> grads, const GroupLr& lr) {
    if (states_.empty()) {
        states_.resize(params.size());
    } else if (states_.size() != params.size()) {
        throw ShapeError("AdamW: parameter count changed between steps");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        adamw_step(params[i], grads[i], states_[i], hyper_, lr.primary);
    }
}

std::vector<const Tensor*> AdamW::state_buffers() const {
    std::vector<const Tensor*> out;
    for (const auto& s : states_) {
        out.push_back(&s.m);
        out.push_back(&s.v);
    }
    return out;
}

Muon::Muon(MuonHyper hyper) : hyper_(std::move(hyper)) {
    hyper_.validate();
    aux_hyper_ = hyper_.adam_aux;
    aux_hyper_.lr = hyper_.lr_aux;
}

void Muon::do_step(std::span<ParamTensor> params, std::span<const Tensor> grads, const GroupLr& lr) {
    require_lr(lr.aux);
    if (!initialized_) {
        groups_ = partition_params(params, OptimizerKind::muon, hyper_.embeddings_to_aux);
        momentum_.resize(params.size());
        adam_.resize(params.size());
        initialized_ = true;
    } else if (momentum_.size() != params.size()) {
        throw ShapeError("Muon: parameter count changed between steps");
    }
    for (std::size_t i : groups_.primary) {
        auto& p = params[i];
        auto& buffer = momentum_[i].buffer;
        if (!std::holds_alternative<Matrix>(buffer)) {
            buffer = Matrix();
        }
        muon_matrix_step(std::get<Matrix>(p.value), std::get<Matrix>(grads[i]), std::get<Matrix>(buffer), hyper_,
                         lr.primary, scale_for(hyper_, p));
    }
    for (std::size_t i : groups_.aux) {
        adamw_step(params[i], grads[i], adam_[i], aux_hyper_, lr.aux);
    }
}

std::vector<const Tensor*> Muon::state_buffers() const {
    std::vector<const Tensor*> out;
    for (std::size_t i : groups_.primary) {
        out.push_back(&momentum_[i].buffer);
    }
    for (std::size_t i : groups_.aux) {
        out.push_back(&adam_[i].m);
        out.push_back(&adam_[i].v);
    }
    return out;
}

MuonAll::MuonAll(MuonHyper hyper) : hyper_(std::move(hyper)) { hyper_.validate(); }

void MuonAll::do_step(std::span<ParamTensor> params, std::span<const Tensor> grads, const GroupLr& lr) {
    if (states_.empty()) {
        states_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            states_[i].buffer = zeros_like(params[i].value);
        }
    } else if (states_.size() != params.size()) {
        throw ShapeError("MuonAll: parameter count changed between steps");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        muonall_step(params[i], grads[i], states_[i], hyper_, lr.primary);
    }
}

std::vector<const Tensor*> MuonAll::state_buffers() const {
    std::vector<const Tensor*> out;
    for (const auto& s : states_) {
        out.push_back(&s.buffer);
    }
    return out;
}

double lr_schedule(std::int64_t step, std::int64_t total_steps, double lr0) {
    if (total_steps < 1) {
        throw InvalidArgument("lr_schedule: total_steps must be >= 1");
    }
    if (step < 0 || step > total_steps) {
        throw InvalidArgument("lr_schedule: step " + std::to_string(step) + " outside [0, " +
                              std::to_string(total_steps) + "]");
    }
    const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
    return (1.0 - frac) * lr0 + frac * kFinalLr;
}

}    // namespace muonkit
